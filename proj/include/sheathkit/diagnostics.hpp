#pragma once

// Paper functionals on snapshots: the weighted perturbation
// f = M1^{-1/2} (g - g^s), hydrodynamic moments (n, m), discrete weighted
// Sobolev norms, the explicit stability condition and its quadratic form,
// decay/growth rate fits, and the constant-selection scans.
//
// Reduced representation: the 3D perturbation of the paper factorizes as
// f_3d = f(x, xi_1) * mperp^{1/2}(xi'), so 3D L2 norms equal reduced norms
// and the transverse H1 contribution is the analytic factor 1/(2 theta) on
// the L2 part (from |grad mperp^{1/2}|^2 integrating to 1/(2 theta)).

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sheathkit/distributions.hpp"
#include "sheathkit/errors.hpp"
#include "sheathkit/field.hpp"
#include "sheathkit/stationary.hpp"

namespace sheathkit {

// Deterministic PRNG (splitmix64): identical seeds give identical streams on
// every platform, which the run manifests rely on.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

// Weighted perturbation on the field grid. Cells where both g and g^s are
// below 1e-300 are zeroed; a truly nonzero deviation sitting where M1
// underflows means the perturbation left the Gaussian-weighted class.
struct PerturbationField {
    int nx = 0, nv = 0;
    double dx = 0.0, dv = 0.0;
    double x0 = 0.0, v0 = 0.0; // first cell centers
    std::vector<double> f;     // f[ix * nv + iv]

    double at(int i, int j) const { return f[static_cast<std::size_t>(i) * nv + j]; }
    double& at(int i, int j) { return f[static_cast<std::size_t>(i) * nv + j]; }
    double x_center(int i) const { return x0 + i * dx; }
    double v_center(int j) const { return v0 + j * dv; }
};

inline PerturbationField perturbation_f(const PhaseSpaceField& field,
                                        const std::vector<double>& g_s,
                                        const EndState& es) {
    PerturbationField p;
    p.nx = field.nx;
    p.nv = field.nv;
    p.dx = field.dx;
    p.dv = field.dv;
    p.x0 = field.x_center(0);
    p.v0 = field.v_center(0);
    p.f.assign(field.g.size(), 0.0);

    constexpr double log_underflow = -708.0;
    for (int j = 0; j < field.nv; ++j) {
        const double lm = es.log_m1(field.v_center(j));
        for (int i = 0; i < field.nx; ++i) {
            const double g = field.at(i, j);
            const double gs = g_s[static_cast<std::size_t>(i) * field.nv + j];
            if (std::abs(g) < 1e-300 && std::abs(gs) < 1e-300)
                continue;
            const double diff = g - gs;
            if (diff == 0.0)
                continue;
            if (lm < log_underflow)
                throw WeightOverflow("nonzero perturbation where M1 underflows");
            p.at(i, j) = diff * std::exp(-0.5 * lm);
        }
    }
    return p;
}

struct Moments {
    std::vector<double> n; // density perturbation, per x cell
    std::vector<double> m; // flux perturbation
};

inline Moments moments(const PerturbationField& p, const EndState& es) {
    Moments mo;
    mo.n.assign(static_cast<std::size_t>(p.nx), 0.0);
    mo.m.assign(static_cast<std::size_t>(p.nx), 0.0);
    std::vector<double> half_m1(static_cast<std::size_t>(p.nv));
    for (int j = 0; j < p.nv; ++j)
        half_m1[static_cast<std::size_t>(j)] = std::exp(0.5 * es.log_m1(p.v_center(j)));
    for (int i = 0; i < p.nx; ++i) {
        double n_acc = 0.0, m_acc = 0.0;
        for (int j = 0; j < p.nv; ++j) {
            const double w = half_m1[static_cast<std::size_t>(j)] * p.at(i, j) * p.dv;
            n_acc += w;
            m_acc += w * p.v_center(j);
        }
        mo.n[static_cast<std::size_t>(i)] = n_acc;
        mo.m[static_cast<std::size_t>(i)] = m_acc;
    }
    return mo;
}

namespace fd {

// centered interior, 2nd-order one-sided ends, along x (stride nv) or v.
inline void d_dx(const PerturbationField& p, std::vector<double>& out) {
    const int nx = p.nx, nv = p.nv;
    out.assign(p.f.size(), 0.0);
    const double ih = 1.0 / (2.0 * p.dx);
    for (int j = 0; j < nv; ++j) {
        for (int i = 0; i < nx; ++i) {
            double v;
            if (i == 0)
                v = (-3.0 * p.at(0, j) + 4.0 * p.at(1, j) - p.at(2, j)) * ih;
            else if (i == nx - 1)
                v = (3.0 * p.at(nx - 1, j) - 4.0 * p.at(nx - 2, j) + p.at(nx - 3, j)) * ih;
            else
                v = (p.at(i + 1, j) - p.at(i - 1, j)) * ih;
            out[static_cast<std::size_t>(i) * nv + j] = v;
        }
    }
}

inline void d_dv(const PerturbationField& p, std::vector<double>& out) {
    const int nx = p.nx, nv = p.nv;
    out.assign(p.f.size(), 0.0);
    const double ih = 1.0 / (2.0 * p.dv);
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < nv; ++j) {
            double v;
            if (j == 0)
                v = (-3.0 * p.at(i, 0) + 4.0 * p.at(i, 1) - p.at(i, 2)) * ih;
            else if (j == nv - 1)
                v = (3.0 * p.at(i, nv - 1) - 4.0 * p.at(i, nv - 2) + p.at(i, nv - 3)) * ih;
            else
                v = (p.at(i, j + 1) - p.at(i, j - 1)) * ih;
            out[static_cast<std::size_t>(i) * nv + j] = v;
        }
    }
}

} // namespace fd

struct WeightedNorms {
    double beta = 0.0;
    double l2 = 0.0;          // ||e^{bx/2} f||
    double dx_l2 = 0.0;       // ||e^{bx/2} d_x f||
    double dv_l2 = 0.0;       // ||e^{bx/2} d_xi1 f||
    double transverse = 0.0;  // analytic xi' contribution, (1/2theta)^{1/2} l2
    double h1 = 0.0;          // full weighted H1 (x, all xi derivatives)
    double dissipation0 = 0.0; // ||e^{bx/2} |xi|^{1/2} f chi(xi<0)||
    double dissipation1 = 0.0; // same for the gradient
};

inline WeightedNorms weighted_h1(const PerturbationField& p, double beta,
                                 double theta_infty) {
    WeightedNorms w;
    w.beta = beta;

    std::vector<double> fx, fv;
    fd::d_dx(p, fx);
    fd::d_dv(p, fv);

    std::vector<double> ex(static_cast<std::size_t>(p.nx));
    for (int i = 0; i < p.nx; ++i)
        ex[static_cast<std::size_t>(i)] = std::exp(beta * p.x_center(i));

    const double cell = p.dx * p.dv;
    double l2 = 0, dxs = 0, dvs = 0, dis0 = 0, dis1 = 0;
    for (int i = 0; i < p.nx; ++i) {
        const double wx = ex[static_cast<std::size_t>(i)] * cell;
        for (int j = 0; j < p.nv; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * p.nv + j;
            const double f2 = p.f[k] * p.f[k];
            const double gx2 = fx[k] * fx[k];
            const double gv2 = fv[k] * fv[k];
            l2 += wx * f2;
            dxs += wx * gx2;
            dvs += wx * gv2;
            const double v = p.v_center(j);
            if (v < 0.0) {
                const double av = -v;
                dis0 += wx * av * f2;
                // |xi|^{1/2} grad f, chi(xi<0); transverse part of the
                // gradient carries the same analytic factor as below
                dis1 += wx * av * (gx2 + gv2 + f2 / (2.0 * theta_infty));
            }
        }
    }
    const double trans2 = l2 / (2.0 * theta_infty);
    w.l2 = std::sqrt(l2);
    w.dx_l2 = std::sqrt(dxs);
    w.dv_l2 = std::sqrt(dvs);
    w.transverse = std::sqrt(trans2);
    w.h1 = std::sqrt(l2 + dxs + dvs + trans2);
    w.dissipation0 = std::sqrt(dis0);
    w.dissipation1 = std::sqrt(dis1);
    return w;
}

inline double weighted_l2_x(const std::vector<double>& values, double x0, double dx,
                            double beta) {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        acc += std::exp(beta * (x0 + static_cast<double>(i) * dx)) * values[i] *
               values[i] * dx;
    return std::sqrt(acc);
}

// --- stability condition ----------------------------------------------------

// Energy-dissipation quadratic form: D = [[1,0,-d1],[0,1,-d2],[-d1,-d2,|u|/theta]]
// acting on (|| |xi|^{1/2} f ||, || |xi|^{1/2} d_x f ||, ||n||). The explicit
// condition asp1_lhs > 0 is equivalent to positive definiteness.
struct StabilityBudget {
    double d1 = 0.0;
    double d2 = 0.0;
    std::array<std::array<double, 3>, 3> D{};
    double asp1_lhs = 0.0;
    bool positive_definite = false;
    TheoryConstants constants;
};

inline StabilityBudget check_asp1(double rho_infty, double theta_infty,
                                  double u_infty, double mu, double beta, double r,
                                  double epsilon) {
    if (!(beta > 0.0 && beta < 1.0))
        throw InvalidConfig("check_asp1: beta must lie in (0,1)");
    if (!(epsilon > 0.0 && epsilon < 0.5 * r))
        throw InvalidConfig("check_asp1: epsilon must lie in (0, r/2)");
    if (!(u_infty < 0.0) || !(theta_infty > 0.0) || !(rho_infty > 0.0) || !(mu >= 0.0))
        throw InvalidConfig("check_asp1: invalid parameters");

    StabilityBudget b;
    const double et = eta(beta);
    const double one_eta = 1.0 + et;
    const double gap = r - 2.0 * epsilon;
    b.d1 = (std::sqrt(rho_infty / theta_infty) * std::sqrt(one_eta) + mu / beta) *
           std::sqrt(one_eta / gap);
    b.d2 = std::sqrt(1.0 + beta * beta * one_eta * one_eta) * mu /
           (beta * std::sqrt(gap));
    const double uot = -u_infty / theta_infty;
    b.D = {{{1.0, 0.0, -b.d1}, {0.0, 1.0, -b.d2}, {-b.d1, -b.d2, uot}}};
    b.asp1_lhs = uot - b.d1 * b.d1 - b.d2 * b.d2;

    // positive definiteness via leading principal minors of the matrix itself
    const auto& D = b.D;
    const double m1 = D[0][0];
    const double m2 = D[0][0] * D[1][1] - D[0][1] * D[1][0];
    const double m3 = D[0][0] * (D[1][1] * D[2][2] - D[1][2] * D[2][1]) -
                      D[0][1] * (D[1][0] * D[2][2] - D[1][2] * D[2][0]) +
                      D[0][2] * (D[1][0] * D[2][1] - D[1][1] * D[2][0]);
    b.positive_definite = m1 > 0.0 && m2 > 0.0 && m3 > 0.0;

    b.constants.mu_infty = mu;
    b.constants.eta_beta = et;
    b.constants.asp1_margin = b.asp1_lhs;
    return b;
}

inline StabilityBudget check_asp1(const EndState& es, double beta, double epsilon) {
    StabilityBudget b = check_asp1(es.rho_infty, es.config.theta_infty,
                                   es.config.u_infty, mu_infty(es), beta,
                                   es.config.r, epsilon);
    b.constants.bohm_integral = bohm_integral(es);
    return b;
}

// --- constant selection (Appendix-style scans) -------------------------------

enum class SelectionMode { condition_i, condition_ii };

struct SelectedConstants {
    bool found = false;
    double beta = 0.0;
    double theta_infty = 0.0;
    double u_infty = 0.0;
    double rho_infty = 0.0;
    double mu_infty = 0.0;
    double margin = 0.0;      // asp1_lhs at the selected point
    double best_margin = 0.0; // best margin seen (diagnostic on NotFound)
    double bohm_k = 0.0;
};

// Searches for parameters satisfying the explicit stability condition.
//  condition_i : r - 2 eps >= 1 and |u| > 1 fixed; theta scanned x1/2 from 1
//                down to 1e-8, beta scanned over {0.1..0.9} at each theta.
//  condition_ii: theta fixed, beta = 1/2; |u| scanned x2 from 1 up to 2^16.
// rho_inf and mu_inf are recomputed at every candidate via quasi-neutrality.
inline SelectedConstants select_constants(SelectionMode mode, PlasmaConfig base,
                                          double epsilon) {
    const double gap = base.r - 2.0 * epsilon;
    if (!(epsilon > 0.0 && epsilon < 0.5 * base.r))
        throw InvalidConfig("select_constants: epsilon must lie in (0, r/2)");

    SelectedConstants out;
    out.best_margin = -1e300;

    auto evaluate = [&](const PlasmaConfig& cfg, double beta) -> bool {
        if (!(-cfg.u_infty > cfg.r + 2.0 * cfg.sigma))
            return false; // invalid cut-off placement, skip candidate
        EndState es = normalize_quasi_neutral(cfg);
        const double k = bohm_integral(es);
        StabilityBudget b = check_asp1(es, beta, epsilon);
        if (b.asp1_lhs > out.best_margin)
            out.best_margin = b.asp1_lhs;
        if (b.asp1_lhs > 0.0 && k < 1.0) {
            out.found = true;
            out.beta = beta;
            out.theta_infty = cfg.theta_infty;
            out.u_infty = cfg.u_infty;
            out.rho_infty = es.rho_infty;
            out.mu_infty = b.constants.mu_infty;
            out.margin = b.asp1_lhs;
            out.bohm_k = k;
            return true;
        }
        return false;
    };

    if (mode == SelectionMode::condition_i) {
        if (!(gap >= 1.0))
            throw InvalidConfig("condition (i) requires r - 2*epsilon >= 1");
        if (!(-base.u_infty > 1.0))
            throw InvalidConfig("condition (i) requires |u_infty| > 1");
        for (double theta = 1.0; theta >= 1e-8; theta *= 0.5) {
            PlasmaConfig cfg = base;
            cfg.theta_infty = theta;
            for (int ib = 1; ib <= 9; ++ib)
                if (evaluate(cfg, 0.1 * ib))
                    return out;
        }
        return out;
    }

    // condition (ii): beta = 1/2 per the selection procedure
    for (double mag = 1.0; mag <= 65536.0; mag *= 2.0) {
        PlasmaConfig cfg = base;
        cfg.u_infty = -mag;
        if (evaluate(cfg, 0.5))
            return out;
    }
    return out;
}

// --- rate fitting and the energy functional ----------------------------------

struct RateFit {
    double gamma = 0.0; // in the e^{+-gamma t / 2} convention
    double slope = 0.0; // raw d log(norm) / dt
    double r2 = 0.0;
};

// Least-squares slope of log(norm) against t over [t_lo, t_hi].
// decay: gamma = -2 slope; growth: gamma = +2 slope.
inline RateFit fit_rate(const std::vector<double>& t, const std::vector<double>& norm,
                        double t_lo, double t_hi, bool growth = false) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi)
            continue;
        if (!(norm[i] > 0.0) || !std::isfinite(norm[i]))
            throw DegenerateSeries("fit_rate: nonpositive or non-finite norm in window");
        const double y = std::log(norm[i]);
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
        syy += y * y;
        ++n;
    }
    if (n < 2)
        throw DegenerateSeries("fit_rate: fewer than two samples in window");
    const double denom = n * sxx - sx * sx;
    RateFit fit;
    fit.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    const double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    const double intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi)
            continue;
        const double e = std::log(norm[i]) - (intercept + fit.slope * t[i]);
        ss_res += e * e;
    }
    fit.r2 = ss_tot > 0.0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    fit.gamma = (growth ? 2.0 : -2.0) * fit.slope;
    return fit;
}

// E(t) = ||e f||^2 + ||e d_x f||^2 + theta^{-1} ||e n||^2 + c ||e grad_xi f||^2,
// with the non-constructive coefficient exposed as a knob (default 1).
inline double energy_functional(const WeightedNorms& w, double n_l2_weighted,
                                double theta_infty, double c1_over_2c2 = 1.0) {
    const double grad_xi2 = w.dv_l2 * w.dv_l2 + w.transverse * w.transverse;
    return w.l2 * w.l2 + w.dx_l2 * w.dx_l2 +
           n_l2_weighted * n_l2_weighted / theta_infty + c1_over_2c2 * grad_xi2;
}

} // namespace sheathkit
