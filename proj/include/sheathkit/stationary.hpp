#pragma once

// Stationary sheath construction.
//
// The monotone sheath solves the first integral of the stationary Poisson
// equation,  (1/2) (dPhi/dx)^2 = V(Phi),  with the Sagdeev potential
//   V(phi) = int_0^phi ( n_i(s) - n_e(s) ) ds,
//   n_i(phi) = int F_inf(xi) (-xi_1)/sqrt(xi_1^2 + 2 phi) dxi.
// The solve inverts x(Phi) = int_Phi^{Phi_b} dphi / sqrt(2 V(phi)) on a
// geometric ladder of potential levels; the integrable log blow-up of x(Phi)
// as Phi -> 0 is handled by switching to the linearized exponential tail
// once Phi drops below a fixed fraction of Phi_b. The ion distribution is
// reconstructed in closed form from the energy characteristics:
//   F^s(x, xi) = F_inf(-sqrt(xi_1^2 - 2 Phi^s)) chi(xi_1^2 > 2 Phi^s) chi(xi_1 < 0).

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "sheathkit/config.hpp"
#include "sheathkit/distributions.hpp"
#include "sheathkit/errors.hpp"
#include "sheathkit/quadrature.hpp"

namespace sheathkit {

// n_i(phi) = int F_inf (-xi_1)/sqrt(xi_1^2 + 2 phi) dxi, reduced to 1D.
// Equals the ion density of F^s at any x with Phi^s(x) = phi; n_i(0) = 1.
inline double ion_density(double phi, const EndState& es) {
    if (!(phi >= 0.0))
        throw InvalidConfig("ion_density: phi must be nonnegative");
    return end_state_moment(
        es, [&](double xi) { return -xi / std::sqrt(xi * xi + 2.0 * phi); });
}

// Sagdeev potential tabulated on [0, phi_max]: V' = n_i - n_e at the nodes,
// V by cumulative per-cell Gauss panels, cubic Hermite in between (values and
// exact derivatives at nodes keep the evaluation C^1 and 4th order).
struct SagdeevPotential {
    std::vector<double> phi;  // nodes, ascending from 0
    std::vector<double> v;    // V at nodes
    std::vector<double> dv;   // V' at nodes
    double bohm_k = 0.0;
    ElectronModel model = ElectronModel::boltzmann;

    double phi_max() const { return phi.back(); }

    double value(double p) const { return eval(p, false); }
    double derivative(double p) const { return eval(p, true); }

  private:
    double eval(double p, bool deriv) const {
        if (p <= 0.0)
            return deriv ? dv.front() : 0.0;
        if (p >= phi.back())
            p = phi.back();
        auto it = std::upper_bound(phi.begin(), phi.end(), p);
        std::size_t k = std::min(static_cast<std::size_t>(it - phi.begin()),
                                 phi.size() - 1) - 1;
        const double h = phi[k + 1] - phi[k];
        const double s = (p - phi[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        if (!deriv) {
            return v[k] * (2 * s3 - 3 * s2 + 1) + v[k + 1] * (-2 * s3 + 3 * s2) +
                   h * dv[k] * (s3 - 2 * s2 + s) + h * dv[k + 1] * (s3 - s2);
        }
        return (v[k] * (6 * s2 - 6 * s) + v[k + 1] * (-6 * s2 + 6 * s)) / h +
               dv[k] * (3 * s2 - 4 * s + 1) + dv[k + 1] * (3 * s2 - 2 * s);
    }
};

inline SagdeevPotential sagdeev(const EndState& es, ElectronModel model,
                                double phi_max, int n_cells = 512) {
    if (!(phi_max > 0.0))
        throw InvalidConfig("sagdeev: phi_max must be positive");
    const double k_bohm = bohm_integral(es);
    if (k_bohm >= 1.0)
        throw NotSolvable(NotSolvableReason::BohmViolated,
                          "Bohm integral K >= 1: V''(0) <= 0, no monotone sheath");

    SagdeevPotential sp;
    sp.bohm_k = k_bohm;
    sp.model = model;
    sp.phi.resize(static_cast<std::size_t>(n_cells) + 1);
    sp.v.resize(sp.phi.size());
    sp.dv.resize(sp.phi.size());

    auto integrand = [&](double p) {
        return ion_density(p, es) - electron_density(model, p);
    };
    double acc = 0.0;
    for (std::size_t k = 0; k < sp.phi.size(); ++k) {
        sp.phi[k] = phi_max * static_cast<double>(k) / n_cells;
        sp.dv[k] = integrand(sp.phi[k]);
        if (k > 0)
            acc += gauss5(integrand, sp.phi[k - 1], sp.phi[k]);
        sp.v[k] = acc;
    }
    return sp;
}

// sup B, where B = { phi > 0 : V > 0 on (0, phi] }: the first positive zero
// of V, located by node scan plus bisection on the Hermite evaluation.
struct SupB {
    double value = 0.0;       // meaningful when exceeds_table == false
    bool exceeds_table = false; // V > 0 throughout (0, phi_max]
};

inline SupB sup_B(const SagdeevPotential& sp, double tol = 1e-10) {
    // Degenerate table: V <= 0 immediately.
    if (sp.v[1] <= 0.0 && sp.value(0.5 * sp.phi[1]) <= 0.0)
        return {0.0, false};

    for (std::size_t k = 1; k < sp.phi.size(); ++k) {
        if (sp.v[k] <= 0.0) {
            double lo = sp.phi[k - 1], hi = sp.phi[k];
            while (hi - lo > tol) {
                double mid = 0.5 * (lo + hi);
                (sp.value(mid) > 0.0 ? lo : hi) = mid;
            }
            return {0.5 * (lo + hi), false};
        }
    }
    return {sp.phi_max(), true};
}

struct StationaryGridSpec {
    int levels = 1200;              // potential levels from Phi_b to the tail
    double tail_fraction = 1e-3;    // switch to analytic tail below this * Phi_b
    int sagdeev_cells = 512;
};

// Monotone sheath potential Phi^s with closed-form F^s reconstruction.
struct StationarySolution {
    EndState end_state;
    ElectronModel model = ElectronModel::boltzmann;
    double phi_b = 0.0;
    double bohm_k = 0.0;

    // graded grid, clustered near x = 0 (uniform-in-log(Phi) in the tail)
    std::vector<double> x;
    std::vector<double> phi_s;
    std::vector<double> dphi_s; // dPhi^s/dx = -sqrt(2 V(Phi^s)) < 0

    // analytic exponential continuation beyond the table
    double x_tail = 0.0;
    double phi_tail = 0.0;
    double c_tail = 0.0; // Phi^s(x) = phi_tail exp(-c_tail (x - x_tail))

    SupB sup_b;
    double decay_rate_est = 0.0; // fitted tail rate, ~ sqrt(1 - K)

    SagdeevPotential sagdeev_table;

    bool trivial() const { return phi_b == 0.0; }

    double phi_at(double xq) const {
        if (trivial() || xq >= x_tail)
            return trivial() ? 0.0 : phi_tail * std::exp(-c_tail * (xq - x_tail));
        if (xq <= 0.0)
            return phi_b;
        auto it = std::upper_bound(x.begin(), x.end(), xq);
        std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
        const double h = x[k + 1] - x[k];
        const double s = (xq - x[k]) / h;
        const double s2 = s * s, s3 = s2 * s;
        return phi_s[k] * (2 * s3 - 3 * s2 + 1) + phi_s[k + 1] * (-2 * s3 + 3 * s2) +
               h * dphi_s[k] * (s3 - 2 * s2 + s) + h * dphi_s[k + 1] * (s3 - s2);
    }

    double dphi_at(double xq) const {
        if (trivial())
            return 0.0;
        if (xq >= x_tail)
            return -c_tail * phi_at(xq);
        if (xq <= 0.0)
            return dphi_s.front();
        auto it = std::upper_bound(x.begin(), x.end(), xq);
        std::size_t k = static_cast<std::size_t>(it - x.begin()) - 1;
        const double h = x[k + 1] - x[k];
        const double s = (xq - x[k]) / h;
        const double s2 = s * s;
        return (phi_s[k] * (6 * s2 - 6 * s) + phi_s[k + 1] * (-6 * s2 + 6 * s)) / h +
               dphi_s[k] * (3 * s2 - 4 * s + 1) + dphi_s[k + 1] * (3 * s2 - 2 * s);
    }
};

// Least-squares slope of log(phi) against x; used for the tail-rate estimate.
inline double log_linear_slope(const std::vector<double>& xs,
                               const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double ly = std::log(ys[i]);
        sx += xs[i];
        sy += ly;
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Solves the stationary problem for wall potential phi_b. Succeeds iff
// K < 1 and Phi_b < sup B; the two failure branches throw NotSolvable with
// the corresponding reason.
inline StationarySolution
solve_stationary_potential(const EndState& es, ElectronModel model, double phi_b,
                           const StationaryGridSpec& spec = {}) {
    StationarySolution sol;
    sol.end_state = es;
    sol.model = model;
    sol.phi_b = phi_b;
    sol.bohm_k = bohm_integral(es);
    if (sol.bohm_k >= 1.0)
        throw NotSolvable(NotSolvableReason::BohmViolated,
                          "Bohm integral K >= 1: no stationary solution");
    if (phi_b == 0.0) {
        sol.x = {0.0, 1.0};
        sol.phi_s = {0.0, 0.0};
        sol.dphi_s = {0.0, 0.0};
        sol.sup_b = {0.0, true};
        sol.decay_rate_est = std::sqrt(1.0 - sol.bohm_k);
        return sol;
    }

    // Tabulate V slightly past Phi_b and check V > 0 on (0, Phi_b].
    sol.sagdeev_table = sagdeev(es, model, 1.0000001 * phi_b, spec.sagdeev_cells);
    sol.sup_b = sup_B(sol.sagdeev_table);
    if (!sol.sup_b.exceeds_table && sol.sup_b.value <= phi_b)
        throw NotSolvable(NotSolvableReason::PhiBTooLarge,
                          "Phi_b >= sup B: no monotone sheath at this wall potential");
    const SagdeevPotential& V = sol.sagdeev_table;

    // Geometric ladder of potential levels Phi_b -> tail_fraction * Phi_b.
    // x(Phi) = int_Phi^{Phi_b} dphi / sqrt(2 V); per-cell Gauss panels are
    // accurate here because on a geometric cell the near-singular 1/phi
    // behaviour of the integrand is smooth.
    const int m = spec.levels;
    const double ratio = std::pow(spec.tail_fraction, 1.0 / m);
    sol.x.resize(static_cast<std::size_t>(m) + 1);
    sol.phi_s.resize(sol.x.size());
    sol.dphi_s.resize(sol.x.size());

    auto inv_speed = [&](double p) { return 1.0 / std::sqrt(2.0 * V.value(p)); };
    double xacc = 0.0;
    double level = phi_b;
    for (int k = 0; k <= m; ++k) {
        sol.phi_s[static_cast<std::size_t>(k)] = level;
        sol.dphi_s[static_cast<std::size_t>(k)] =
            -std::sqrt(2.0 * std::max(V.value(level), 0.0));
        sol.x[static_cast<std::size_t>(k)] = xacc;
        if (k < m) {
            double next = level * ratio;
            xacc += gauss5(inv_speed, next, level);
            level = next;
        }
    }

    sol.x_tail = sol.x.back();
    sol.phi_tail = sol.phi_s.back();
    // Continuous match of the first integral at the switch point.
    sol.c_tail = std::sqrt(2.0 * V.value(sol.phi_tail)) / sol.phi_tail;

    // Fitted decay rate over the far tail of the tabulated region,
    // Phi in [tail, 0.05 Phi_b]; linearized V gives slope -sqrt(1-K).
    std::vector<double> fx, fy;
    for (std::size_t k = 0; k < sol.x.size(); ++k) {
        if (sol.phi_s[k] <= 0.05 * phi_b) {
            fx.push_back(sol.x[k]);
            fy.push_back(sol.phi_s[k]);
        }
    }
    sol.decay_rate_est = fx.size() >= 2 ? -log_linear_slope(fx, fy)
                                        : std::sqrt(1.0 - sol.bohm_k);
    return sol;
}

// xi_1-marginal of the reconstructed stationary distribution F^s.
inline double reconstruct_fs(const StationarySolution& sol, double x, double xi1) {
    if (xi1 >= 0.0)
        return 0.0;
    const double e2 = xi1 * xi1 - 2.0 * sol.phi_at(x);
    if (e2 <= 0.0)
        return 0.0;
    return sol.end_state.f1(-std::sqrt(e2));
}

// --- numerical spot checks of the F^s defect estimates ---------------------

// || d/dxi_1 (F^s - M_inf psi) / M_inf^{1/2} (x, .) ||_{L2_xi}, reduced to the
// xi_1 marginal (the transverse factor integrates to 1). Stable form: every
// Gaussian enters through ratios exp(log M1(zeta) - log M1(xi) / 2).
namespace fsdetail {

// d/dxi (M1 psi)(z) = M1(z) p(z), p = -((z-u)/theta) psi + psi'.
inline double p_factor(const EndState& es, double z) {
    return -((z - es.config.u_infty) / es.config.theta_infty) * es.psi(z) +
           es.psi_prime(z);
}

// d/dxi_1 (g^s - M1 psi) / M1^{1/2} at (x fixed through phis, xi).
inline double defect_integrand(const EndState& es, double phis, double xi) {
    const double e2 = xi * xi - 2.0 * phis;
    double inside = 0.0;
    if (xi < 0.0 && e2 > 0.0) {
        const double z = -std::sqrt(e2);
        // d g^s/dxi = (M1 psi)'(z) * xi/z
        inside = std::exp(es.log_m1(z) - 0.5 * es.log_m1(xi)) * p_factor(es, z) *
                 (xi / z);
    }
    const double outside = std::exp(0.5 * es.log_m1(xi)) * p_factor(es, xi);
    return inside - outside;
}

} // namespace fsdetail

struct FsEstimateRow {
    double x = 0.0;
    double phi_s = 0.0;
    double dphi_s = 0.0;
    double defect = 0.0;       // || d_xi (F^s - M psi)/M^{1/2} ||
    double defect_dx = 0.0;    // || d_x { ... } ||
    double ratio_phi = 0.0;    // defect / Phi^s(x)
    double ratio_dphi = 0.0;   // defect_dx / |d_x Phi^s(x)|
    double grad_xi_norm = 0.0; // || grad_xi ( d_xi F^s / M^{1/2} ) ||
};

// Report-only evaluation of the smallness estimates on F^s - M_inf psi.
inline std::vector<FsEstimateRow>
check_fs_estimates(const StationarySolution& sol, const std::vector<double>& xs) {
    const EndState& es = sol.end_state;
    const double lo = es.xi_lo();
    std::vector<FsEstimateRow> rows;
    rows.reserve(xs.size());
    for (double xq : xs) {
        FsEstimateRow row;
        row.x = xq;
        row.phi_s = sol.phi_at(xq);
        row.dphi_s = sol.dphi_at(xq);

        auto sq_norm = [&](auto&& fn) {
            double val = integrate([&](double xi) {
                double d = fn(xi);
                return d * d;
            }, lo, 0.0, 1e-18, 1e-9);
            return std::sqrt(std::max(val, 0.0));
        };

        row.defect = sq_norm([&](double xi) {
            return fsdetail::defect_integrand(es, row.phi_s, xi);
        });
        // x-derivative by centered differences on the stable integrand.
        const double hx = 1e-4 * std::max(1.0, std::abs(xq));
        row.defect_dx = sq_norm([&](double xi) {
            return (fsdetail::defect_integrand(es, sol.phi_at(xq + hx), xi) -
                    fsdetail::defect_integrand(es, sol.phi_at(xq - hx), xi)) /
                   (2.0 * hx);
        });
        row.ratio_phi = row.phi_s > 0.0 ? row.defect / row.phi_s : 0.0;
        row.ratio_dphi =
            std::abs(row.dphi_s) > 0.0 ? row.defect_dx / std::abs(row.dphi_s) : 0.0;

        // grad_xi ( d_xi F^s / M^{1/2} ): xi_1 component by a centered
        // difference of the stable 1D integrand, transverse component is the
        // analytic factor 1/(2 theta) on the L2 norm of the integrand itself.
        auto stable = [&](double xi) {
            const double e2 = xi * xi - 2.0 * row.phi_s;
            if (xi >= 0.0 || e2 <= 0.0)
                return 0.0;
            const double z = -std::sqrt(e2);
            return std::exp(es.log_m1(z) - 0.5 * es.log_m1(xi)) *
                   fsdetail::p_factor(es, z) * (xi / z);
        };
        const double hv = 1e-5;
        double d1 = sq_norm([&](double xi) {
            return (stable(xi + hv) - stable(xi - hv)) / (2.0 * hv);
        });
        double d0 = sq_norm(stable);
        row.grad_xi_norm = std::sqrt(d1 * d1 + d0 * d0 / (2.0 * es.config.theta_infty));
        rows.push_back(row);
    }
    return rows;
}

} // namespace sheathkit
