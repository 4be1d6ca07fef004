#pragma once

// Nonlinear Poisson solves on a truncated half-line.
//
// Two entry points share one damped-Newton/tridiagonal core:
//   solve_perturbation_potential:  d_xx phi = n - (n_e(Phi^s+phi) - n_e(Phi^s)),
//                                  phi(0) = 0, phi(x_max) = 0   (node grid)
//   solve_wall_potential:          d_xx Phi = rho(x) - n_e(Phi),
//                                  Phi(0) = Phi_b, Phi(x_max) = 0
//                                  (cell centers, ghost-closed boundaries)
// The far-end homogeneous Dirichlet condition truncates the decay at
// infinity; x_max is chosen by the caller so that exp(-sqrt(1-K) x_max) is
// below the working tolerance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sheathkit/config.hpp"
#include "sheathkit/distributions.hpp"
#include "sheathkit/errors.hpp"

namespace sheathkit {

// Thomas algorithm; diag/rhs are clobbered.
inline std::vector<double> solve_tridiag(std::vector<double> lower,
                                         std::vector<double> diag,
                                         std::vector<double> upper,
                                         std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> u(n);
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        u[i] = (rhs[i] - upper[i] * u[i + 1]) / diag[i];
    return u;
}

struct NewtonReport {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> residual_history;
};

namespace newton_detail {

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

// Damped Newton on R(u) = 0 where the Jacobian is tridiagonal. `residual`
// fills R(u); `jacobian` fills (lower, diag, upper) at u.
template <typename Residual, typename Jacobian>
NewtonReport damped_newton(std::vector<double>& u, Residual&& residual,
                           Jacobian&& jacobian, double tol, int max_iter) {
    const std::size_t n = u.size();
    std::vector<double> r(n), lower(n), diag(n), upper(n);
    NewtonReport rep;

    residual(u, r);
    double rn = sup_norm(r);
    rep.residual_history.push_back(rn);
    for (int it = 0; it < max_iter; ++it) {
        if (rn < tol) {
            rep.iterations = it;
            rep.residual = rn;
            return rep;
        }
        jacobian(u, lower, diag, upper);
        std::vector<double> step = solve_tridiag(lower, diag, upper, r);

        // line search: halve until the residual actually drops
        double lambda = 1.0;
        std::vector<double> trial(n), rt(n);
        double rn_trial = rn;
        for (int half = 0; half < 25; ++half) {
            for (std::size_t i = 0; i < n; ++i)
                trial[i] = u[i] - lambda * step[i];
            residual(trial, rt);
            rn_trial = sup_norm(rt);
            if (rn_trial < (1.0 - 0.25 * lambda) * rn || rn_trial < tol)
                break;
            lambda *= 0.5;
        }
        if (!(rn_trial < rn) && rn_trial >= tol)
            throw NewtonDiverged("Newton line search stalled", rn_trial);
        u = trial;
        r = rt;
        rn = rn_trial;
        rep.residual_history.push_back(rn);
    }
    if (rn >= tol)
        throw NewtonDiverged("Newton did not converge", rn);
    rep.iterations = max_iter;
    rep.residual = rn;
    return rep;
}

} // namespace newton_detail

// Perturbation-form problem on a strictly increasing node grid.
struct EllipticProblem {
    std::vector<double> x;      // nodes, x.front() = 0, x.back() = x_max
    std::vector<double> phi_s;  // background Phi^s at the nodes
    ElectronModel model = ElectronModel::boltzmann;
    std::vector<double> n;      // source density at the nodes
    double left_bc = 0.0;
    double right_bc = 0.0;

    void validate() const {
        if (x.size() < 3 || phi_s.size() != x.size() || n.size() != x.size())
            throw InvalidConfig("EllipticProblem: inconsistent arrays");
        for (std::size_t i = 1; i < x.size(); ++i)
            if (!(x[i] > x[i - 1]))
                throw InvalidConfig("EllipticProblem: grid must be strictly increasing");
    }
};

// Solves the perturbation problem by damped Newton on the second-order
// finite-difference discretization; residual sup-norm below `tol` on return.
inline std::vector<double> solve_perturbation_potential(const EllipticProblem& prob,
                                                        double tol = 1e-10,
                                                        int max_iter = 50,
                                                        NewtonReport* report = nullptr) {
    prob.validate();
    const std::size_t n = prob.x.size();
    const std::size_t m = n - 2; // interior unknowns

    // general 3-point second-derivative coefficients
    std::vector<double> ca(m), cb(m), cc(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double hm = prob.x[i + 1] - prob.x[i];
        const double hp = prob.x[i + 2] - prob.x[i + 1];
        ca[i] = 2.0 / (hm * (hm + hp));
        cc[i] = 2.0 / (hp * (hm + hp));
        cb[i] = -(ca[i] + cc[i]);
    }

    auto residual = [&](const std::vector<double>& u, std::vector<double>& r) {
        for (std::size_t i = 0; i < m; ++i) {
            const double um = i == 0 ? prob.left_bc : u[i - 1];
            const double up = i == m - 1 ? prob.right_bc : u[i + 1];
            const double lap = ca[i] * um + cb[i] * u[i] + cc[i] * up;
            const double dn_e = electron_density(prob.model, prob.phi_s[i + 1] + u[i]) -
                                electron_density(prob.model, prob.phi_s[i + 1]);
            r[i] = lap - prob.n[i + 1] + dn_e;
        }
    };
    auto jacobian = [&](const std::vector<double>& u, std::vector<double>& lo,
                        std::vector<double>& di, std::vector<double>& up) {
        for (std::size_t i = 0; i < m; ++i) {
            lo[i] = i == 0 ? 0.0 : ca[i];
            up[i] = i == m - 1 ? 0.0 : cc[i];
            di[i] = cb[i] + electron_density_prime(prob.model, prob.phi_s[i + 1] + u[i]);
        }
    };

    std::vector<double> u(m, 0.0);
    NewtonReport rep = newton_detail::damped_newton(u, residual, jacobian, tol, max_iter);
    if (report)
        *report = rep;

    std::vector<double> full(n);
    full.front() = prob.left_bc;
    full.back() = prob.right_bc;
    for (std::size_t i = 0; i < m; ++i)
        full[i + 1] = u[i];
    return full;
}

// Full potential on a uniform cell-center grid: d_xx Phi = rho - s n_e(Phi)
// with Phi = phi_b at the wall and 0 at the far edge, both imposed through
// ghost values (2nd order). `guess` warm-starts the Newton iteration.
// `electron_scale` is the discrete quasi-neutral normalization: setting it to
// the v-grid quadrature of the end state makes the discrete far field exactly
// neutral, so no spurious field develops where Phi^s has decayed.
inline std::vector<double> solve_wall_potential(const std::vector<double>& rho,
                                                double dx, ElectronModel model,
                                                double phi_b,
                                                const std::vector<double>* guess = nullptr,
                                                double electron_scale = 1.0,
                                                double tol = 1e-10, int max_iter = 50,
                                                NewtonReport* report = nullptr) {
    const std::size_t n = rho.size();
    const double ih2 = 1.0 / (dx * dx);

    auto residual = [&](const std::vector<double>& u, std::vector<double>& r) {
        for (std::size_t i = 0; i < n; ++i) {
            const double um = i == 0 ? 2.0 * phi_b - u[0] : u[i - 1];
            const double up = i == n - 1 ? -u[n - 1] : u[i + 1];
            r[i] = (um - 2.0 * u[i] + up) * ih2 - rho[i] +
                   electron_scale * electron_density(model, u[i]);
        }
    };
    auto jacobian = [&](const std::vector<double>& u, std::vector<double>& lo,
                        std::vector<double>& di, std::vector<double>& up) {
        for (std::size_t i = 0; i < n; ++i) {
            lo[i] = i == 0 ? 0.0 : ih2;
            up[i] = i == n - 1 ? 0.0 : ih2;
            const double ghost = (i == 0 || i == n - 1) ? -ih2 : 0.0;
            di[i] = -2.0 * ih2 + ghost +
                    electron_scale * electron_density_prime(model, u[i]);
        }
    };

    std::vector<double> u = guess ? *guess : std::vector<double>(n, 0.0);
    NewtonReport rep = newton_detail::damped_newton(u, residual, jacobian, tol, max_iter);
    if (report)
        *report = rep;
    return u;
}

// --- barrier bounds and weighted elliptic inequalities ----------------------

struct BoundsReport {
    double m1 = 0.0;  // upper barrier
    double m2 = 0.0;  // lower barrier (bound is -m2)
    double sup_phi = 0.0;
    double inf_phi = 0.0;
    bool pass = false;
};

// Barriers from the comparison-function argument: with s(x) = ion density of
// the stationary state plus the source n,
//   sup Phi <= max{ Phi_b, n_e^{-1}(inf s) },  inf Phi >= -max{ Phi_b, -n_e^{-1}(sup s) }.
inline BoundsReport potential_bounds_check(const std::vector<double>& phi_total,
                                           const std::vector<double>& stationary_ion_density,
                                           const std::vector<double>& n,
                                           ElectronModel model, double phi_b,
                                           double tol = 1e-9) {
    BoundsReport rep;
    double inf_s = stationary_ion_density[0] + n[0];
    double sup_s = inf_s;
    for (std::size_t i = 1; i < n.size(); ++i) {
        const double s = stationary_ion_density[i] + n[i];
        inf_s = std::min(inf_s, s);
        sup_s = std::max(sup_s, s);
    }
    rep.m1 = std::max(phi_b, electron_density_inverse(model, inf_s));
    rep.m2 = std::max(phi_b, -electron_density_inverse(model, sup_s));
    rep.sup_phi = *std::max_element(phi_total.begin(), phi_total.end());
    rep.inf_phi = *std::min_element(phi_total.begin(), phi_total.end());
    rep.pass = rep.sup_phi <= rep.m1 + tol && rep.inf_phi >= -rep.m2 - tol;
    return rep;
}

// Discrete weighted L2 norm on a node grid (trapezoid, weight e^{beta x}).
inline double weighted_l2(const std::vector<double>& x, const std::vector<double>& f,
                          double beta) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double h = x[i + 1] - x[i];
        const double a = std::exp(beta * x[i]) * f[i] * f[i];
        const double b = std::exp(beta * x[i + 1]) * f[i + 1] * f[i + 1];
        acc += 0.5 * h * (a + b);
    }
    return std::sqrt(acc);
}

// Centered interior derivative, 2nd-order one-sided at the ends.
inline std::vector<double> diff_x(const std::vector<double>& x,
                                  const std::vector<double>& f) {
    const std::size_t n = x.size();
    std::vector<double> d(n);
    const double h = x[1] - x[0]; // uniform grids in all callers
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i)
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

struct EllipticMargins {
    double eta_beta = 0.0;
    double n_l2w = 0.0;       // ||e^{bx/2} n||
    double lhs_first = 0.0;   // ||e phi||^2 + 2(1+eta) ||e phi_x||^2
    double main_first = 0.0;  // (1+eta)^2 ||e n||^2
    double excess_first = 0.0;
    double lhs_second = 0.0;  // ||e phi_xx||^2
    double main_second = 0.0; // (1 + b^2 (1+eta)^2) ||e n||^2
    double excess_second = 0.0;
    double h3_over_h1 = 0.0;  // ||phi||_{H3} / ||n||_{H1}, unweighted shape
};

// Measures the two weighted inequalities; excess_* is the part of the LHS not
// covered by the leading coefficient, normalized by ||e n||^2 (so it should
// shrink linearly with the data size).
inline EllipticMargins elliptic_estimates_check(const std::vector<double>& x,
                                                const std::vector<double>& phi,
                                                const std::vector<double>& n,
                                                double beta) {
    EllipticMargins m;
    m.eta_beta = eta(beta);
    m.n_l2w = weighted_l2(x, n, beta);
    const auto dphi = diff_x(x, phi);
    const auto d2phi = diff_x(x, dphi);
    const double phi_w = weighted_l2(x, phi, beta);
    const double dphi_w = weighted_l2(x, dphi, beta);
    const double d2phi_w = weighted_l2(x, d2phi, beta);

    const double one_eta = 1.0 + m.eta_beta;
    m.lhs_first = phi_w * phi_w + 2.0 * one_eta * dphi_w * dphi_w;
    m.main_first = one_eta * one_eta * m.n_l2w * m.n_l2w;
    m.lhs_second = d2phi_w * d2phi_w;
    m.main_second = (1.0 + beta * beta * one_eta * one_eta) * m.n_l2w * m.n_l2w;
    const double denom = std::max(m.n_l2w * m.n_l2w, 1e-300);
    m.excess_first = (m.lhs_first - m.main_first) / denom;
    m.excess_second = (m.lhs_second - m.main_second) / denom;

    const auto d3phi = diff_x(x, d2phi);
    const auto dn = diff_x(x, n);
    const double h3 = std::sqrt(weighted_l2(x, phi, 0.0) * weighted_l2(x, phi, 0.0) +
                                weighted_l2(x, dphi, 0.0) * weighted_l2(x, dphi, 0.0) +
                                weighted_l2(x, d2phi, 0.0) * weighted_l2(x, d2phi, 0.0) +
                                weighted_l2(x, d3phi, 0.0) * weighted_l2(x, d3phi, 0.0));
    const double h1n = std::sqrt(weighted_l2(x, n, 0.0) * weighted_l2(x, n, 0.0) +
                                 weighted_l2(x, dn, 0.0) * weighted_l2(x, dn, 0.0));
    m.h3_over_h1 = h1n > 0.0 ? h3 / h1n : 0.0;
    return m;
}

} // namespace sheathkit
