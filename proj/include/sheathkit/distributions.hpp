#pragma once

// End-state velocity distribution and its moments.
//
// The far-field state is a drifting Maxwellian times a velocity cut-off,
//   F_inf(xi) = M_inf(xi) psi(xi_1),  supp psi subset {xi_1 <= -r},
// normalized so that int F_inf dxi = 1 (quasi-neutrality). Everything in the
// dynamics depends on xi_1 only, so all 3D velocity integrals reduce to 1D
// via the tensor factorization M_inf = M1(xi_1) * mperp(xi'), where mperp is
// the unit-mass transverse Gaussian. This header keeps all reductions in
// terms of the xi_1 marginal M1.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sheathkit/config.hpp"
#include "sheathkit/errors.hpp"
#include "sheathkit/quadrature.hpp"

namespace sheathkit {

// C^infty transition bump t(s) = E(s)/(E(s)+E(1-s)), E(s) = exp(-1/s):
// exactly 0 at s<=0, exactly 1 at s>=1, strictly increasing between.
inline double smooth_transition(double s) {
    if (s <= 0.0)
        return 0.0;
    if (s >= 1.0)
        return 1.0;
    const double e0 = std::exp(-1.0 / s);
    const double e1 = std::exp(-1.0 / (1.0 - s));
    return e0 / (e0 + e1);
}

inline double smooth_transition_deriv(double s) {
    if (s <= 0.0 || s >= 1.0)
        return 0.0;
    const double e0 = std::exp(-1.0 / s);
    const double e1 = std::exp(-1.0 / (1.0 - s));
    const double d0 = e0 / (s * s);
    const double d1 = e1 / ((1.0 - s) * (1.0 - s));
    const double sum = e0 + e1;
    return (d0 * e1 + d1 * e0) / (sum * sum);
}

// Cut-off weight psi(xi_1): 1 on (-inf, -r-sigma], 0 on [-r, inf),
// smooth monotone transition between.
inline double cutoff_psi(double xi1, double r, double sigma) {
    return smooth_transition((-r - xi1) / sigma);
}

inline double cutoff_psi_prime(double xi1, double r, double sigma) {
    return -smooth_transition_deriv((-r - xi1) / sigma) / sigma;
}

// eta(beta) = beta^2 / (2 - beta^2); beta = 1 allowed for testing.
inline double eta(double beta) {
    if (!(beta > 0.0 && beta <= 1.0))
        throw InvalidConfig("eta: beta must lie in (0, 1]");
    return beta * beta / (2.0 - beta * beta);
}

// End state F_inf = M_inf psi with quasi-neutral normalization rho_inf.
// A raw xi_1-marginal table can be injected instead (testing hook); the
// analytic Maxwellian path is the production one.
struct EndState {
    PlasmaConfig config;
    double rho_infty = 1.0;
    bool use_cutoff = true; // psi == 1 test hook when false

    bool tabulated = false;
    std::vector<double> xi_grid;       // raw-table nodes (ascending)
    std::vector<double> f_infty_values; // xi_1-marginal of F_inf at the nodes

    // log of the xi_1-marginal Maxwellian M1 = rho/sqrt(2 pi theta) *
    // exp(-(xi-u)^2 / (2 theta)). Kept in log form: cold configurations
    // push the exponent far past the range of double.
    double log_m1(double xi1) const {
        const double th = config.theta_infty;
        const double d = xi1 - config.u_infty;
        return std::log(rho_infty) - 0.5 * std::log(2.0 * M_PI * th) -
               d * d / (2.0 * th);
    }

    double m1(double xi1) const { return std::exp(log_m1(xi1)); }

    double psi(double xi1) const {
        return use_cutoff ? cutoff_psi(xi1, config.r, config.sigma) : 1.0;
    }

    double psi_prime(double xi1) const {
        return use_cutoff ? cutoff_psi_prime(xi1, config.r, config.sigma) : 0.0;
    }

    // xi_1-marginal of F_inf.
    double f1(double xi1) const {
        if (tabulated) {
            if (xi1 <= xi_grid.front() || xi1 >= xi_grid.back())
                return 0.0;
            auto it = std::upper_bound(xi_grid.begin(), xi_grid.end(), xi1);
            std::size_t k = static_cast<std::size_t>(it - xi_grid.begin()) - 1;
            double t = (xi1 - xi_grid[k]) / (xi_grid[k + 1] - xi_grid[k]);
            return (1.0 - t) * f_infty_values[k] + t * f_infty_values[k + 1];
        }
        return m1(xi1) * psi(xi1);
    }

    // Integration window covering the support of f1.
    double xi_lo() const {
        if (tabulated)
            return xi_grid.front();
        return config.u_infty - 12.0 * std::sqrt(config.theta_infty);
    }
    double xi_hi() const {
        if (tabulated)
            return xi_grid.back();
        const double gauss_hi = config.u_infty + 12.0 * std::sqrt(config.theta_infty);
        return use_cutoff ? std::min(-config.r, gauss_hi) : gauss_hi;
    }
};

// Builds the end state: rho_inf = 1 / int (unit-density cut-off Maxwellian),
// so that int F_inf dxi = 1 to quadrature tolerance. The transverse integral
// is 1 analytically, leaving a 1D quadrature in xi_1.
inline EndState normalize_quasi_neutral(const PlasmaConfig& config,
                                        bool use_cutoff = true) {
    config.validate();
    EndState es;
    es.config = config;
    es.use_cutoff = use_cutoff;

    if (!use_cutoff) {
        es.rho_infty = 1.0; // Gaussian integrates to rho exactly
        return es;
    }

    const double th = config.theta_infty;
    const double u = config.u_infty;
    const double lo = u - 12.0 * std::sqrt(th);
    const double hi = std::min(-config.r, u + 12.0 * std::sqrt(th));
    const double norm = 1.0 / std::sqrt(2.0 * M_PI * th);
    double mass = integrate(
        [&](double xi) {
            double d = xi - u;
            return norm * std::exp(-d * d / (2.0 * th)) *
                   cutoff_psi(xi, config.r, config.sigma);
        },
        lo, hi, 1e-14, 1e-13);
    if (!(mass > 0.0))
        throw QuadratureFailure("end-state mass is not positive", mass);
    es.rho_infty = 1.0 / mass;
    return es;
}

// Raw-table end state (testing hook). The table is renormalized to unit mass.
inline EndState end_state_from_table(std::vector<double> xi,
                                     std::vector<double> values) {
    if (xi.size() != values.size() || xi.size() < 2)
        throw InvalidConfig("end_state_from_table: bad table");
    EndState es;
    es.tabulated = true;
    es.xi_grid = std::move(xi);
    es.f_infty_values = std::move(values);
    double mass = 0.0;
    for (std::size_t k = 0; k + 1 < es.xi_grid.size(); ++k)
        mass += 0.5 * (es.f_infty_values[k] + es.f_infty_values[k + 1]) *
                (es.xi_grid[k + 1] - es.xi_grid[k]);
    if (!(mass > 0.0))
        throw InvalidConfig("end_state_from_table: zero mass");
    for (auto& v : es.f_infty_values)
        v /= mass;
    es.rho_infty = 1.0; // bookkeeping only; moments use the table directly
    return es;
}

// int F_inf(xi) w(xi) dxi. Raw tables are piecewise linear, so they are
// integrated cell by cell (exact linearity in the table values); the
// analytic Maxwellian path uses adaptive quadrature.
template <typename W>
double end_state_moment(const EndState& es, W&& weight) {
    auto integrand = [&](double xi) { return es.f1(xi) * weight(xi); };
    if (es.tabulated) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < es.xi_grid.size(); ++k)
            acc += gauss5(integrand, es.xi_grid[k], es.xi_grid[k + 1]);
        return acc;
    }
    return integrate(integrand, es.xi_lo(), es.xi_hi(), 1e-13, 1e-12);
}

// Total mass int F_inf dxi (should be 1).
inline double end_state_mass(const EndState& es) {
    return end_state_moment(es, [](double) { return 1.0; });
}

// Kinetic Bohm integral K = int xi_1^{-2} F_inf dxi. The cut-off keeps the
// integrand bounded; the criterion holds iff K < 1.
inline double bohm_integral(const EndState& es) {
    return end_state_moment(es, [](double xi) { return 1.0 / (xi * xi); });
}

// mu_inf = || d/dxi_1 (M_inf psi - M_inf) / M_inf^{1/2} chi(xi_1 < 0) ||_{L2_xi}.
// Reduced to 1D: the integrand is M1(xi) h(xi)^2 with
//   h = -((xi - u)/theta)(psi - 1) + psi',
// which is the log-space form: no M1^{-1/2} ever appears explicitly, so
// cold configurations cannot overflow.
inline double mu_infty(const EndState& es) {
    if (!es.use_cutoff)
        return 0.0;
    const double u = es.config.u_infty;
    const double th = es.config.theta_infty;
    const double lo = -es.config.r - es.config.sigma;
    double val = integrate(
        [&](double xi) {
            double h = -((xi - u) / th) * (es.psi(xi) - 1.0) + es.psi_prime(xi);
            if (h == 0.0)
                return 0.0;
            return std::exp(es.log_m1(xi) + 2.0 * std::log(std::abs(h)));
        },
        lo, 0.0, 1e-16, 1e-11);
    return std::sqrt(std::max(val, 0.0));
}

// Direct-quadrature route for mu_inf, usable only where M1 does not
// underflow; kept as an independent cross-check of the log-space form.
inline double mu_infty_direct(const EndState& es) {
    if (!es.use_cutoff)
        return 0.0;
    const double u = es.config.u_infty;
    const double th = es.config.theta_infty;
    const double lo = -es.config.r - es.config.sigma;
    double val = integrate(
        [&](double xi) {
            double m = es.m1(xi);
            double dd = -((xi - u) / th) * m * (es.psi(xi) - 1.0) + m * es.psi_prime(xi);
            if (m <= 0.0)
                return 0.0;
            return dd * dd / m;
        },
        lo, 0.0, 1e-16, 1e-11);
    return std::sqrt(std::max(val, 0.0));
}

// Constants entering the explicit stability condition.
struct TheoryConstants {
    double mu_infty = 0.0;
    double eta_beta = 0.0;
    double bohm_integral = 0.0;
    double asp1_margin = 0.0;
};

} // namespace sheathkit
