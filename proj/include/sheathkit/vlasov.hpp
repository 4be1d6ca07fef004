#pragma once

// Time evolution of the reduced distribution under the Vlasov equation with
// the completely absorbing wall, coupled to the nonlinear Poisson solve.
//
// One step is Strang-split:
//   half x-transport, Poisson solve for the full potential
//   (d_xx Phi = int g dxi - n_e(Phi), Phi(0) = Phi_b, Phi(x_max) = 0),
//   full v-transport with E = d_x Phi, half x-transport,
// which is 2nd order in time. The velocity grid is sized by the support
// bounds so edge clipping never touches meaningful mass (monitored).

#include <cmath>
#include <vector>

#include "sheathkit/field.hpp"
#include "sheathkit/poisson.hpp"
#include "sheathkit/stationary.hpp"

namespace sheathkit {

struct EvolveSpec {
    double t_end = 5.0;
    double cfl = 0.9;
    double dt_override = 0.0; // 0: derive from CFL
    int snapshot_every = 1;   // diagnostics cadence, in steps
    bool limiter = true;
};

// Per-run workspace: grids, cached end-state samples, warm-started potential.
struct CoupledState {
    PhaseSpaceField field;
    StationarySolution stationary;
    std::vector<double> far_values; // F_inf marginal at v centers
    std::vector<double> phi;        // full potential at x centers (last solve)
    std::vector<double> efield;     // d_x Phi at x centers
    double dt = 0.0;
    double electron_norm = 1.0;     // discrete end-state mass on the v grid
    bool poisson_enabled = true;    // test hook: pure transport when false
    NewtonReport last_poisson;

    double phi_b() const { return stationary.phi_b; }
};

// Velocity-grid bounds from the support lemmas: everything meaningful lives
// in [u - 10 sqrt(theta) - 1, max(2 R2 + 1, 3)].
inline std::pair<double, double> velocity_bounds(const PlasmaConfig& cfg, double r2 = 0.0) {
    const double lo = cfg.u_infty - 10.0 * std::sqrt(cfg.theta_infty) - 1.0;
    const double hi = std::max(2.0 * r2 + 1.0, 3.0);
    return {lo, hi};
}

// Truncation so that exp(-sqrt(1-K) x_max) < 1e-10.
inline double default_x_max(double bohm_k) {
    return 23.1 / std::sqrt(std::max(1.0 - bohm_k, 1e-6));
}

inline CoupledState make_coupled_state(const StationarySolution& sol, int nx, int nv,
                                       double x_max, double v_min, double v_max) {
    CoupledState st;
    st.stationary = sol;
    st.field = PhaseSpaceField::make(nx, nv, x_max, v_min, v_max);
    st.far_values.resize(static_cast<std::size_t>(nv));
    st.electron_norm = 0.0;
    for (int j = 0; j < nv; ++j) {
        st.far_values[static_cast<std::size_t>(j)] =
            sol.end_state.f1(st.field.v_center(j));
        st.electron_norm += st.far_values[static_cast<std::size_t>(j)] * st.field.dv;
    }
    st.phi.assign(static_cast<std::size_t>(nx), 0.0);
    st.efield.assign(static_cast<std::size_t>(nx), 0.0);
    // warm start from the stationary potential
    for (int i = 0; i < nx; ++i)
        st.phi[static_cast<std::size_t>(i)] = sol.phi_at(st.field.x_center(i));
    return st;
}

// Discretized stationary distribution on the field grid.
inline void load_stationary(CoupledState& st) {
    for (int i = 0; i < st.field.nx; ++i) {
        const double x = st.field.x_center(i);
        for (int j = 0; j < st.field.nv; ++j)
            st.field.at(i, j) = reconstruct_fs(st.stationary, x, st.field.v_center(j));
    }
}

inline std::vector<double> column_density(const PhaseSpaceField& f) {
    std::vector<double> rho(static_cast<std::size_t>(f.nx), 0.0);
    for (int i = 0; i < f.nx; ++i) {
        double acc = 0.0;
        for (int j = 0; j < f.nv; ++j)
            acc += f.at(i, j);
        rho[static_cast<std::size_t>(i)] = acc * f.dv;
    }
    return rho;
}

inline double cfl_dt(const CoupledState& st, const EvolveSpec& spec) {
    if (spec.dt_override > 0.0)
        return spec.dt_override;
    const double vmax = std::max(std::abs(st.field.v_min), std::abs(st.field.v_max));
    double dt = spec.cfl * st.field.dx / vmax;
    double emax = 0.0;
    for (double e : st.efield)
        emax = std::max(emax, std::abs(e));
    if (emax > 0.0)
        dt = std::min(dt, spec.cfl * st.field.dv / emax);
    return dt;
}

inline void solve_coupled_poisson(CoupledState& st) {
    auto rho = column_density(st.field);
    st.phi = solve_wall_potential(rho, st.field.dx, st.stationary.model, st.phi_b(),
                                  &st.phi, st.electron_norm, 1e-10, 50,
                                  &st.last_poisson);
    // E = d_x Phi, centered with the same ghost closure as the solve
    const int n = st.field.nx;
    const double h = st.field.dx;
    for (int i = 0; i < n; ++i) {
        const double um = i == 0 ? 2.0 * st.phi_b() - st.phi[0] : st.phi[static_cast<std::size_t>(i) - 1];
        const double up = i == n - 1 ? -st.phi[static_cast<std::size_t>(n) - 1]
                                     : st.phi[static_cast<std::size_t>(i) + 1];
        st.efield[static_cast<std::size_t>(i)] = (up - um) / (2.0 * h);
    }
}

// Pin the far-field column to F_inf; the introduced mass delta is credited to
// the ledger so the budget stays exact.
inline void pin_far_column(CoupledState& st) {
    const int i = st.field.nx - 1;
    for (int j = 0; j < st.field.nv; ++j) {
        const double target = st.far_values[static_cast<std::size_t>(j)];
        st.field.ledger.pin_correction +=
            (target - st.field.at(i, j)) * st.field.dx * st.field.dv;
        st.field.at(i, j) = target;
    }
}

// One Strang step; propagates NewtonDiverged from the Poisson solve (for
// instability runs the caller records that as nonlinear saturation).
inline void step(CoupledState& st, double dt) {
    advect_x(st.field, 0.5 * dt, st.far_values);
    if (st.poisson_enabled) {
        solve_coupled_poisson(st);
        advect_v(st.field, st.efield, dt);
    }
    advect_x(st.field, 0.5 * dt, st.far_values);
    if (!st.field.periodic_x)
        pin_far_column(st);
    st.field.time += dt;
}

// Support box of the deviation |g - reference| above a relative threshold.
struct SupportBox {
    bool empty = true;
    double v_min_occupied = 0.0;
    double v_max_occupied = 0.0;
    double x_min_occupied = 0.0;
    double x_max_occupied = 0.0;
    double band_mass = 0.0; // deviation mass inside a watched velocity band
};

inline SupportBox track_support(const PhaseSpaceField& f,
                                const std::vector<double>& reference,
                                double rel_threshold, double band_lo = 0.0,
                                double band_hi = 0.0) {
    SupportBox box;
    double dev_max = 0.0;
    for (std::size_t k = 0; k < f.g.size(); ++k)
        dev_max = std::max(dev_max, std::abs(f.g[k] - reference[k]));
    if (dev_max == 0.0)
        return box;
    const double cut = rel_threshold * dev_max;
    for (int i = 0; i < f.nx; ++i) {
        for (int j = 0; j < f.nv; ++j) {
            const double dev =
                std::abs(f.at(i, j) - reference[static_cast<std::size_t>(i) * f.nv + j]);
            if (dev <= cut)
                continue;
            const double v = f.v_center(j);
            const double x = f.x_center(i);
            if (box.empty) {
                box.empty = false;
                box.v_min_occupied = box.v_max_occupied = v;
                box.x_min_occupied = box.x_max_occupied = x;
            } else {
                box.v_min_occupied = std::min(box.v_min_occupied, v);
                box.v_max_occupied = std::max(box.v_max_occupied, v);
                box.x_min_occupied = std::min(box.x_min_occupied, x);
                box.x_max_occupied = std::max(box.x_max_occupied, x);
            }
            if (band_lo < band_hi && v > band_lo && v < band_hi)
                box.band_mass += dev * f.dx * f.dv;
        }
    }
    return box;
}

} // namespace sheathkit
