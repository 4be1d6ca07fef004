#pragma once

// Reduced phase-space field g(t, x, xi_1) on a uniform tensor grid of cell
// centers, with semi-Lagrangian transport.
//
// Transport applies the monotonized cubic interpolation to the cumulative
// mass W(x) = int g (the primitive), not to g pointwise: the interpolant of
// W is a cubic Hermite whose node derivatives are PPM-style 4th-order edge
// values of g, slope-limited so W stays monotone wherever g >= 0. Updating
// cells by differences of W at the shifted edges makes the scheme flux-form:
// cell masses telescope, so interior mass is conserved to round-off and the
// boundary fluxes are exactly the mass crossing each edge. Limited transport
// of nonnegative data stays nonnegative.
//
// Edge rules: the wall absorbs (zero inflow for xi_1 > 0, free outflow for
// xi_1 < 0), the far edge feeds the end state F_inf for xi_1 < 0, and the
// velocity-grid edges are zero (clipped mass is monitored). A periodic rule
// exists as a test hook.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sheathkit/distributions.hpp"
#include "sheathkit/errors.hpp"

namespace sheathkit {

// zero: vacuum inflow; constant_state: prescribed inflow state; outflow:
// characteristics exit, ghost cells copy the boundary cell; periodic: hook.
enum class EdgeRule { zero, constant_state, outflow, periodic };

struct LineFluxes {
    double left = 0.0;  // mass crossing the left edge, positive rightward
    double right = 0.0; // mass crossing the right edge, positive rightward
};

namespace sl {

// Hermite basis integrals on [0, s]: the cumulative mass within one cell is
// h * (w h01(s) + m_L h10(s) + m_R h11(s)), i.e. the density reconstruction
// is the parabola with cell mean w and edge values m_L, m_R.
inline double h01(double s) { return s * s * (3.0 - 2.0 * s); }
inline double h10(double s) { return s * (1.0 + s * (s - 2.0)); }
inline double h11(double s) { return s * s * (s - 1.0); }

struct Line {
    const double* w;
    int n;
    double h;
    EdgeRule left_rule, right_rule;
    double left_state = 0.0, right_state = 0.0;
    bool limiter = true;

    double ghost(int k) const {
        if (k >= 0 && k < n)
            return w[k];
        if (left_rule == EdgeRule::periodic)
            return w[((k % n) + n) % n];
        // outflow sides extrapolate linearly (clamped nonnegative) so the
        // boundary cells keep the interior truncation order
        if (k < 0) {
            if (left_rule == EdgeRule::constant_state)
                return left_state;
            if (left_rule == EdgeRule::outflow)
                return std::max(0.0, w[0] + (-k) * (w[0] - w[1]));
            return 0.0;
        }
        if (right_rule == EdgeRule::constant_state)
            return right_state;
        if (right_rule == EdgeRule::outflow)
            return std::max(0.0, w[n - 1] + (k - n + 1) * (w[n - 1] - w[n - 2]));
        return 0.0;
    }

    // 4th-order edge value of the density at edge k (between cells k-1, k),
    // optionally limited into the monotone box of the adjacent cells.
    double edge_value(int k) const {
        double m = (-ghost(k - 2) + 7.0 * ghost(k - 1) + 7.0 * ghost(k) - ghost(k + 1)) / 12.0;
        if (limiter) {
            const double cap = 3.0 * std::min(ghost(k - 1), ghost(k));
            m = std::clamp(m, 0.0, std::max(cap, 0.0));
        }
        return m;
    }

    // mass in [e_cell, e_cell + s h] divided by h
    double partial(int cell, double s) const {
        return ghost(cell) * h01(s) + edge_value(cell) * h10(s) +
               edge_value(cell + 1) * h11(s);
    }
};

// Shift the content of one line by displacement a (departure x - a),
// conservative flux form. All fluxes are assembled from cell-local values
// (whole-cell masses plus a partial-cell integral), so floating-point noise
// stays proportional to the local density, never to the line total. Returns
// the boundary fluxes (mass crossing, positive rightward).
inline LineFluxes advect_line(std::vector<double>& w, double h, double a,
                              EdgeRule left_rule, EdgeRule right_rule,
                              double left_state, double right_state, bool limiter) {
    const int n = static_cast<int>(w.size());
    Line line{w.data(), n, h, left_rule, right_rule, left_state, right_state, limiter};

    // F[k] = mass crossing edge k rightward = int over [e_k - a, e_k]
    std::vector<double> flux(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) {
        const double y = k * h - a; // departure point of edge k
        const int m = static_cast<int>(std::floor(y / h));
        const double s = y / h - m;
        double acc = 0.0;
        if (m < k) { // a > 0: cells m..k-1 contribute
            for (int j = m + 1; j < k; ++j)
                acc += line.ghost(j);
            acc += line.ghost(m) - line.partial(m, s);
        } else { // a < 0: mass flows leftward across edge k
            for (int j = k; j < m; ++j)
                acc -= line.ghost(j);
            acc -= line.partial(m, s);
        }
        flux[static_cast<std::size_t>(k)] = acc * h;
    }

    for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] +=
            (flux[static_cast<std::size_t>(i)] - flux[static_cast<std::size_t>(i) + 1]) / h;

    return {flux.front(), flux.back()};
}

} // namespace sl

struct FluxLedger {
    double outflux_wall = 0.0; // ion mass absorbed at x = 0
    double influx_far = 0.0;   // end-state mass fed at x = x_max
    double outflux_far = 0.0;  // mass leaving through x = x_max (xi_1 > 0)
    double vclip = 0.0;        // mass clipped at the velocity-grid edges
    double pin_correction = 0.0;

    double net_gain() const {
        return influx_far - outflux_wall - outflux_far - vclip + pin_correction;
    }
};

struct PhaseSpaceField {
    int nx = 0, nv = 0;
    double x_max = 0.0, v_min = 0.0, v_max = 0.0;
    double dx = 0.0, dv = 0.0;
    double time = 0.0;
    std::vector<double> g; // row-major, g[ix * nv + iv], cell averages
    FluxLedger ledger;

    // test hooks
    bool limiter = true;
    bool periodic_x = false;

    static PhaseSpaceField make(int nx_, int nv_, double x_max_, double v_min_,
                                double v_max_) {
        PhaseSpaceField f;
        f.nx = nx_;
        f.nv = nv_;
        f.x_max = x_max_;
        f.v_min = v_min_;
        f.v_max = v_max_;
        f.dx = x_max_ / nx_;
        f.dv = (v_max_ - v_min_) / nv_;
        f.g.assign(static_cast<std::size_t>(nx_) * nv_, 0.0);
        return f;
    }

    double x_center(int i) const { return (i + 0.5) * dx; }
    double v_center(int j) const { return v_min + (j + 0.5) * dv; }
    double& at(int i, int j) { return g[static_cast<std::size_t>(i) * nv + j]; }
    double at(int i, int j) const { return g[static_cast<std::size_t>(i) * nv + j]; }

    double total_mass() const {
        double m = 0.0;
        for (double v : g)
            m += v;
        return m * dx * dv;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : g)
            m = std::max(m, std::abs(v));
        return m;
    }

    double min_value() const {
        double m = g.empty() ? 0.0 : g[0];
        for (double v : g)
            m = std::min(m, v);
        return m;
    }
};

// x-transport: g(x, xi) <- g(x - xi dt, xi). Wall edge absorbs (zero inflow
// for xi > 0); far edge feeds F_inf for xi < 0. far_values[j] = F_inf
// marginal at v_center(j).
inline void advect_x(PhaseSpaceField& f, double dt,
                     const std::vector<double>& far_values) {
    std::vector<double> row(static_cast<std::size_t>(f.nx));
    for (int j = 0; j < f.nv; ++j) {
        const double v = f.v_center(j);
        const double a = v * dt;
        if (a == 0.0)
            continue;
        for (int i = 0; i < f.nx; ++i)
            row[static_cast<std::size_t>(i)] = f.at(i, j);

        // wall: vacuum inflow for v > 0, free outflow for v < 0;
        // far edge: end-state inflow for v < 0, free outflow for v > 0
        EdgeRule left = f.periodic_x ? EdgeRule::periodic
                                     : (v < 0.0 ? EdgeRule::outflow : EdgeRule::zero);
        EdgeRule right = f.periodic_x
                             ? EdgeRule::periodic
                             : (v < 0.0 ? EdgeRule::constant_state : EdgeRule::outflow);
        auto fluxes = sl::advect_line(row, f.dx, a, left, right, 0.0,
                                      v < 0.0 ? far_values[static_cast<std::size_t>(j)] : 0.0,
                                      f.limiter);
        for (int i = 0; i < f.nx; ++i)
            f.at(i, j) = row[static_cast<std::size_t>(i)];

        if (!f.periodic_x) {
            if (v < 0.0) {
                f.ledger.outflux_wall += -fluxes.left * f.dv;
                f.ledger.influx_far += -fluxes.right * f.dv;
            } else {
                f.ledger.outflux_far += fluxes.right * f.dv;
            }
        }
    }
}

// v-transport: g(x, xi) <- g(x, xi - E(x) dt); departure points outside the
// velocity grid take 0, and any mass leaving through the grid edges is
// accumulated in the clip monitor.
inline void advect_v(PhaseSpaceField& f, const std::vector<double>& efield, double dt) {
    std::vector<double> col(static_cast<std::size_t>(f.nv));
    for (int i = 0; i < f.nx; ++i) {
        const double a = efield[static_cast<std::size_t>(i)] * dt;
        if (a == 0.0)
            continue;
        for (int j = 0; j < f.nv; ++j)
            col[static_cast<std::size_t>(j)] = f.at(i, j);
        auto fluxes = sl::advect_line(col, f.dv, a, EdgeRule::zero, EdgeRule::zero,
                                      0.0, 0.0, f.limiter);
        for (int j = 0; j < f.nv; ++j)
            f.at(i, j) = col[static_cast<std::size_t>(j)];
        f.ledger.vclip += (std::max(-fluxes.left, 0.0) + std::max(fluxes.right, 0.0)) * f.dx;
    }
}

} // namespace sheathkit
