#pragma once

// End-to-end experiment drivers: stability runs, instability runs, Bohm
// scans, stationary profiles. Each run writes one directory with
// manifest.json, series.csv, snapshots/, verdict.json; identical spec + seed
// gives bit-identical CSV output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sheathkit/config.hpp"
#include "sheathkit/diagnostics.hpp"
#include "sheathkit/distributions.hpp"
#include "sheathkit/field.hpp"
#include "sheathkit/poisson.hpp"
#include "sheathkit/stationary.hpp"
#include "sheathkit/vlasov.hpp"

namespace sheathkit {

inline constexpr const char* kVersion = "0.1.0";

enum class ExperimentKind { stability, instability, bohm_scan, stationary_only, evolve };

struct EvolveGridSpec {
    int nx = 256;
    int nv = 256;
    double x_max = 0.0; // 0: derive from the decay rate
    double cfl = 0.9;
    double t_end = 5.0;
    double dt_override = 0.0;
    int snapshot_every = 1; // series cadence, in steps
    int file_snapshots = 4; // phase-space dumps over the run
};

struct PerturbationSpec {
    double delta = 0.0;
    double x_lo = 1.0, x_hi = 4.0;
    double v_lo = 0.0, v_hi = 0.0;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::stability;
    PlasmaConfig plasma;
    double beta = 0.5;
    double epsilon = 0.0; // stability support margin, in (0, r/2)
    std::string select_mode; // "", "i", "ii": pick constants before the run
    EvolveGridSpec evolve;
    PerturbationSpec perturbation;
    double r1 = 0.5, r2 = 1.5;           // instability support box
    double escape_factor = 100.0;        // relative escape threshold
    double escape_absolute = 0.0;        // absolute threshold, 0 = unused
    double fit_lo = 0.2, fit_hi = 0.8;   // fit window as fractions of the run
    double support_threshold = 1e-8;     // relative support-tracking cut
    std::uint64_t seed = 1;
    std::string out_dir;

    // bohm scan parameters
    double scan_u_lo = -3.0, scan_u_hi = -1.0;
    int scan_count = 9;
    double scan_phi_max = 2.0;
};

// --- JSON loading -------------------------------------------------------------

inline ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "stability")
        return ExperimentKind::stability;
    if (s == "instability")
        return ExperimentKind::instability;
    if (s == "bohm_scan" || s == "bohm-scan")
        return ExperimentKind::bohm_scan;
    if (s == "stationary_only" || s == "stationary")
        return ExperimentKind::stationary_only;
    if (s == "evolve")
        return ExperimentKind::evolve;
    throw InvalidConfig("unknown experiment kind: " + s);
}

inline ExperimentSpec experiment_spec_from_json(const nlohmann::json& j) {
    ExperimentSpec s;
    if (j.contains("experiment"))
        s.kind = experiment_kind_from_string(j.at("experiment").get<std::string>());
    s.plasma = plasma_config_from_json(j.at("plasma"));
    s.beta = j.value("beta", s.beta);
    s.epsilon = j.value("epsilon", 0.25 * s.plasma.r);
    s.select_mode = j.value("select_mode", std::string{});
    if (j.contains("evolve")) {
        const auto& e = j.at("evolve");
        s.evolve.nx = e.value("nx", s.evolve.nx);
        s.evolve.nv = e.value("nv", s.evolve.nv);
        s.evolve.x_max = e.value("x_max", s.evolve.x_max);
        s.evolve.cfl = e.value("cfl", s.evolve.cfl);
        s.evolve.t_end = e.value("t_end", s.evolve.t_end);
        s.evolve.dt_override = e.value("dt", s.evolve.dt_override);
        s.evolve.snapshot_every = e.value("snapshot_every", s.evolve.snapshot_every);
        s.evolve.file_snapshots = e.value("file_snapshots", s.evolve.file_snapshots);
    }
    if (j.contains("perturbation")) {
        const auto& p = j.at("perturbation");
        s.perturbation.delta = p.value("delta", 0.0);
        s.perturbation.x_lo = p.value("x_lo", s.perturbation.x_lo);
        s.perturbation.x_hi = p.value("x_hi", s.perturbation.x_hi);
        s.perturbation.v_lo = p.value("v_lo", s.perturbation.v_lo);
        s.perturbation.v_hi = p.value("v_hi", s.perturbation.v_hi);
    }
    if (j.contains("instability")) {
        const auto& p = j.at("instability");
        s.r1 = p.value("r1", s.r1);
        s.r2 = p.value("r2", s.r2);
        s.escape_factor = p.value("escape_factor", s.escape_factor);
        s.escape_absolute = p.value("escape_absolute", s.escape_absolute);
    }
    if (j.contains("fit_window")) {
        s.fit_lo = j.at("fit_window").at(0).get<double>();
        s.fit_hi = j.at("fit_window").at(1).get<double>();
    }
    s.support_threshold = j.value("support_threshold", s.support_threshold);
    s.seed = j.value("seed", static_cast<std::uint64_t>(1));
    s.out_dir = j.value("out_dir", std::string{});
    if (j.contains("scan")) {
        const auto& p = j.at("scan");
        s.scan_u_lo = p.value("u_lo", s.scan_u_lo);
        s.scan_u_hi = p.value("u_hi", s.scan_u_hi);
        s.scan_count = p.value("count", s.scan_count);
        s.scan_phi_max = p.value("phi_max", s.scan_phi_max);
    }
    return s;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidConfig("cannot open spec file: " + path);
    nlohmann::json j;
    in >> j;
    return experiment_spec_from_json(j);
}

// --- helpers ------------------------------------------------------------------

inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// C^2 compactly supported bump on [0,1], peak value 1 at the midpoint.
inline double bump01(double t) {
    if (t <= 0.0 || t >= 1.0)
        return 0.0;
    const double p = t * (1.0 - t);
    return 64.0 * p * p * p;
}

struct SeriesRow {
    double t = 0.0;
    double l2_weighted = 0.0;
    double h1_weighted = 0.0;
    double n_l2_weighted = 0.0;
    double energy = 0.0;
    double supp_min_xi = 0.0;
    double supp_max_xi = 0.0;
    double boundary_outflux = 0.0; // cumulative wall outflux
    double mass_total = 0.0;
};

inline void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
    std::ofstream out(path);
    out << "t,l2_weighted,h1_weighted,n_l2_weighted,energy,supp_min_xi,supp_max_xi,"
           "boundary_outflux,mass_total\n";
    for (const auto& r : rows) {
        out << fmt_g17(r.t) << ',' << fmt_g17(r.l2_weighted) << ','
            << fmt_g17(r.h1_weighted) << ',' << fmt_g17(r.n_l2_weighted) << ','
            << fmt_g17(r.energy) << ',' << fmt_g17(r.supp_min_xi) << ','
            << fmt_g17(r.supp_max_xi) << ',' << fmt_g17(r.boundary_outflux) << ','
            << fmt_g17(r.mass_total) << '\n';
    }
}

inline void write_snapshot(const std::string& path, const PhaseSpaceField& f) {
    std::ofstream out(path);
    out << "t " << fmt_g17(f.time) << " nx " << f.nx << " nv " << f.nv << " x_max "
        << fmt_g17(f.x_max) << " v_min " << fmt_g17(f.v_min) << " v_max "
        << fmt_g17(f.v_max) << '\n';
    for (int i = 0; i < f.nx; ++i) {
        for (int j = 0; j < f.nv; ++j)
            out << fmt_g17(f.at(i, j)) << (j + 1 == f.nv ? '\n' : ' ');
    }
}

// --- run setup ------------------------------------------------------------------

struct PreparedRun {
    EndState end_state;
    StationarySolution stationary;
    CoupledState state;
    std::vector<double> g_s;  // discretized stationary distribution
    double dt = 0.0;
    double initial_h1 = 0.0;
    nlohmann::json manifest;
};

// Builds the coupled state with F_0 = delta M1^{1/2} g0 + F^s, where g0 is a
// product of C^2 bumps over the spec box, normalized so
// ||e^{beta x/2} g0||_{H1} = 1 before scaling by delta.
inline PreparedRun prepare_run(const ExperimentSpec& spec, double phi_b,
                               double v_box_lo, double v_box_hi, double r2_support) {
    PreparedRun run;
    PlasmaConfig cfg = spec.plasma;
    cfg.phi_b = phi_b;
    cfg.validate();
    run.end_state = normalize_quasi_neutral(cfg);
    run.stationary = solve_stationary_potential(run.end_state, cfg.electron_model, phi_b);

    auto [vlo, vhi] = velocity_bounds(cfg, r2_support);
    double x_max = spec.evolve.x_max > 0.0 ? spec.evolve.x_max
                                           : default_x_max(run.stationary.bohm_k);
    run.state = make_coupled_state(run.stationary, spec.evolve.nx, spec.evolve.nv,
                                   x_max, vlo, vhi);
    load_stationary(run.state);
    run.g_s = run.state.field.g;

    // normalized initial perturbation
    if (spec.perturbation.delta != 0.0) {
        PerturbationField g0;
        g0.nx = run.state.field.nx;
        g0.nv = run.state.field.nv;
        g0.dx = run.state.field.dx;
        g0.dv = run.state.field.dv;
        g0.x0 = run.state.field.x_center(0);
        g0.v0 = run.state.field.v_center(0);
        g0.f.assign(run.state.field.g.size(), 0.0);
        for (int i = 0; i < g0.nx; ++i) {
            const double bx = bump01((g0.x_center(i) - spec.perturbation.x_lo) /
                                     (spec.perturbation.x_hi - spec.perturbation.x_lo));
            if (bx == 0.0)
                continue;
            for (int j = 0; j < g0.nv; ++j) {
                const double bv =
                    bump01((g0.v_center(j) - v_box_lo) / (v_box_hi - v_box_lo));
                if (bv != 0.0)
                    g0.at(i, j) = bx * bv;
            }
        }
        const double h1 = weighted_h1(g0, spec.beta, cfg.theta_infty).h1;
        if (!(h1 > 0.0))
            throw InvalidConfig("perturbation box does not intersect the grid");
        const double scale = spec.perturbation.delta / h1;
        for (int i = 0; i < g0.nx; ++i)
            for (int j = 0; j < g0.nv; ++j)
                if (g0.at(i, j) != 0.0)
                    run.state.field.at(i, j) +=
                        scale * g0.at(i, j) *
                        std::exp(0.5 * run.end_state.log_m1(g0.v_center(j)));
    }

    solve_coupled_poisson(run.state);
    EvolveSpec espec;
    espec.cfl = spec.evolve.cfl;
    espec.dt_override = spec.evolve.dt_override;
    run.dt = cfl_dt(run.state, espec);
    // dt * max|xi| / dx <= CFL and dt * max|E| / dv <= CFL must hold even for
    // an explicit dt override
    espec.dt_override = 0.0;
    if (run.dt > cfl_dt(run.state, espec) * (1.0 + 1e-12))
        throw InvalidConfig("dt override violates the CFL constraint");

    {
        auto f = perturbation_f(run.state.field, run.g_s, run.end_state);
        run.initial_h1 = weighted_h1(f, spec.beta, cfg.theta_infty).h1;
    }

    run.manifest = {
        {"version", kVersion},
        {"plasma", to_json(cfg)},
        {"beta", spec.beta},
        {"epsilon", spec.epsilon},
        {"seed", spec.seed},
        {"grid",
         {{"nx", run.state.field.nx},
          {"nv", run.state.field.nv},
          {"x_max", run.state.field.x_max},
          {"v_min", run.state.field.v_min},
          {"v_max", run.state.field.v_max},
          {"dx", run.state.field.dx},
          {"dv", run.state.field.dv},
          {"dt", run.dt}}},
        {"perturbation",
         {{"delta", spec.perturbation.delta},
          {"x_lo", spec.perturbation.x_lo},
          {"x_hi", spec.perturbation.x_hi},
          {"v_lo", v_box_lo},
          {"v_hi", v_box_hi}}},
        {"constants",
         {{"rho_infty", run.end_state.rho_infty},
          {"bohm_k", run.stationary.bohm_k},
          {"mu_infty", mu_infty(run.end_state)},
          {"sup_b", run.stationary.sup_b.exceeds_table
                        ? nlohmann::json("exceeds_table")
                        : nlohmann::json(run.stationary.sup_b.value)}}},
        {"initial_weighted_h1", run.initial_h1},
    };
    return run;
}

struct RunOutcome {
    std::vector<SeriesRow> series;
    bool saturated = false;
    double saturation_time = -1.0;
    double escape_time = -1.0;
    double end_time = 0.0;
    double mass_drift = 0.0;
    double max_occupied_xi = -std::numeric_limits<double>::infinity();
    double min_occupied_xi = std::numeric_limits<double>::infinity();
    bool band_occupied = false;
    bool weight_overflow = false;
    double vclip = 0.0;        // mass clipped at the velocity-grid edges
    double corner_mass = 0.0;  // deviation mass entering x^2 + xi^2 < s^2
    double worst_negative = 0.0; // most negative g / max g seen (>= -1e-12 expected)
};

// Shared evolution loop with diagnostics at the snapshot cadence.
// corner_s > 0 monitors (without forbidding) deviation mass entering the
// characteristic corner x^2 + xi_1^2 < corner_s^2 at the wall.
inline RunOutcome evolve_loop(PreparedRun& run, const ExperimentSpec& spec,
                              double band_lo, double band_hi, double escape_norm,
                              const std::string& snapshot_dir = "",
                              double corner_s = 0.0) {
    RunOutcome out;
    CoupledState& st = run.state;
    const double theta = st.stationary.end_state.config.theta_infty;
    const double m0 = st.field.total_mass();
    const int steps = std::max(1, static_cast<int>(std::ceil(spec.evolve.t_end / run.dt)));
    const int snap_file_every =
        spec.evolve.file_snapshots > 0
            ? std::max(1, steps / spec.evolve.file_snapshots)
            : steps + 1;

    auto record = [&]() {
        SeriesRow row;
        row.t = st.field.time;
        try {
            auto f = perturbation_f(st.field, run.g_s, run.end_state);
            auto w = weighted_h1(f, spec.beta, theta);
            auto mo = moments(f, run.end_state);
            row.l2_weighted = w.l2;
            row.h1_weighted = w.h1;
            row.n_l2_weighted = weighted_l2_x(mo.n, f.x_center(0), f.dx, spec.beta);
            row.energy = energy_functional(w, row.n_l2_weighted, theta);
        } catch (const WeightOverflow&) {
            out.weight_overflow = true;
            row.l2_weighted = row.h1_weighted = row.energy =
                std::numeric_limits<double>::quiet_NaN();
        }
        auto box = track_support(st.field, run.g_s, spec.support_threshold, band_lo,
                                 band_hi);
        if (corner_s > 0.0) {
            double cm = 0.0;
            for (int i = 0; i < st.field.nx; ++i) {
                const double x = st.field.x_center(i);
                if (x >= corner_s)
                    break;
                for (int j = 0; j < st.field.nv; ++j) {
                    const double v = st.field.v_center(j);
                    if (x * x + v * v < corner_s * corner_s)
                        cm += std::abs(st.field.at(i, j) -
                                       run.g_s[static_cast<std::size_t>(i) * st.field.nv + j]) *
                              st.field.dx * st.field.dv;
                }
            }
            out.corner_mass = std::max(out.corner_mass, cm);
        }
        row.supp_min_xi = box.empty ? 0.0 : box.v_min_occupied;
        row.supp_max_xi = box.empty ? 0.0 : box.v_max_occupied;
        if (!box.empty) {
            out.max_occupied_xi = std::max(out.max_occupied_xi, box.v_max_occupied);
            out.min_occupied_xi = std::min(out.min_occupied_xi, box.v_min_occupied);
        }
        if (box.band_mass > 0.0)
            out.band_occupied = true;
        row.boundary_outflux = st.field.ledger.outflux_wall;
        row.mass_total = st.field.total_mass();
        const double mx = st.field.max_abs();
        if (mx > 0.0)
            out.worst_negative = std::min(out.worst_negative, st.field.min_value() / mx);
        out.series.push_back(row);
        return row;
    };

    record();
    int snap_index = 0;
    if (!snapshot_dir.empty())
        write_snapshot(snapshot_dir + "/snap_" + std::to_string(snap_index++) + ".dat",
                       st.field);

    for (int k = 1; k <= steps; ++k) {
        try {
            step(st, run.dt);
        } catch (const NewtonDiverged&) {
            // nonlinear saturation: the coupled solve left the small-data
            // regime; stop and report rather than crash
            out.saturated = true;
            out.saturation_time = st.field.time;
            break;
        }
        if (k % spec.evolve.snapshot_every == 0 || k == steps) {
            SeriesRow row = record();
            if (!snapshot_dir.empty() && k % snap_file_every == 0)
                write_snapshot(snapshot_dir + "/snap_" + std::to_string(snap_index++) +
                                   ".dat",
                               st.field);
            if (escape_norm > 0.0 && row.h1_weighted >= escape_norm) {
                out.escape_time = row.t;
                break;
            }
        }
    }
    out.end_time = st.field.time;
    out.vclip = st.field.ledger.vclip;
    const double mass_end = st.field.total_mass();
    out.mass_drift =
        std::abs(mass_end - m0 - st.field.ledger.net_gain()) / std::max(m0, 1e-300);
    return out;
}

// --- stability ------------------------------------------------------------------

struct StabilityReport {
    bool pass = false;
    RateFit fit;
    double support_bound = 0.0; // -r + 2 eps + 2 dv
    double max_occupied_xi = 0.0;
    bool support_ok = false;
    double mass_drift = 0.0;
    double initial_h1 = 0.0;
    SelectedConstants selected;
    RunOutcome outcome;
    nlohmann::json manifest;
};

inline void write_run_outputs(const std::string& out_dir, const nlohmann::json& manifest,
                              const std::vector<SeriesRow>& series,
                              const nlohmann::json& verdict) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir + "/snapshots");
    std::ofstream(out_dir + "/manifest.json") << manifest.dump(2) << '\n';
    write_series_csv(out_dir + "/series.csv", series);
    std::ofstream(out_dir + "/verdict.json") << verdict.dump(2) << '\n';
}

inline StabilityReport run_stability(ExperimentSpec spec) {
    StabilityReport rep;

    if (!spec.select_mode.empty()) {
        SelectionMode mode = spec.select_mode == "i" ? SelectionMode::condition_i
                                                     : SelectionMode::condition_ii;
        rep.selected = select_constants(mode, spec.plasma, spec.epsilon);
        if (rep.selected.found) {
            spec.plasma.u_infty = rep.selected.u_infty;
            spec.plasma.theta_infty = rep.selected.theta_infty;
            spec.beta = rep.selected.beta;
        }
    }

    // support hypothesis: the perturbation box must sit in {xi <= -r + eps}
    const double v_cap = -spec.plasma.r + spec.epsilon;
    double v_lo = spec.perturbation.v_lo, v_hi = spec.perturbation.v_hi;
    if (v_lo == 0.0 && v_hi == 0.0) { // default: a band around the drift
        v_lo = spec.plasma.u_infty - 1.0;
        v_hi = std::min(spec.plasma.u_infty + 1.0, v_cap);
    }
    if (!(v_hi <= v_cap))
        throw InvalidConfig("stability perturbation support must satisfy xi <= -r + eps");

    PreparedRun run = prepare_run(spec, spec.plasma.phi_b, v_lo, v_hi, 0.0);
    rep.initial_h1 = run.initial_h1;
    rep.manifest = run.manifest;

    std::string snapdir;
    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir + "/snapshots");
        snapdir = spec.out_dir + "/snapshots";
    }
    rep.outcome = evolve_loop(run, spec, 0.0, 0.0, 0.0, snapdir,
                              spec.plasma.r - 2.0 * spec.epsilon);

    std::vector<double> ts, h1s;
    for (const auto& r : rep.outcome.series) {
        ts.push_back(r.t);
        h1s.push_back(r.h1_weighted);
    }
    const double T = rep.outcome.end_time;
    rep.fit = fit_rate(ts, h1s, spec.fit_lo * T, spec.fit_hi * T, /*growth=*/false);

    rep.support_bound = -spec.plasma.r + 2.0 * spec.epsilon + 2.0 * run.state.field.dv;
    rep.max_occupied_xi = rep.outcome.max_occupied_xi;
    rep.support_ok = rep.outcome.max_occupied_xi <= rep.support_bound;
    rep.mass_drift = rep.outcome.mass_drift;
    rep.pass = rep.fit.gamma > 0.0 && rep.fit.r2 > 0.95 && rep.support_ok &&
               !rep.outcome.weight_overflow;

    if (!spec.out_dir.empty()) {
        nlohmann::json verdict = {
            {"experiment", "stability"},
            {"pass", rep.pass},
            {"gamma_fit", rep.fit.gamma},
            {"r2", rep.fit.r2},
            {"support_bound", rep.support_bound},
            {"max_occupied_xi", rep.max_occupied_xi},
            {"support_ok", rep.support_ok},
            {"mass_drift", rep.mass_drift},
            {"vclip_mass", rep.outcome.vclip},
            {"corner_mass", rep.outcome.corner_mass},
            {"selected_margin", rep.selected.margin},
        };
        write_run_outputs(spec.out_dir, rep.manifest, rep.outcome.series, verdict);
    }
    return rep;
}

// --- instability ------------------------------------------------------------------

struct InstabilityReport {
    bool pass = false;
    RateFit fit;
    double escape_time = -1.0;    // first crossing of the escape norm
    double escape_norm = 0.0;
    bool band_empty = true;       // (-r/2, R1/2) stays unoccupied
    double support_bound = 0.0;   // 2 R2 + 2 dv
    double max_occupied_xi = 0.0;
    bool support_ok = false;
    bool saturated = false;
    double mass_drift = 0.0;
    double initial_h1 = 0.0;
    RunOutcome outcome;
    nlohmann::json manifest;
};

// Theorem setup: (F_0, Phi_b) = (delta M^{1/2} g0 + F^s, delta), with g0
// supported in [R1, R2], R2 > 2 R1.
inline InstabilityReport run_instability(const ExperimentSpec& spec) {
    if (!(spec.r1 > 0.0 && spec.r2 > 2.0 * spec.r1))
        throw InvalidConfig("instability requires 0 < R1 and R2 > 2 R1");
    if (!(spec.perturbation.delta > 0.0))
        throw InvalidConfig("instability requires delta > 0");

    InstabilityReport rep;
    PreparedRun run = prepare_run(spec, /*phi_b=*/spec.perturbation.delta, spec.r1,
                                  spec.r2, spec.r2);
    rep.initial_h1 = run.initial_h1;
    rep.manifest = run.manifest;

    rep.escape_norm = spec.escape_absolute > 0.0
                          ? spec.escape_absolute
                          : spec.escape_factor * run.initial_h1;

    std::string snapdir;
    if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir + "/snapshots");
        snapdir = spec.out_dir + "/snapshots";
    }
    rep.outcome = evolve_loop(run, spec, -0.5 * spec.plasma.r, 0.5 * spec.r1,
                              rep.escape_norm, snapdir,
                              std::min(0.5 * spec.plasma.r, 0.5 * spec.r1));
    rep.escape_time = rep.outcome.escape_time;
    rep.saturated = rep.outcome.saturated;
    rep.band_empty = !rep.outcome.band_occupied;
    rep.mass_drift = rep.outcome.mass_drift;

    std::vector<double> ts, h1s;
    for (const auto& r : rep.outcome.series) {
        ts.push_back(r.t);
        h1s.push_back(r.h1_weighted);
    }
    const double T = rep.outcome.escape_time > 0.0 ? rep.outcome.escape_time
                                                   : rep.outcome.end_time;
    rep.fit = fit_rate(ts, h1s, spec.fit_lo * T, spec.fit_hi * T, /*growth=*/true);

    rep.support_bound = 2.0 * spec.r2 + 2.0 * run.state.field.dv;
    rep.max_occupied_xi = rep.outcome.max_occupied_xi;
    rep.support_ok = rep.outcome.max_occupied_xi <= rep.support_bound;
    rep.pass = rep.fit.gamma > 0.0 && rep.fit.r2 > 0.95 && rep.band_empty &&
               rep.support_ok;

    if (!spec.out_dir.empty()) {
        nlohmann::json verdict = {
            {"experiment", "instability"},
            {"pass", rep.pass},
            {"gamma_fit", rep.fit.gamma},
            {"r2", rep.fit.r2},
            {"escape_time", rep.escape_time},
            {"escape_norm", rep.escape_norm},
            {"band_empty", rep.band_empty},
            {"support_bound", rep.support_bound},
            {"max_occupied_xi", rep.max_occupied_xi},
            {"saturated", rep.saturated},
            {"mass_drift", rep.mass_drift},
            {"vclip_mass", rep.outcome.vclip},
            {"corner_mass", rep.outcome.corner_mass},
        };
        write_run_outputs(spec.out_dir, rep.manifest, rep.outcome.series, verdict);
    }
    return rep;
}

// --- Bohm scan ---------------------------------------------------------------------

struct BohmScanRow {
    double u_infty = 0.0;
    double bohm_k = 0.0;
    double sup_b = 0.0;
    bool sup_b_exceeds = false;
    std::string verdict; // "solvable" | "no stationary solution (...)" | error
};

struct BohmScanReport {
    std::vector<BohmScanRow> rows;
    bool transition_found = false;
    double transition_u = 0.0; // |u| bracketing solvable/unsolvable, to 1e-4
};

inline BohmScanRow bohm_scan_row(PlasmaConfig cfg, double u, double phi_max) {
    BohmScanRow row;
    row.u_infty = u;
    cfg.u_infty = u;
    try {
        cfg.validate();
        EndState es = normalize_quasi_neutral(cfg);
        row.bohm_k = bohm_integral(es);
        if (row.bohm_k >= 1.0) {
            row.verdict = "no stationary solution (Bohm violated)";
            return row;
        }
        auto sp = sagdeev(es, cfg.electron_model, phi_max);
        auto sb = sup_B(sp);
        row.sup_b = sb.value;
        row.sup_b_exceeds = sb.exceeds_table;
        const bool solvable = sb.exceeds_table ? true : cfg.phi_b < sb.value;
        row.verdict = solvable ? "solvable" : "no stationary solution (Phi_b >= sup B)";
    } catch (const std::exception& e) {
        row.verdict = std::string("error: ") + e.what();
    }
    return row;
}

inline BohmScanReport run_bohm_scan(const ExperimentSpec& spec) {
    BohmScanReport rep;
    const int n = std::max(2, spec.scan_count);
    for (int k = 0; k < n; ++k) {
        const double u = spec.scan_u_lo +
                         (spec.scan_u_hi - spec.scan_u_lo) * k / (n - 1);
        rep.rows.push_back(bohm_scan_row(spec.plasma, u, spec.scan_phi_max));
    }
    // bracket the solvable/unsolvable transition in u, if present
    auto solvable = [](const BohmScanRow& r) { return r.verdict == "solvable"; };
    for (std::size_t k = 0; k + 1 < rep.rows.size(); ++k) {
        const bool a = solvable(rep.rows[k]);
        const bool b = solvable(rep.rows[k + 1]);
        if (a == b)
            continue;
        double lo = rep.rows[k].u_infty, hi = rep.rows[k + 1].u_infty;
        bool lo_solv = a;
        while (std::abs(hi - lo) > 1e-4) {
            const double mid = 0.5 * (lo + hi);
            const bool s = solvable(bohm_scan_row(spec.plasma, mid, spec.scan_phi_max));
            if (s == lo_solv)
                lo = mid;
            else
                hi = mid;
        }
        rep.transition_found = true;
        rep.transition_u = 0.5 * (lo + hi);
        break;
    }

    if (!spec.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(spec.out_dir);
        std::ofstream out(spec.out_dir + "/bohm_scan.csv");
        out << "u_infty,bohm_k,sup_b,verdict\n";
        for (const auto& r : rep.rows) {
            out << fmt_g17(r.u_infty) << ',' << fmt_g17(r.bohm_k) << ','
                << (r.sup_b_exceeds ? std::string("exceeds_phi_max") : fmt_g17(r.sup_b))
                << ",\"" << r.verdict << "\"\n";
        }
        nlohmann::json verdict = {{"experiment", "bohm_scan"},
                                  {"transition_found", rep.transition_found},
                                  {"transition_u", rep.transition_u}};
        std::ofstream(spec.out_dir + "/verdict.json") << verdict.dump(2) << '\n';
    }
    return rep;
}

// --- stationary profile CSV -----------------------------------------------------

inline void write_stationary_csv(const std::string& path, const StationarySolution& sol,
                                 int n_samples = 0) {
    std::ofstream out(path);
    out << "x,phi_s,dphi_s,ion_density,electron_density\n";
    auto emit = [&](double x, double phi, double dphi) {
        out << fmt_g17(x) << ',' << fmt_g17(phi) << ',' << fmt_g17(dphi) << ','
            << fmt_g17(ion_density(phi, sol.end_state)) << ','
            << fmt_g17(electron_density(sol.model, phi)) << '\n';
    };
    if (n_samples <= 0) {
        for (std::size_t k = 0; k < sol.x.size(); ++k)
            emit(sol.x[k], sol.phi_s[k], sol.dphi_s[k]);
    } else {
        const double x_hi = sol.x_tail * 1.5;
        for (int k = 0; k < n_samples; ++k) {
            const double x = x_hi * k / (n_samples - 1);
            emit(x, sol.phi_at(x), sol.dphi_at(x));
        }
    }
}

} // namespace sheathkit
