// sheathkit command-line driver.
//
// Subcommands:
//   stationary        solve the sheath profile, write a CSV
//   evolve            time-dependent run from an experiment spec
//   stability         stability experiment with verdict
//   instability       instability experiment with verdict
//   bohm-scan         solvability table over a drift-velocity range
//   select-constants  search for parameters satisfying the stability condition
//   check-elliptic    weighted elliptic-inequality margin report
//
// Exit codes: 0 completed (verdicts live in the output files), 1 configuration
// error, 2 solver failure outside the expected regimes.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "sheathkit/sheathkit.hpp"

namespace sk = sheathkit;

namespace {

int cmd_stationary(const std::string& config_path, double phi_max,
                   const std::string& out_csv) {
    sk::PlasmaConfig cfg = sk::load_plasma_config(config_path);
    sk::EndState es = sk::normalize_quasi_neutral(cfg);
    sk::StationarySolution sol =
        sk::solve_stationary_potential(es, cfg.electron_model, cfg.phi_b);

    sk::SagdeevPotential sp = sk::sagdeev(es, cfg.electron_model, phi_max);
    sk::SupB sb = sk::sup_B(sp);

    sk::write_stationary_csv(out_csv, sol);
    nlohmann::json info = {
        {"rho_infty", es.rho_infty},
        {"bohm_k", sol.bohm_k},
        {"sup_b", sb.exceeds_table ? nlohmann::json("exceeds_phi_max")
                                   : nlohmann::json(sb.value)},
        {"decay_rate_est", sol.decay_rate_est},
        {"decay_rate_linearized", std::sqrt(1.0 - sol.bohm_k)},
        {"out", out_csv},
    };
    std::cout << info.dump(2) << '\n';
    return 0;
}

int cmd_evolve(const std::string& spec_path, const std::string& out_dir) {
    sk::ExperimentSpec spec = sk::load_experiment_spec(spec_path);
    if (!out_dir.empty())
        spec.out_dir = out_dir;
    if (spec.out_dir.empty())
        spec.out_dir = "run_evolve";

    // generic run: stationary background plus the spec's perturbation
    double v_lo = spec.perturbation.v_lo, v_hi = spec.perturbation.v_hi;
    if (v_lo == 0.0 && v_hi == 0.0) {
        v_lo = spec.plasma.u_infty - 1.0;
        v_hi = spec.plasma.u_infty + 1.0;
    }
    sk::PreparedRun run = sk::prepare_run(spec, spec.plasma.phi_b, v_lo, v_hi, 0.0);
    std::filesystem::create_directories(spec.out_dir + "/snapshots");
    sk::RunOutcome out =
        sk::evolve_loop(run, spec, 0.0, 0.0, 0.0, spec.out_dir + "/snapshots");
    nlohmann::json verdict = {{"experiment", "evolve"},
                              {"end_time", out.end_time},
                              {"mass_drift", out.mass_drift},
                              {"saturated", out.saturated}};
    sk::write_run_outputs(spec.out_dir, run.manifest, out.series, verdict);
    std::cout << verdict.dump(2) << '\n';
    return 0;
}

int cmd_stability(const std::string& spec_path, const std::string& out_dir) {
    sk::ExperimentSpec spec = sk::load_experiment_spec(spec_path);
    if (!out_dir.empty())
        spec.out_dir = out_dir;
    if (spec.out_dir.empty())
        spec.out_dir = "run_stability";
    sk::StabilityReport rep = sk::run_stability(spec);
    std::cout << "stability: " << (rep.pass ? "PASS" : "FAIL")
              << "  gamma_fit=" << rep.fit.gamma << "  r2=" << rep.fit.r2
              << "  support_ok=" << rep.support_ok << '\n';
    return 0;
}

int cmd_instability(const std::string& spec_path, const std::string& out_dir) {
    sk::ExperimentSpec spec = sk::load_experiment_spec(spec_path);
    if (!out_dir.empty())
        spec.out_dir = out_dir;
    if (spec.out_dir.empty())
        spec.out_dir = "run_instability";
    sk::InstabilityReport rep = sk::run_instability(spec);
    std::cout << "instability: " << (rep.pass ? "PASS" : "FAIL")
              << "  gamma_fit=" << rep.fit.gamma << "  r2=" << rep.fit.r2
              << "  escape_time=" << rep.escape_time
              << "  band_empty=" << rep.band_empty << '\n';
    return 0;
}

int cmd_bohm_scan(const std::string& spec_path, const std::string& out_dir) {
    sk::ExperimentSpec spec = sk::load_experiment_spec(spec_path);
    if (!out_dir.empty())
        spec.out_dir = out_dir;
    if (spec.out_dir.empty())
        spec.out_dir = "run_bohm_scan";
    sk::BohmScanReport rep = sk::run_bohm_scan(spec);
    for (const auto& r : rep.rows)
        std::printf("u=%-10.4g K=%-10.4g %s\n", r.u_infty, r.bohm_k,
                    r.verdict.c_str());
    if (rep.transition_found)
        std::printf("transition near u = %.6g\n", rep.transition_u);
    return 0;
}

int cmd_select_constants(const std::string& mode, const std::string& config_path,
                         double epsilon) {
    sk::PlasmaConfig cfg = sk::load_plasma_config(config_path);
    if (epsilon <= 0.0)
        epsilon = 0.25 * cfg.r;
    sk::SelectionMode m = mode == "i" ? sk::SelectionMode::condition_i
                                      : sk::SelectionMode::condition_ii;
    sk::SelectedConstants sel = sk::select_constants(m, cfg, epsilon);
    nlohmann::json j = {{"mode", mode},
                        {"found", sel.found},
                        {"beta", sel.beta},
                        {"theta_infty", sel.theta_infty},
                        {"u_infty", sel.u_infty},
                        {"rho_infty", sel.rho_infty},
                        {"mu_infty", sel.mu_infty},
                        {"margin", sel.margin},
                        {"best_margin", sel.best_margin},
                        {"bohm_k", sel.bohm_k}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_check_elliptic(const std::string& config_path, double beta) {
    sk::PlasmaConfig cfg = sk::load_plasma_config(config_path);
    sk::EndState es = sk::normalize_quasi_neutral(cfg);
    sk::StationarySolution sol =
        sk::solve_stationary_potential(es, cfg.electron_model, cfg.phi_b);

    const int n = 801;
    const double x_max = sk::default_x_max(sol.bohm_k);
    sk::EllipticProblem prob;
    prob.model = cfg.electron_model;
    prob.x.resize(n);
    prob.phi_s.resize(n);
    prob.n.resize(n);
    for (int i = 0; i < n; ++i) {
        prob.x[i] = x_max * i / (n - 1);
        prob.phi_s[i] = sol.phi_at(prob.x[i]);
        // smooth localized source in the small-data regime
        prob.n[i] = 1e-3 * std::exp(-prob.x[i]) * prob.x[i];
    }
    auto phi = sk::solve_perturbation_potential(prob);
    auto margins = sk::elliptic_estimates_check(prob.x, phi, prob.n, beta);
    nlohmann::json j = {{"beta", beta},
                        {"eta", margins.eta_beta},
                        {"n_l2_weighted", margins.n_l2w},
                        {"lhs_first", margins.lhs_first},
                        {"main_first", margins.main_first},
                        {"excess_first", margins.excess_first},
                        {"lhs_second", margins.lhs_second},
                        {"main_second", margins.main_second},
                        {"excess_second", margins.excess_second}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kinetic plasma sheath toolkit"};
    app.require_subcommand(1);

    std::string config_path, spec_path, out_dir, out_csv = "stationary.csv";
    std::string mode = "ii";
    double phi_max = 2.0, beta = 0.5, epsilon = 0.0;

    auto* st = app.add_subcommand("stationary", "solve the stationary sheath");
    st->add_option("--config", config_path, "plasma config JSON")->required();
    st->add_option("--phi-max", phi_max, "Sagdeev tabulation range");
    st->add_option("--out", out_csv, "output CSV path");

    auto* ev = app.add_subcommand("evolve", "time-dependent run");
    ev->add_option("--config,--spec", spec_path, "experiment spec JSON")->required();
    ev->add_option("--out-dir", out_dir, "output directory");

    auto* stab = app.add_subcommand("stability", "stability experiment");
    stab->add_option("--config", spec_path, "experiment spec JSON")->required();
    stab->add_option("--out-dir", out_dir, "output directory");

    auto* inst = app.add_subcommand("instability", "instability experiment");
    inst->add_option("--config", spec_path, "experiment spec JSON")->required();
    inst->add_option("--out-dir", out_dir, "output directory");

    auto* scan = app.add_subcommand("bohm-scan", "solvability scan over u_infty");
    scan->add_option("--config", spec_path, "experiment spec JSON")->required();
    scan->add_option("--out-dir", out_dir, "output directory");

    auto* sel = app.add_subcommand("select-constants", "stability-condition search");
    sel->add_option("--mode", mode, "i or ii")->check(CLI::IsMember({"i", "ii"}));
    sel->add_option("--config", config_path, "plasma config JSON")->required();
    sel->add_option("--epsilon", epsilon, "support margin (default r/4)");

    auto* ell = app.add_subcommand("check-elliptic", "elliptic inequality margins");
    ell->add_option("--config", config_path, "plasma config JSON")->required();
    ell->add_option("--beta", beta, "weight exponent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (st->parsed())
            return cmd_stationary(config_path, phi_max, out_csv);
        if (ev->parsed())
            return cmd_evolve(spec_path, out_dir);
        if (stab->parsed())
            return cmd_stability(spec_path, out_dir);
        if (inst->parsed())
            return cmd_instability(spec_path, out_dir);
        if (scan->parsed())
            return cmd_bohm_scan(spec_path, out_dir);
        if (sel->parsed())
            return cmd_select_constants(mode, config_path, epsilon);
        if (ell->parsed())
            return cmd_check_elliptic(config_path, beta);
    } catch (const sheathkit::InvalidConfig& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
