#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sheathkit/experiments.hpp"

using namespace sheathkit;

namespace {

ExperimentSpec small_stability_spec() {
    ExperimentSpec s;
    s.kind = ExperimentKind::stability;
    s.plasma.u_infty = -8.0;
    s.plasma.theta_infty = 1.0;
    s.plasma.r = 1.5;
    s.plasma.sigma = 0.25;
    s.plasma.phi_b = 1e-3;
    s.beta = 0.5;
    s.epsilon = 0.25;
    s.evolve.nx = 96;
    s.evolve.nv = 96;
    s.evolve.t_end = 0.6;
    s.evolve.snapshot_every = 2;
    s.evolve.file_snapshots = 0;
    s.perturbation.delta = 1e-3;
    // bump deep enough that the fit window closes before wall absorption
    s.perturbation.x_lo = 6.0;
    s.perturbation.x_hi = 12.0;
    s.perturbation.v_lo = -8.9;
    s.perturbation.v_hi = -7.1;
    return s;
}

ExperimentSpec small_instability_spec() {
    ExperimentSpec s;
    s.kind = ExperimentKind::instability;
    s.plasma.u_infty = -2.5;
    s.plasma.theta_infty = 1.0;
    s.plasma.r = 1.0;
    s.plasma.sigma = 0.25;
    s.beta = 0.5;
    s.epsilon = 0.25;
    s.evolve.nx = 96;
    s.evolve.nv = 96;
    s.evolve.x_max = 30.0;
    s.evolve.t_end = 30.0;
    s.evolve.snapshot_every = 4;
    s.evolve.file_snapshots = 0;
    s.perturbation.delta = 1e-3;
    s.perturbation.x_lo = 1.0;
    s.perturbation.x_hi = 4.0;
    s.r1 = 0.5;
    s.r2 = 1.5;
    return s;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("stability mini-run decays with clean support containment") {
    auto spec = small_stability_spec();
    auto rep = run_stability(spec);
    INFO("gamma=" << rep.fit.gamma << " r2=" << rep.fit.r2
                  << " max_xi=" << rep.max_occupied_xi);
    CHECK(rep.fit.gamma > 0.0);
    CHECK(rep.fit.r2 > 0.95);
    CHECK(rep.support_ok);
    CHECK(rep.pass);
    CHECK(rep.mass_drift < 1e-6);
    CHECK(rep.outcome.worst_negative >= -1e-12);

    SECTION("energy functional follows the fitted exponential decay") {
        std::vector<double> ts, es;
        for (const auto& r : rep.outcome.series) {
            ts.push_back(r.t);
            es.push_back(r.energy);
        }
        const double T = rep.outcome.end_time;
        auto efit = fit_rate(ts, es, spec.fit_lo * T, spec.fit_hi * T);
        CHECK(efit.gamma > 0.0);
        CHECK(efit.r2 > 0.95);
        // compensated energy e^{-slope t} E(t) drifts slowly inside the window
        double prev = -1.0;
        for (std::size_t k = 0; k < ts.size(); ++k) {
            if (ts[k] < spec.fit_lo * T || ts[k] > spec.fit_hi * T)
                continue;
            const double comp = std::exp(-efit.slope * ts[k]) * es[k];
            if (prev > 0.0)
                CHECK(std::abs(comp - prev) / prev < 1e-2);
            prev = comp;
        }
    }

    SECTION("headline verdict survives one grid refinement") {
        auto fine = spec;
        fine.evolve.nx = fine.evolve.nv = 192;
        auto rep2 = run_stability(fine);
        CHECK(rep2.pass);
        CHECK(std::abs(rep2.fit.gamma - rep.fit.gamma) <= 0.1 * rep.fit.gamma);
    }

    SECTION("delta = 0 gives a norm series at the discretization floor") {
        auto spec0 = spec;
        spec0.perturbation.delta = 0.0;
        PreparedRun run = prepare_run(spec0, spec0.plasma.phi_b,
                                      spec0.plasma.u_infty - 1.0,
                                      spec0.plasma.u_infty + 1.0, 0.0);
        auto out = evolve_loop(run, spec0, 0.0, 0.0, 0.0);
        // pure discretization floor, well below the delta-run signal
        CHECK(out.series.back().h1_weighted <
              0.1 * rep.outcome.series.front().h1_weighted);
    }
}

TEST_CASE("instability mini-run grows exponentially with an empty band") {
    auto spec = small_instability_spec();
    auto rep = run_instability(spec);
    INFO("gamma=" << rep.fit.gamma << " r2=" << rep.fit.r2
                  << " escape=" << rep.escape_time);
    CHECK(rep.fit.gamma > 0.0);
    CHECK(rep.fit.r2 > 0.95);
    CHECK(rep.band_empty);
    CHECK(rep.support_ok);
    CHECK(rep.pass);

    SECTION("smaller delta escapes later at a fixed absolute threshold") {
        auto base = spec;
        base.escape_absolute = spec.escape_factor * rep.initial_h1;
        auto rep1 = run_instability(base);
        auto smaller = base;
        smaller.perturbation.delta = spec.perturbation.delta / 10.0;
        auto rep2 = run_instability(smaller);
        REQUIRE(rep1.escape_time > 0.0);
        REQUIRE(rep2.escape_time > 0.0);
        CHECK(rep2.escape_time > rep1.escape_time);
    }
}

TEST_CASE("bohm scan labels the solvability transition") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::bohm_scan;
    spec.plasma.u_infty = -2.0;
    spec.plasma.theta_infty = 1e-4;
    spec.plasma.r = 0.3;
    spec.plasma.sigma = 0.1;
    spec.plasma.phi_b = 0.1;
    spec.scan_u_lo = -2.0;
    spec.scan_u_hi = -0.7;
    spec.scan_count = 14;
    spec.scan_phi_max = 2.0;

    auto rep = run_bohm_scan(spec);
    int solvable = 0, violated = 0;
    for (const auto& row : rep.rows) {
        if (row.verdict == "solvable") {
            ++solvable;
            CHECK(row.bohm_k < 1.0);
        } else if (row.verdict.find("Bohm violated") != std::string::npos) {
            ++violated;
            CHECK(row.bohm_k >= 1.0);
        }
    }
    CHECK(solvable > 0);
    CHECK(violated > 0);
    CHECK(rep.transition_found);
    // cold beam: K = rho/u^2 crosses 1 near |u| = 1
    CHECK(std::abs(rep.transition_u) == Catch::Approx(1.0).epsilon(0.05));
}

TEST_CASE("run outputs are deterministic and carry a manifest") {
    namespace fs = std::filesystem;
    auto spec = small_stability_spec();
    spec.evolve.t_end = 0.2;

    const auto dir1 = fs::temp_directory_path() / "sheathkit_run_a";
    const auto dir2 = fs::temp_directory_path() / "sheathkit_run_b";
    fs::remove_all(dir1);
    fs::remove_all(dir2);

    spec.out_dir = dir1.string();
    run_stability(spec);
    spec.out_dir = dir2.string();
    run_stability(spec);

    REQUIRE(fs::exists(dir1 / "series.csv"));
    REQUIRE(fs::exists(dir1 / "manifest.json"));
    REQUIRE(fs::exists(dir1 / "verdict.json"));
    CHECK(slurp((dir1 / "series.csv").string()) == slurp((dir2 / "series.csv").string()));

    nlohmann::json manifest;
    std::ifstream(dir1 / "manifest.json") >> manifest;
    CHECK(manifest.contains("version"));
    CHECK(manifest.contains("plasma"));
    CHECK(manifest.contains("grid"));
    CHECK(manifest["grid"].contains("dt"));

    fs::remove_all(dir1);
    fs::remove_all(dir2);
}

TEST_CASE("experiment specs load from JSON") {
    nlohmann::json j = {
        {"experiment", "instability"},
        {"plasma",
         {{"u_infty", -2.5},
          {"theta_infty", 1.0},
          {"r", 1.0},
          {"sigma", 0.25},
          {"phi_b", 0.0},
          {"electron_model", "boltzmann"}}},
        {"beta", 0.5},
        {"evolve", {{"nx", 64}, {"nv", 64}, {"t_end", 3.0}}},
        {"perturbation", {{"delta", 1e-3}, {"x_lo", 1.0}, {"x_hi", 4.0}}},
        {"instability", {{"r1", 0.5}, {"r2", 1.5}}},
        {"fit_window", {0.25, 0.75}},
    };
    auto spec = experiment_spec_from_json(j);
    CHECK(spec.kind == ExperimentKind::instability);
    CHECK(spec.evolve.nx == 64);
    CHECK(spec.r2 == 1.5);
    CHECK(spec.fit_lo == 0.25);

    nlohmann::json bad = j;
    bad["plasma"]["u_infty"] = 2.5;
    CHECK_THROWS_AS(experiment_spec_from_json(bad), InvalidConfig);
}
