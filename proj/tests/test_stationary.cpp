#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sheathkit/stationary.hpp"

using namespace sheathkit;

namespace {

PlasmaConfig cfg(double u, double theta, double r, double sigma, double phi_b = 0.1) {
    PlasmaConfig c;
    c.u_infty = u;
    c.theta_infty = theta;
    c.r = r;
    c.sigma = sigma;
    c.phi_b = phi_b;
    return c;
}

// cold-beam closed forms (theta -> 0: F_inf -> delta at u)
double v_cold_boltzmann(double u, double phi) {
    const double au = std::abs(u);
    return au * (std::sqrt(u * u + 2.0 * phi) - au) + std::exp(-phi) - 1.0;
}

double v_cold_saturating(double u, double phi) {
    const double au = std::abs(u);
    const double ion = au * (std::sqrt(u * u + 2.0 * phi) - au);
    const double ne_int = satmodel::c1 * (std::sqrt(1.0 + 2.0 * satmodel::q * phi) - 1.0) /
                              satmodel::q +
                          satmodel::c2 * (1.0 - std::exp(-satmodel::a * phi)) / satmodel::a;
    return ion - ne_int;
}

} // namespace

TEST_CASE("ion density") {
    EndState es = normalize_quasi_neutral(cfg(-2.0, 0.1, 0.5, 0.2));

    SECTION("quasi-neutral at phi = 0") {
        CHECK(ion_density(0.0, es) == Catch::Approx(1.0).margin(1e-10));
    }

    SECTION("cold limit |u| / sqrt(u^2 + 2 phi)") {
        EndState cold = normalize_quasi_neutral(cfg(-2.0, 1e-5, 0.5, 0.1));
        CHECK(ion_density(1.0, cold) == Catch::Approx(2.0 / std::sqrt(6.0)).epsilon(0.01));
    }

    SECTION("strictly decreasing in phi") {
        double prev = 2.0;
        for (double phi = 0.0; phi <= 2.0; phi += 0.1) {
            double ni = ion_density(phi, es);
            CHECK(ni < prev);
            prev = ni;
        }
    }

    SECTION("rejects negative phi") {
        CHECK_THROWS_AS(ion_density(-0.1, es), InvalidConfig);
    }
}

TEST_CASE("Sagdeev potential") {
    SECTION("V(0) = 0 and the cold-beam Boltzmann closed form") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 1e-5, 0.5, 0.1));
        auto sp = sagdeev(es, ElectronModel::boltzmann, 1.0);
        CHECK(sp.v.front() == 0.0);
        CHECK(sp.value(0.5) ==
              Catch::Approx(v_cold_boltzmann(-2.0, 0.5)).epsilon(0.01));
    }

    SECTION("V''(0) = 1 - K by finite differences") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2));
        auto sp = sagdeev(es, ElectronModel::boltzmann, 0.5);
        const double k = bohm_integral(es);
        auto d2 = [&](double h) { return (sp.value(2 * h) - 2 * sp.value(h)) / (h * h); };
        // one-sided stencil carries an O(h V''') bias; Richardson removes it
        const double extrap = 2.0 * d2(1e-3) - d2(2e-3);
        CHECK(extrap == Catch::Approx(1.0 - k).margin(5e-5));
    }

    SECTION("Bohm violation is reported, not silently degraded") {
        EndState es = normalize_quasi_neutral(cfg(-0.8, 1e-4, 0.3, 0.1));
        CHECK_THROWS_AS(sagdeev(es, ElectronModel::boltzmann, 1.0), NotSolvable);
        try {
            sagdeev(es, ElectronModel::boltzmann, 1.0);
        } catch (const NotSolvable& e) {
            CHECK(e.reason == NotSolvableReason::BohmViolated);
        }
    }
}

TEST_CASE("sup B") {
    SECTION("Boltzmann electrons with K < 1: V > 0 everywhere, marker returned") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 1e-4, 0.5, 0.1));
        auto sp = sagdeev(es, ElectronModel::boltzmann, 5.0);
        auto sb = sup_B(sp);
        CHECK(sb.exceeds_table);
    }

    SECTION("saturating electrons: finite first zero against the closed form") {
        // cold beam, K ~ 0.9
        const double u = -1.0 / std::sqrt(0.9);
        EndState es = normalize_quasi_neutral(cfg(u, 1e-5, 0.3, 0.1));
        auto sp = sagdeev(es, ElectronModel::saturating, 40.0, 2048);
        auto sb = sup_B(sp);
        REQUIRE_FALSE(sb.exceeds_table);

        // oracle: bisection on the closed-form cold V
        double lo = 1.0, hi = 40.0;
        REQUIRE(v_cold_saturating(u, lo) > 0.0);
        REQUIRE(v_cold_saturating(u, hi) < 0.0);
        for (int it = 0; it < 100; ++it) {
            double mid = 0.5 * (lo + hi);
            (v_cold_saturating(u, mid) > 0.0 ? lo : hi) = mid;
        }
        CHECK(sb.value == Catch::Approx(0.5 * (lo + hi)).epsilon(0.02));
    }

    SECTION("larger |u| enlarges sup B (saturating, cold)") {
        double prev = 0.0;
        for (double kk : {0.92, 0.9, 0.88}) {
            const double u = -1.0 / std::sqrt(kk);
            EndState es = normalize_quasi_neutral(cfg(u, 1e-5, 0.3, 0.1));
            auto sb = sup_B(sagdeev(es, ElectronModel::saturating, 80.0, 2048));
            REQUIRE_FALSE(sb.exceeds_table);
            CHECK(sb.value > prev);
            prev = sb.value;
        }
    }
}

TEST_CASE("stationary solve") {
    SECTION("Phi_b = 0 gives the trivial solution") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2, 0.0));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.0);
        CHECK(sol.phi_at(0.0) == 0.0);
        CHECK(sol.phi_at(3.0) == 0.0);
        CHECK(sol.dphi_at(1.0) == 0.0);
    }

    SECTION("profile: boundary value, monotone decrease, bounds") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.1);
        CHECK(sol.phi_at(0.0) == Catch::Approx(0.1).epsilon(1e-12));
        double prev = 0.1 + 1e-15;
        for (double x = 0.0; x < 30.0; x += 0.05) {
            double p = sol.phi_at(x);
            CHECK(p <= prev);
            CHECK(p >= 0.0);
            CHECK(p <= 0.1);
            CHECK(sol.dphi_at(x) <= 0.0);
            prev = p;
        }
    }

    SECTION("first-integral residual below 1e-8 on the tabulated grid") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.01, 0.5, 0.1));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.1);
        double worst = 0.0;
        for (std::size_t k = 0; k < sol.x.size(); ++k) {
            double lhs = 0.5 * sol.dphi_s[k] * sol.dphi_s[k];
            double rhs = sol.sagdeev_table.value(sol.phi_s[k]);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        CHECK(worst < 1e-8);
    }

    SECTION("fitted tail decay rate within 5% of sqrt(1-K)") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.01, 0.5, 0.1));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.1);
        const double c = std::sqrt(1.0 - sol.bohm_k);
        CHECK(std::abs(sol.decay_rate_est - c) <= 0.05 * c);
    }

    SECTION("solvability matches the existence dichotomy") {
        // failure branch 1: K >= 1
        EndState slow = normalize_quasi_neutral(cfg(-0.8, 1e-4, 0.3, 0.1));
        try {
            solve_stationary_potential(slow, ElectronModel::boltzmann, 0.1);
            FAIL("expected NotSolvable");
        } catch (const NotSolvable& e) {
            CHECK(e.reason == NotSolvableReason::BohmViolated);
        }

        // failure branch 2: K < 1 but Phi_b >= sup B (saturating model)
        const double u = -1.0 / std::sqrt(0.9);
        EndState es = normalize_quasi_neutral(cfg(u, 1e-5, 0.3, 0.1));
        auto sb = sup_B(sagdeev(es, ElectronModel::saturating, 40.0, 2048));
        REQUIRE_FALSE(sb.exceeds_table);
        try {
            solve_stationary_potential(es, ElectronModel::saturating, sb.value + 1.0);
            FAIL("expected NotSolvable");
        } catch (const NotSolvable& e) {
            CHECK(e.reason == NotSolvableReason::PhiBTooLarge);
        }

        // success branch just below sup B
        auto sol = solve_stationary_potential(es, ElectronModel::saturating,
                                              0.5 * sb.value);
        CHECK(sol.phi_at(0.0) == Catch::Approx(0.5 * sb.value).epsilon(1e-12));
    }
}

TEST_CASE("reconstructed F^s") {
    EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2));
    auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.1);

    SECTION("vanishes for xi_1 > 0 and on the energy-forbidden set") {
        CHECK(reconstruct_fs(sol, 0.5, 0.3) == 0.0);
        CHECK(reconstruct_fs(sol, 0.0, -0.1) == 0.0); // xi^2 < 2 Phi_b
    }

    SECTION("support stays below -r (up to nothing: exact)") {
        for (double x : {0.0, 0.5, 2.0, 10.0})
            for (double xi = -sol.end_state.config.r + 1e-9; xi < 1.0; xi += 0.05)
                CHECK(reconstruct_fs(sol, x, xi) == 0.0);
    }

    SECTION("recovers F_inf far from the wall") {
        for (double xi = -4.0; xi < -0.4; xi += 0.1)
            CHECK(reconstruct_fs(sol, 60.0, xi) ==
                  Catch::Approx(es.f1(xi)).margin(1e-12));
    }

    SECTION("stationary transport residual converges at 2nd order") {
        // xi d_x F^s + d_x Phi^s d_xi F^s = 0; centered differences on nested
        // grids, measured away from the support edge.
        auto residual = [&](double h) {
            double worst = 0.0;
            for (double x = 0.2; x <= 3.0; x += 0.2) {
                const double edge = -std::sqrt(2.0 * sol.phi_at(x) +
                                               sol.end_state.config.r *
                                                   sol.end_state.config.r);
                for (double xi = -3.5; xi < edge - 0.15; xi += 0.1) {
                    double fx = (reconstruct_fs(sol, x + h, xi) -
                                 reconstruct_fs(sol, x - h, xi)) /
                                (2 * h);
                    double fv = (reconstruct_fs(sol, x, xi + h) -
                                 reconstruct_fs(sol, x, xi - h)) /
                                (2 * h);
                    worst = std::max(worst,
                                     std::abs(xi * fx + sol.dphi_at(x) * fv));
                }
            }
            return worst;
        };
        const double r1 = residual(2e-3);
        const double r2 = residual(1e-3);
        const double order = std::log2(r1 / r2);
        CHECK(order >= 1.9);
    }
}

TEST_CASE("F^s defect estimates (report)") {
    SECTION("Phi_b = 0: all defect norms vanish") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2, 0.0));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.0);
        auto rows = check_fs_estimates(sol, {0.0, 1.0, 3.0});
        for (const auto& r : rows) {
            CHECK(r.defect < 1e-12);
            CHECK(r.defect_dx < 1e-9);
        }
    }

    SECTION("defect/Phi^s ratio stays bounded as Phi_b halves") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2));
        std::vector<double> ratios;
        for (double pb : {0.1, 0.05, 0.025}) {
            auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, pb);
            auto rows = check_fs_estimates(sol, {0.5});
            ratios.push_back(rows[0].ratio_phi);
        }
        CHECK(ratios[1] <= 2.0 * ratios[0]);
        CHECK(ratios[2] <= 2.0 * ratios[1]);
        CHECK(ratios[0] <= 2.0 * ratios[1]);
        CHECK(ratios[1] <= 2.0 * ratios[2]);
    }

    SECTION("grad_xi norm finite and x-uniform") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.05, 0.5, 0.2));
        auto sol = solve_stationary_potential(es, ElectronModel::boltzmann, 0.1);
        auto rows = check_fs_estimates(sol, {0.0, 0.5, 1.0, 2.0, 5.0});
        double first = rows[0].grad_xi_norm;
        for (const auto& r : rows) {
            CHECK(std::isfinite(r.grad_xi_norm));
            CHECK(r.grad_xi_norm < 10.0 * first + 10.0);
        }
    }
}
