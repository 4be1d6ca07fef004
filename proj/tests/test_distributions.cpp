#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sheathkit/distributions.hpp"
#include "sheathkit/quadrature.hpp"

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

// independent oracle: composite Simpson on a fine fixed grid
template <typename F>
double simpson(F&& f, double a, double b, int n = 20001) {
    if (n % 2 == 0)
        ++n;
    const double h = (b - a) / (n - 1);
    double acc = f(a) + f(b);
    for (int k = 1; k < n - 1; ++k)
        acc += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

} // namespace

TEST_CASE("cutoff psi has exact plateaus and a monotone C2 transition") {
    const double r = 1.0, sigma = 0.5;
    CHECK(cutoff_psi(-r + 0.1, r, sigma) == 0.0);
    CHECK(cutoff_psi(-r, r, sigma) == 0.0);
    CHECK(cutoff_psi(-r - sigma - 1.0, r, sigma) == 1.0);
    CHECK(cutoff_psi(-r - sigma, r, sigma) == 1.0);

    // midpoint of the exp-bump transition is exactly 1/2
    CHECK(cutoff_psi(-r - sigma / 2, r, sigma) == Catch::Approx(0.5).epsilon(1e-14));

    // monotone decreasing in xi_1 across the transition
    double prev = 1.0;
    for (int k = 1; k <= 200; ++k) {
        double v = cutoff_psi(-r - sigma + sigma * k / 201.0, r, sigma);
        CHECK(v <= prev + 1e-15);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }

    // C2 at the plateau joints: first and second differences vanish
    const double h = 1e-4;
    for (double edge : {-r, -r - sigma}) {
        double d1 = (cutoff_psi(edge + h, r, sigma) - cutoff_psi(edge - h, r, sigma)) / (2 * h);
        double d2 = (cutoff_psi(edge + h, r, sigma) - 2 * cutoff_psi(edge, r, sigma) +
                     cutoff_psi(edge - h, r, sigma)) /
                    (h * h);
        CHECK(std::abs(d1) < 1e-6);
        CHECK(std::abs(d2) < 1e-2);
    }

    // derivative matches a finite difference in the interior of the transition
    const double x = -r - 0.3 * sigma;
    double fd = (cutoff_psi(x + h, r, sigma) - cutoff_psi(x - h, r, sigma)) / (2 * h);
    CHECK(cutoff_psi_prime(x, r, sigma) == Catch::Approx(fd).margin(1e-7));
}

TEST_CASE("quasi-neutral normalization") {
    SECTION("cutoff disabled: rho is exactly 1") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.5, 0.5, 0.2), false);
        CHECK(es.rho_infty == 1.0);
    }

    SECTION("cold plasma: cutoff deficit is negligible, rho = 1 to 1e-10") {
        EndState es = normalize_quasi_neutral(cfg(-10.0, 0.01, 1.0, 0.5));
        CHECK(es.rho_infty == Catch::Approx(1.0).margin(1e-10));
        CHECK(std::abs(end_state_mass(es) - 1.0) < 1e-10);
    }

    SECTION("warm plasma: cutoff removes mass, rho exceeds 1") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.5, 1.0, 0.25));
        CHECK(es.rho_infty > 1.0);
        // oracle: removed fraction by Simpson on the unit Maxwellian
        const double u = -2.0, th = 0.5;
        double kept = simpson(
            [&](double xi) {
                return std::exp(-(xi - u) * (xi - u) / (2 * th)) /
                       std::sqrt(2 * M_PI * th) * cutoff_psi(xi, 1.0, 0.25);
            },
            u - 14 * std::sqrt(th), -1.0);
        CHECK(es.rho_infty == Catch::Approx(1.0 / kept).epsilon(1e-8));
        CHECK(std::abs(end_state_mass(es) - 1.0) < 1e-10);
    }

    SECTION("invalid config rejected") {
        CHECK_THROWS_AS(normalize_quasi_neutral(cfg(-1.0, 0.1, 0.8, 0.2)), InvalidConfig);
        CHECK_THROWS_AS(normalize_quasi_neutral(cfg(2.0, 0.1, 0.5, 0.1)), InvalidConfig);
    }
}

TEST_CASE("end-state invariants: unit mass, nonnegative, vanishing above -r") {
    for (auto c : {cfg(-2.0, 0.5, 1.0, 0.25), cfg(-3.0, 0.05, 0.5, 0.2),
                   cfg(-8.0, 1.0, 1.5, 0.25)}) {
        EndState es = normalize_quasi_neutral(c);
        CHECK(std::abs(end_state_mass(es) - 1.0) < 1e-10);
        for (double xi = -c.r; xi < 3.0; xi += 0.1)
            CHECK(es.f1(xi) == 0.0);
        for (double xi = es.xi_lo(); xi < 0.0; xi += 0.05)
            CHECK(es.f1(xi) >= 0.0);
    }
}

TEST_CASE("Bohm integral") {
    SECTION("cold limit K -> rho / u^2") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 1e-4, 0.5, 0.1));
        double k = bohm_integral(es);
        CHECK(k == Catch::Approx(0.25).epsilon(0.01));
    }

    SECTION("slow cold beam violates the criterion") {
        EndState es = normalize_quasi_neutral(cfg(-0.8, 1e-4, 0.3, 0.1));
        double k = bohm_integral(es);
        CHECK(k > 1.0);
        CHECK(k == Catch::Approx(1.0 / 0.64).epsilon(0.01));
    }

    SECTION("linearity: scaling a raw table scales K") {
        std::vector<double> xi, val;
        for (int i = 0; i <= 200; ++i) {
            double x = -4.0 + 3.0 * i / 200.0; // support [-4, -1]
            xi.push_back(x);
            val.push_back(std::exp(-(x + 2.5) * (x + 2.5) * 8.0));
        }
        EndState base = end_state_from_table(xi, val);
        double k1 = bohm_integral(base);

        EndState scaled = base;
        for (auto& v : scaled.f_infty_values)
            v *= 3.0;
        double k3 = bohm_integral(scaled);
        CHECK(k3 == Catch::Approx(3.0 * k1).epsilon(1e-12));
    }
}

TEST_CASE("mu_infty") {
    SECTION("psi == 1 hook gives exactly zero") {
        EndState es = normalize_quasi_neutral(cfg(-2.0, 0.5, 1.0, 0.25), false);
        CHECK(mu_infty(es) == 0.0);
    }

    SECTION("cold plasma: defect is superexponentially small") {
        EndState es = normalize_quasi_neutral(cfg(-10.0, 0.01, 1.0, 0.5));
        CHECK(mu_infty(es) < 1e-8);
    }

    SECTION("monotone decrease as |u| grows, other parameters fixed") {
        double prev = 1e300;
        for (double u : {-2.5, -3.5, -4.5}) {
            double mu = mu_infty(normalize_quasi_neutral(cfg(u, 0.25, 1.0, 0.5)));
            CHECK(mu < prev);
            prev = mu;
        }
    }

    SECTION("log-space route agrees with direct quadrature where it is finite") {
        for (auto c : {cfg(-2.0, 0.5, 1.0, 0.25), cfg(-3.0, 0.2, 0.8, 0.3)}) {
            EndState es = normalize_quasi_neutral(c);
            double a = mu_infty(es);
            double b = mu_infty_direct(es);
            CHECK(a == Catch::Approx(b).epsilon(1e-8));
        }
    }
}

TEST_CASE("eta") {
    CHECK(eta(1e-8) < 1e-15);
    CHECK(eta(0.5) == Catch::Approx(1.0 / 7.0).epsilon(1e-14));
    CHECK(eta(1.0) == Catch::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(eta(0.0), InvalidConfig);
    CHECK_THROWS_AS(eta(1.5), InvalidConfig);
    CHECK_THROWS_AS(eta(-0.2), InvalidConfig);

    double prev = 0.0;
    for (int k = 1; k < 100; ++k) {
        double v = eta(k / 100.0);
        CHECK(v > prev);
        prev = v;
    }
}
