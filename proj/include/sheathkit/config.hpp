#pragma once

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sheathkit/errors.hpp"

namespace sheathkit {

// Electron number density n_e(Phi). All models satisfy n_e(0) = 1,
// n_e'(0) = -1, n_e' < 0.
//
//   boltzmann   e^{-Phi}            (the physical default)
//   linear      1 - Phi             (testing; constant-coefficient problems)
//   saturating  0.6 (1 + Phi/2)^{-1/2} + 0.4 e^{-17 Phi / 8}
//
// The saturating model decays slower than 1/sqrt(Phi) at large Phi, which is
// the only way the ion density can dip below the electron density on the way
// out: a drifting ion population with sub-critical Bohm integral K satisfies
// n_i(Phi) >= (1 + 2 K Phi)^{-1/2} >= e^{-Phi} pointwise, so with boltzmann
// or linear electrons the Sagdeev potential is increasing and sup B = +inf.
// The saturating model produces a finite sup B and exercises the
// wall-potential-too-large failure branch.
enum class ElectronModel { boltzmann, linear, saturating };

namespace satmodel {
inline constexpr double c1 = 0.6;
inline constexpr double q = 0.25;
inline constexpr double c2 = 0.4;
inline constexpr double a = (1.0 - c1 * q) / c2; // n_e'(0) = -1
} // namespace satmodel

inline double electron_density(ElectronModel m, double phi) {
    switch (m) {
    case ElectronModel::boltzmann:
        return std::exp(-phi);
    case ElectronModel::linear:
        return 1.0 - phi;
    case ElectronModel::saturating:
        return satmodel::c1 / std::sqrt(1.0 + 2.0 * satmodel::q * phi) +
               satmodel::c2 * std::exp(-satmodel::a * phi);
    }
    return 0.0;
}

inline double electron_density_prime(ElectronModel m, double phi) {
    switch (m) {
    case ElectronModel::boltzmann:
        return -std::exp(-phi);
    case ElectronModel::linear:
        return -1.0;
    case ElectronModel::saturating:
        return -satmodel::c1 * satmodel::q *
                   std::pow(1.0 + 2.0 * satmodel::q * phi, -1.5) -
               satmodel::c2 * satmodel::a * std::exp(-satmodel::a * phi);
    }
    return 0.0;
}

// Inverse of the (strictly decreasing) electron density, by bisection.
// Closed forms exist for boltzmann/linear but the generic path keeps all
// models on one code route.
inline double electron_density_inverse(ElectronModel m, double value) {
    if (!(value > 0.0))
        throw InvalidConfig("electron_density_inverse: value must be positive");
    if (m == ElectronModel::boltzmann)
        return -std::log(value);
    if (m == ElectronModel::linear)
        return 1.0 - value;

    double lo = -1.5, hi = 1.0;
    while (electron_density(m, hi) > value)
        hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (electron_density(m, mid) > value ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline ElectronModel electron_model_from_string(const std::string& s) {
    if (s == "boltzmann")
        return ElectronModel::boltzmann;
    if (s == "linear")
        return ElectronModel::linear;
    if (s == "saturating")
        return ElectronModel::saturating;
    throw InvalidConfig("unknown electron_model: " + s);
}

inline std::string to_string(ElectronModel m) {
    switch (m) {
    case ElectronModel::boltzmann:
        return "boltzmann";
    case ElectronModel::linear:
        return "linear";
    case ElectronModel::saturating:
        return "saturating";
    }
    return "?";
}

// Physical parameters of one problem instance. u_infty is the far-field ion
// drift (negative: toward the wall), theta_infty the ion temperature, and
// [r, sigma] fix the velocity cut-off: the far-field distribution vanishes
// for xi_1 >= -r and is pure Maxwellian for xi_1 <= -r-sigma.
struct PlasmaConfig {
    double u_infty = -2.0;
    double theta_infty = 0.1;
    double r = 0.5;
    double sigma = 0.2;
    double phi_b = 0.1;
    ElectronModel electron_model = ElectronModel::boltzmann;

    void validate() const {
        if (!(u_infty < 0.0))
            throw InvalidConfig("u_infty must be negative");
        if (!(theta_infty > 0.0))
            throw InvalidConfig("theta_infty must be positive");
        if (!(r > 0.0))
            throw InvalidConfig("r must be positive");
        if (!(sigma > 0.0))
            throw InvalidConfig("sigma must be positive");
        if (!(phi_b >= 0.0))
            throw InvalidConfig("phi_b must be nonnegative");
        // The cut-off must sit clear of the drift, |u| > r + 2 sigma.
        if (!(-u_infty > r + 2.0 * sigma))
            throw InvalidConfig("|u_infty| must exceed r + 2*sigma");
    }
};

inline PlasmaConfig plasma_config_from_json(const nlohmann::json& j) {
    PlasmaConfig c;
    c.u_infty = j.at("u_infty").get<double>();
    c.theta_infty = j.at("theta_infty").get<double>();
    c.r = j.at("r").get<double>();
    c.sigma = j.at("sigma").get<double>();
    c.phi_b = j.at("phi_b").get<double>();
    if (j.contains("electron_model"))
        c.electron_model = electron_model_from_string(j.at("electron_model").get<std::string>());
    c.validate();
    return c;
}

inline nlohmann::json to_json(const PlasmaConfig& c) {
    return {{"u_infty", c.u_infty},   {"theta_infty", c.theta_infty},
            {"r", c.r},               {"sigma", c.sigma},
            {"phi_b", c.phi_b},       {"electron_model", to_string(c.electron_model)}};
}

inline PlasmaConfig load_plasma_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InvalidConfig("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;
    // Allow the plasma block to be nested inside an experiment spec.
    if (j.contains("plasma"))
        return plasma_config_from_json(j.at("plasma"));
    return plasma_config_from_json(j);
}

} // namespace sheathkit
