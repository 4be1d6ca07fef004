#pragma once

#include <stdexcept>
#include <string>

namespace sheathkit {

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(const std::string& what) : std::runtime_error(what) {}
};

struct QuadratureFailure : std::runtime_error {
    QuadratureFailure(const std::string& what, double err)
        : std::runtime_error(what + " (error estimate " + std::to_string(err) + ")"),
          error_estimate(err) {}
    double error_estimate;
};

// Reasons mirror the solvability dichotomy of the stationary problem:
// no sheath for K >= 1, and none when the wall potential exceeds sup B.
enum class NotSolvableReason { BohmViolated, PhiBTooLarge };

struct NotSolvable : std::runtime_error {
    NotSolvable(NotSolvableReason why, const std::string& what)
        : std::runtime_error(what), reason(why) {}
    NotSolvableReason reason;
};

struct NewtonDiverged : std::runtime_error {
    NewtonDiverged(const std::string& what, double residual)
        : std::runtime_error(what + " (last residual " + std::to_string(residual) + ")"),
          last_residual(residual) {}
    double last_residual;
};

struct WeightOverflow : std::runtime_error {
    explicit WeightOverflow(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateSeries : std::runtime_error {
    explicit DegenerateSeries(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sheathkit
