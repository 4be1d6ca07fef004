#pragma once

// Adaptive Gauss-Kronrod quadrature (15-point Kronrod rule with embedded
// 7-point Gauss rule, bisection refinement). The integrands in this project
// are smooth, compactly concentrated Gaussians, so plain bisection converges
// quickly and no singularity handling is needed.

#include <cmath>
#include <concepts>
#include <vector>

#include "sheathkit/errors.hpp"

namespace sheathkit {

namespace gk {

// QUADPACK dqk15 abscissae/weights, positive half of [-1, 1].
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double value;
    double error;
};

template <typename F>
    requires std::invocable<F, double>
Panel rule15(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);

    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(c - h * xgk[i]);
        fv[14 - i] = f(c + h * xgk[i]);
    }
    fv[7] = f(c);

    double kronrod = wgk[7] * fv[7];
    double gauss = wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        kronrod += wgk[i] * (fv[i] + fv[14 - i]);
        if (i % 2 == 1)
            gauss += wg[i / 2] * (fv[i] + fv[14 - i]);
    }
    kronrod *= h;
    gauss *= h;

    double err = std::abs(kronrod - gauss);
    // QUADPACK-style sharpening of the raw difference.
    if (err > 0.0)
        err = std::min(err, 200.0 * err * std::sqrt(err));
    return {kronrod, err};
}

} // namespace gk

// Integrates f over [a, b] to the requested absolute/relative tolerance.
// Throws QuadratureFailure if the interval stack is exhausted.
template <typename F>
    requires std::invocable<F, double>
double integrate(F&& f, double a, double b, double abs_tol = 1e-12,
                 double rel_tol = 1e-12, int max_panels = 4000) {
    if (a == b)
        return 0.0;

    struct Interval {
        double a, b, value, error;
    };
    auto first = gk::rule15(f, a, b);
    std::vector<Interval> stack{{a, b, first.value, first.error}};

    double total = first.value;
    double total_err = first.error;
    int panels = 1;

    while (total_err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (panels >= max_panels || stack.empty())
            throw QuadratureFailure("adaptive quadrature did not converge", total_err);

        // Split the interval with the largest error estimate.
        std::size_t worst = 0;
        for (std::size_t i = 1; i < stack.size(); ++i)
            if (stack[i].error > stack[worst].error)
                worst = i;
        Interval iv = stack[worst];
        stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(worst));

        const double mid = 0.5 * (iv.a + iv.b);
        auto left = gk::rule15(f, iv.a, mid);
        auto right = gk::rule15(f, mid, iv.b);

        total += left.value + right.value - iv.value;
        total_err += left.error + right.error - iv.error;
        stack.push_back({iv.a, mid, left.value, left.error});
        stack.push_back({mid, iv.b, right.value, right.error});
        ++panels;
    }
    return total;
}

// Fixed 5-point Gauss-Legendre panel; used for cumulative integrals where the
// integrand is already resolved by the caller's cell structure.
template <typename F>
    requires std::invocable<F, double>
double gauss5(F&& f, double a, double b) {
    static constexpr double x[5] = {-0.906179845938663992797626878299393,
                                    -0.538469310105683091036314420700208, 0.0,
                                    0.538469310105683091036314420700208,
                                    0.906179845938663992797626878299393};
    static constexpr double w[5] = {0.236926885056189087514264040719917,
                                    0.478628670499366468041291514835638,
                                    0.568888888888888888888888888888889,
                                    0.478628670499366468041291514835638,
                                    0.236926885056189087514264040719917};
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 5; ++i)
        s += w[i] * f(c + h * x[i]);
    return s * h;
}

} // namespace sheathkit
