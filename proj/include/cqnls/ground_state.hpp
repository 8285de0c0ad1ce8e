#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "cqnls/errors.hpp"
#include "cqnls/grid.hpp"

namespace cqnls {

// Ground state W(r) = (1 + r^2/3)^{-1/2}, the static solution of -Delta W = W^5.

inline double eval_W(double r) { return 1.0 / std::sqrt(1.0 + r * r / 3.0); }

inline double eval_W_prime(double r) {
    const double q = 1.0 + r * r / 3.0;
    return -(r / 3.0) / (q * std::sqrt(q));
}

/// W1 = W/2 + r W' = (1 + r^2/3)^{-3/2} (1/2 - r^2/6), the generator of the
/// H1-invariant scaling: d/dlambda lambda^{1/2} W(lambda r) at lambda = 1.
inline double eval_W1(double r) {
    const double q = 1.0 + r * r / 3.0;
    return (0.5 - r * r / 6.0) / (q * std::sqrt(q));
}

inline double eval_W1_prime(double r) {
    const double q = 1.0 + r * r / 3.0;
    return -r * (5.0 / 6.0 - r * r / 18.0) / (q * q * std::sqrt(q));
}

/// e^{i theta} mu^{1/2} W(mu r) on the grid.
inline RadialField scaled_state(double theta, double mu, const RadialGrid& grid) {
    if (!(mu > 0.0)) throw InvalidParameter("scaled_state: mu must be positive");
    const Complex phase = std::polar(std::sqrt(mu), theta);
    return RadialField::sample(grid, [&](double r) { return phase * eval_W(mu * r); });
}

/// mu^{1/2} W1(mu r) on the grid (real).
inline RadialField scaled_W1(double mu, const RadialGrid& grid) {
    const double s = std::sqrt(mu);
    return RadialField::sample(grid, [&](double r) { return s * eval_W1(mu * r); });
}

/// Exact tails beyond radius r of the scaled profile mu^{1/2} W(mu r). With
/// mu r = sqrt(3) tan(phi) the gradient density is 4 pi sqrt(3) sin^4(phi) dphi
/// and the L6 density is 12 pi sqrt(3) sin^2(phi) cos^2(phi) dphi.
inline double gradient_tail(double r, double mu = 1.0) {
    const double phi = std::atan(mu * r / std::sqrt(3.0));
    auto F = [](double p) { return 3.0 * p / 8.0 - std::sin(2.0 * p) / 4.0 + std::sin(4.0 * p) / 32.0; };
    return 4.0 * std::numbers::pi * std::sqrt(3.0) * (F(std::numbers::pi / 2) - F(phi));
}

inline double l6_tail(double r, double mu = 1.0) {
    const double phi = std::atan(mu * r / std::sqrt(3.0));
    auto F = [](double p) { return p / 8.0 - std::sin(4.0 * p) / 32.0; };
    return 12.0 * std::numbers::pi * std::sqrt(3.0) * (F(std::numbers::pi / 2) - F(phi));
}

/// Off-grid constants of W.
struct GroundStateRef {
    double grad_norm_sq = 0.0;  // ||grad W||^2
    double l6_norm_6 = 0.0;     // ||W||_6^6
    double crit_energy = 0.0;   // E^c(W)
    double c_gn = 0.0;          // sharp Sobolev constant ||W||_6 / ||grad W||
    double quadrature_error_bound = 0.0;
};

/**
 * Compute GroundStateRef by adaptive Gauss-Kronrod quadrature after the
 * substitution r = tan(s), s in [0, pi/2), which maps the algebraic tails of W
 * onto a bounded interval with a bounded integrand.
 *
 * Throws QuadratureFailure if either integral misses the 1e-10 relative
 * tolerance.
 */
inline GroundStateRef reference_constants() {
    using boost::math::quadrature::gauss_kronrod;
    constexpr double pi = std::numbers::pi;
    constexpr double tol = 1e-10;

    auto grad_integrand = [](double s) {
        const double r = std::tan(s);
        const double sec2 = 1.0 + r * r;
        const double wp = eval_W_prime(r);
        return 4.0 * pi * wp * wp * r * r * sec2;
    };
    auto l6_integrand = [](double s) {
        const double r = std::tan(s);
        const double sec2 = 1.0 + r * r;
        const double w2 = 1.0 / (1.0 + r * r / 3.0);
        return 4.0 * pi * w2 * w2 * w2 * r * r * sec2;
    };

    double err_grad = 0.0, err_l6 = 0.0;
    const double grad = gauss_kronrod<double, 61>::integrate(grad_integrand, 0.0, pi / 2, 15,
                                                             1e-14, &err_grad);
    const double l6 = gauss_kronrod<double, 61>::integrate(l6_integrand, 0.0, pi / 2, 15,
                                                           1e-14, &err_l6);
    const double abs_grad = std::abs(err_grad);
    const double abs_l6 = std::abs(err_l6);
    if (!(abs_grad <= tol * grad) || !(abs_l6 <= tol * l6)) {
        throw QuadratureFailure("reference_constants: adaptive quadrature missed 1e-10");
    }

    GroundStateRef ref;
    ref.grad_norm_sq = grad;
    ref.l6_norm_6 = l6;
    ref.crit_energy = 0.5 * grad - l6 / 6.0;
    ref.c_gn = std::pow(l6, 1.0 / 6.0) / std::sqrt(grad);
    ref.quadrature_error_bound =
        std::max({abs_grad, abs_l6, 64.0 * std::numeric_limits<double>::epsilon() * grad});
    return ref;
}

/// Radius below which half of ||grad W||^2 lies. With r = sqrt(3) tan(phi) the
/// gradient density becomes sqrt(3) sin^4(phi) dphi, whose CDF is closed form.
inline double W_gradient_median_radius() {
    constexpr double pi = std::numbers::pi;
    auto cdf_gap = [](double phi) {
        return 3.0 * phi / 8.0 - std::sin(2.0 * phi) / 4.0 + std::sin(4.0 * phi) / 32.0 -
               3.0 * pi / 32.0;
    };
    std::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        cdf_gap, 0.0, pi / 2, boost::math::tools::eps_tolerance<double>(52), iters);
    const double phi = 0.5 * (bracket.first + bracket.second);
    return std::sqrt(3.0) * std::tan(phi);
}

}  // namespace cqnls
