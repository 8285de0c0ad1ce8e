#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"

namespace cqnls {

/// ||u||_2^2 = 4 pi dr sum |r_j u_j|^2, the quantity the propagator conserves exactly.
inline double l2_norm_sq(const RadialField& u) {
    const auto r = u.grid().nodes();
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += std::norm(r[j] * u[j]);
    return 4.0 * std::numbers::pi * u.grid().dr() * s;
}

inline double l4_norm_4(const RadialField& u) {
    std::vector<double> f(u.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double a = std::norm(u[j]);
        f[j] = a * a;
    }
    return integrate_radial(u.grid(), f);
}

inline double l6_norm_6(const RadialField& u) {
    std::vector<double> f(u.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double a = std::norm(u[j]);
        f[j] = a * a * a;
    }
    return integrate_radial(u.grid(), f);
}

/// ||grad u||^2. The spectral variant is the Parseval sum
/// 4 pi (r_max / 2) sum_m k_m^2 |b_m|^2 over the sine coefficients of r u.
inline double grad_norm_sq(const RadialField& u, Derivative scheme = Derivative::Stencil) {
    const auto& g = u.grid();
    if (scheme == Derivative::Spectral) {
        std::vector<double> re, im;
        detail::sine_coefficients(g, detail::times_r(u), re, im);
        const auto k = g.wavenumbers();
        double s = 0.0;
        for (std::size_t m = 0; m < g.size(); ++m) s += k[m] * k[m] * (re[m] * re[m] + im[m] * im[m]);
        return 2.0 * std::numbers::pi * g.r_max() * s;
    }
    const auto du = radial_derivative(u);
    return integrate_radial(g, du.abs_squared());
}

/// M(u) = (1/2) ||u||_2^2.
inline double mass(const RadialField& u) { return 0.5 * l2_norm_sq(u); }

inline double energy(const RadialField& u, Derivative scheme = Derivative::Stencil) {
    return 0.5 * grad_norm_sq(u, scheme) - l6_norm_6(u) / 6.0 + 0.25 * l4_norm_4(u);
}

inline double critical_energy(const RadialField& u, Derivative scheme = Derivative::Stencil) {
    return 0.5 * grad_norm_sq(u, scheme) - l6_norm_6(u) / 6.0;
}

/// G[u] = ||grad u||^2 - ||u||_6^6.
inline double g_functional(const RadialField& u, Derivative scheme = Derivative::Stencil) {
    return grad_norm_sq(u, scheme) - l6_norm_6(u);
}

/// delta(u) = | ||grad W||^2 - ||grad u||^2 | against the off-grid constant.
inline double delta(const RadialField& u, const GroundStateRef& ref,
                    Derivative scheme = Derivative::Stencil) {
    return std::abs(ref.grad_norm_sq - grad_norm_sq(u, scheme));
}

/// ||u||_6 / (C_GN ||grad u||_2); at most 1 by the sharp Sobolev inequality,
/// with equality exactly on the orbit of W.
inline double sobolev_ratio(const RadialField& u, const GroundStateRef& ref,
                            Derivative scheme = Derivative::Stencil) {
    const double g = grad_norm_sq(u, scheme);
    if (!(g > 0.0)) throw ZeroField();
    return std::pow(l6_norm_6(u), 1.0 / 6.0) / (ref.c_gn * std::sqrt(g));
}

struct SobolevCheck {
    double lhs = 0.0;  // max_{r_j >= R} |u_j|
    double rhs = 0.0;  // R^{-1} ||u||_2^{1/2} ||grad u||_2^{1/2}
};

/// Both sides of the radial Sobolev embedding; the constant is not known, so
/// this is a report pair rather than a check.
inline SobolevCheck radial_sobolev_check(const RadialField& u, double R,
                                         Derivative scheme = Derivative::Stencil) {
    if (!(R >= u.grid().dr())) throw InvalidParameter("radial_sobolev_check: R must be >= dr");
    SobolevCheck out;
    const auto r = u.grid().nodes();
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (r[j] >= R) out.lhs = std::max(out.lhs, std::abs(u[j]));
    }
    out.rhs = std::pow(l2_norm_sq(u), 0.25) * std::pow(grad_norm_sq(u, scheme), 0.25) / R;
    return out;
}

/// Radius enclosing half of the gradient density |u_r|^2 r^2, linearly
/// interpolated between nodes. Empty for a field with no gradient.
inline std::optional<double> gradient_median_radius(const RadialField& u,
                                                    Derivative scheme = Derivative::Stencil) {
    const auto du = derivative(u, scheme);
    const auto r = u.grid().nodes();
    std::vector<double> cum(u.size());
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        s += std::norm(du[j]) * r[j] * r[j];
        cum[j] = s;
    }
    if (!(s > 0.0) || !std::isfinite(s)) return std::nullopt;
    const double half = 0.5 * s;
    double prev_r = 0.0, prev_c = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (cum[j] >= half) {
            const double f = (half - prev_c) / (cum[j] - prev_c);
            return prev_r + f * (r[j] - prev_r);
        }
        prev_r = r[j];
        prev_c = cum[j];
    }
    return r.back();
}

/// Scale mu such that mu^{1/2} W(mu r) has the same gradient median radius as u.
inline std::optional<double> modulation_scale_estimate(const RadialField& u,
                                                       Derivative scheme = Derivative::Stencil) {
    const auto rm = gradient_median_radius(u, scheme);
    if (!rm) return std::nullopt;
    static const double rw = W_gradient_median_radius();
    return rw / *rm;
}

/// One row of a trajectory log.
struct DiagnosticsRecord {
    double t = 0.0;
    double mass = 0.0;
    double energy = 0.0;
    double crit_energy = 0.0;
    double grad_norm_sq = 0.0;
    double l4_norm_4 = 0.0;
    double l6_norm_6 = 0.0;
    double delta = 0.0;
    double g_functional = 0.0;
    bool below_threshold = false;
};

inline DiagnosticsRecord diagnose(const RadialField& u, double t, const GroundStateRef& ref,
                                  Derivative scheme = Derivative::Stencil) {
    DiagnosticsRecord d;
    d.t = t;
    d.mass = mass(u);
    d.grad_norm_sq = grad_norm_sq(u, scheme);
    d.l4_norm_4 = l4_norm_4(u);
    d.l6_norm_6 = l6_norm_6(u);
    d.crit_energy = 0.5 * d.grad_norm_sq - d.l6_norm_6 / 6.0;
    d.energy = d.crit_energy + 0.25 * d.l4_norm_4;
    d.delta = std::abs(ref.grad_norm_sq - d.grad_norm_sq);
    d.g_functional = d.grad_norm_sq - d.l6_norm_6;
    d.below_threshold = d.grad_norm_sq < ref.grad_norm_sq;
    return d;
}

}  // namespace cqnls
