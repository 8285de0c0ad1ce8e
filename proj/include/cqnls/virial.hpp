#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <string>
#include <vector>

#include "cqnls/detail/polynomial.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"

namespace cqnls {

/**
 * Localized virial weight w_R(r) = R^2 phi(r / R).
 *
 * phi(s) = s^2 on [0, 1], 0 on [2, inf), and on [1, 2] the degree-7 two-point
 * Hermite interpolant matching (phi, phi', phi'', phi''') = (1, 2, 2, 0) at
 * s = 1 and (0, 0, 0, 0) at s = 2, so phi is C^3. Every derivative of w_R is
 * evaluated from the polynomial pieces, never by differencing.
 *
 * sup phi'' is recorded but not bounded by 2: no C^1 profile with these region
 * conditions can satisfy phi'' <= 2 (phi'' <= 2 with phi'(2) = 0 forces
 * phi(2) > phi(1) - 1 = 0). See convexity_bound_holds().
 */
class VirialWeight {
public:
    static constexpr int max_order = 5;

    double radius() const noexcept { return R_; }

    /// phi^(order)(s) for order in [0, 5].
    double phi(double s, int order = 0) const {
        if (s <= 1.0) {
            switch (order) {
                case 0: return s * s;
                case 1: return 2.0 * s;
                case 2: return 2.0;
                default: return 0.0;
            }
        }
        if (s >= 2.0) return 0.0;
        return transition_[static_cast<std::size_t>(order)](s);
    }

    /// d^order w_R / dr^order at r.
    double w(double r, int order = 0) const {
        return std::pow(R_, 2.0 - order) * phi(r / R_, order);
    }

    /// Delta w_R = w'' + 2 w' / r; exactly 6 for r <= R.
    double laplacian(double r) const {
        if (r <= R_) return 6.0;
        return w(r, 2) + 2.0 * w(r, 1) / r;
    }

    /// Delta Delta w_R = w'''' + 4 w''' / r; exactly 0 for r <= R.
    double bilaplacian(double r) const {
        if (r <= R_) return 0.0;
        return w(r, 4) + 4.0 * w(r, 3) / r;
    }

    double max_second_derivative() const noexcept { return sup_phi2_; }

    /// Smallest C with |phi^(a)(s)| <= C s^{2 - a} for a <= 4 on the sample set.
    double growth_constant() const noexcept { return growth_constant_; }

    /// sup phi'' <= 2, the convexity bound the blowup argument asks for.
    bool convexity_bound_holds() const noexcept { return sup_phi2_ <= 2.0 + 1e-12; }

    const detail::Polynomial& transition() const noexcept { return transition_[0]; }

private:
    friend VirialWeight build_weight_from_transition(double R, detail::Polynomial p);

    double R_ = 1.0;
    std::array<detail::Polynomial, max_order + 1> transition_{};
    double sup_phi2_ = 0.0;
    double growth_constant_ = 0.0;
};

/**
 * Wraps an arbitrary transition polynomial on [1, 2] into a weight and checks
 * the region and C^3 junction conditions on a 10^4-point sample.
 * Throws WeightConstructionFailure on any violation.
 */
inline VirialWeight build_weight_from_transition(double R, detail::Polynomial p) {
    if (!(R >= 1.0)) throw InvalidParameter("build_weight: R must be >= 1");
    VirialWeight w;
    w.R_ = R;
    w.transition_[0] = std::move(p);
    for (int k = 1; k <= VirialWeight::max_order; ++k) {
        w.transition_[static_cast<std::size_t>(k)] = w.transition_[static_cast<std::size_t>(k - 1)].derivative();
    }

    const std::array<double, 4> inner_at_1{1.0, 2.0, 2.0, 0.0};
    for (std::size_t k = 0; k < 4; ++k) {
        const double left = inner_at_1[k];
        const double right = w.transition_[k](1.0);
        if (std::abs(left - right) > 1e-9 * std::max(1.0, std::abs(left))) {
            throw WeightConstructionFailure("build_weight: phi^(" + std::to_string(k) +
                                            ") jumps at s = 1 (" + std::to_string(left) +
                                            " vs " + std::to_string(right) + ")");
        }
        const double at2 = w.transition_[k](2.0);
        if (std::abs(at2) > 1e-9) {
            throw WeightConstructionFailure("build_weight: phi^(" + std::to_string(k) +
                                            ") nonzero at s = 2 (" + std::to_string(at2) + ")");
        }
    }

    constexpr int samples = 10000;
    double sup2 = 2.0;
    double growth = 0.0;
    for (int i = 1; i <= samples; ++i) {
        const double s = 2.0 * static_cast<double>(i) / samples;
        sup2 = std::max(sup2, w.phi(s, 2));
        for (int a = 0; a <= 4; ++a) {
            const double v = std::abs(w.phi(s, a));
            if (!std::isfinite(v)) throw WeightConstructionFailure("build_weight: non-finite profile");
            growth = std::max(growth, v / std::pow(s, 2.0 - a));
        }
    }
    w.sup_phi2_ = sup2;
    w.growth_constant_ = growth;
    return w;
}

inline VirialWeight build_weight(double R) {
    const std::array<double, 4> left{1.0, 2.0, 2.0, 0.0};
    const std::array<double, 4> right{0.0, 0.0, 0.0, 0.0};
    return build_weight_from_transition(R, detail::hermite_interpolant(1.0, 2.0, left, right));
}

namespace detail {

struct WeightTables {
    std::vector<double> w0, w1, w2, lap;
};

inline WeightTables tabulate(const VirialWeight& w, const RadialGrid& g) {
    WeightTables t;
    const std::size_t n = g.size();
    t.w0.resize(n);
    t.w1.resize(n);
    t.w2.resize(n);
    t.lap.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double r = g.node(j);
        t.w0[j] = w.w(r, 0);
        t.w1[j] = w.w(r, 1);
        t.w2[j] = w.w(r, 2);
        t.lap[j] = w.laplacian(r);
    }
    return t;
}

/**
 * phi'''' jumps at s = 1 and s = 2. Integrands built from w_R'' or Delta w_R
 * therefore jump in their second derivative there, and integrands built from
 * w_R' in their third, which costs the trapezoid rule O(dr^3) and O(dr^4).
 * A jump J_k in the k-th derivative of the radial integrand at xi contributes
 * the Euler-Maclaurin term dr^{k+1} B_{k+1}(alpha) J_k / (k+1)!, alpha being
 * the offset of the first node past xi in units of dr. Adding the k = 2 and
 * k = 3 terms back leaves an O(dr^5) junction error.
 */
struct Junction {
    double r = 0.0;
    double w4_jump = 0.0;  // w_R''''(r+) - w_R''''(r-)
    double w5_jump = 0.0;  // same for the fifth derivative
    double alpha = 0.0;
    std::size_t left = 0;  // node just below r
    double frac = 0.0;     // linear interpolation weight of node left + 1
};

inline std::vector<Junction> junctions(const VirialWeight& w, const RadialGrid& g) {
    const auto p4 = w.transition().derivative().derivative().derivative().derivative();
    const auto p5 = p4.derivative();
    const double R = w.radius();
    const double R2 = R * R, R3 = R2 * R;
    // (xi, [w''''], [w^(5)]); the inner piece R^2 s^2 has no fourth derivative.
    const std::array<std::array<double, 3>, 2> spots{
        {{R, p4(1.0) / R2, p5(1.0) / R3}, {2.0 * R, -p4(2.0) / R2, -p5(2.0) / R3}}};
    std::vector<Junction> out;
    for (const auto& [xi, j4, j5] : spots) {
        const double q = xi / g.dr() - 1.0;  // node j sits at (j + 1) dr
        if (!(q >= 0.0)) continue;
        const auto left = static_cast<std::size_t>(std::floor(q));
        if (left + 1 >= g.size()) continue;
        const double frac = q - static_cast<double>(left);
        out.push_back({xi, j4, j5, 1.0 - frac, left, frac});
    }
    return out;
}

/// Which weight derivative multiplies the smooth factor.
enum class WeightPart { FirstDerivative, SecondDerivative, Laplacian };

/// Euler-Maclaurin junction terms for int (weight part) * factor dx, with the
/// factor sampled at the nodes.
inline double junction_term(const Junction& J, const RadialGrid& g, WeightPart part,
                            std::span<const double> factor) {
    double j2 = 0.0, j3 = 0.0;  // jumps of the weight part's 2nd and 3rd derivatives
    switch (part) {
        case WeightPart::FirstDerivative: j3 = J.w4_jump; break;
        case WeightPart::SecondDerivative: j2 = J.w4_jump; j3 = J.w5_jump; break;
        case WeightPart::Laplacian: j2 = J.w4_jump; j3 = J.w5_jump + 2.0 * J.w4_jump / J.r; break;
    }
    const double h = g.dr();
    const double c = (1.0 - J.frac) * factor[J.left] + J.frac * factor[J.left + 1];
    const double dc = (factor[J.left + 1] - factor[J.left]) / h;
    const double xi = J.r;
    // Radial integrand F = 4 pi r^2 (weight part) c; F and F' are continuous.
    const double F2 = 4.0 * std::numbers::pi * xi * xi * j2 * c;
    const double F3 = 4.0 * std::numbers::pi * (xi * xi * (j3 * c + 3.0 * j2 * dc) + 6.0 * xi * j2 * c);
    const double a = J.alpha;
    const double b3 = a * a * a - 1.5 * a * a + 0.5 * a;
    const double b4 = a * a * a * a - 2.0 * a * a * a + a * a - 1.0 / 30.0;
    return h * h * h * b3 / 6.0 * F2 + h * h * h * h * b4 / 24.0 * F3;
}

inline void require_support_inside(const VirialWeight& w, const RadialGrid& g) {
    if (2.0 * w.radius() > g.r_max()) {
        throw InvalidParameter("virial: weight support 2R = " + std::to_string(2.0 * w.radius()) +
                               " exceeds r_max = " + std::to_string(g.r_max()));
    }
}

}  // namespace detail

/// I_R[u] = 2 Im int w_R'(r) u_r conj(u) dx.
inline double I_R(const RadialField& u, const VirialWeight& w,
                  Derivative scheme = Derivative::Stencil) {
    const auto& g = u.grid();
    const auto du = derivative(u, scheme);
    std::vector<double> f(u.size()), m(u.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
        m[j] = std::imag(du[j] * std::conj(u[j]));
        f[j] = w.w(g.node(j), 1) * m[j];
    }
    double total = integrate_radial(g, f);
    for (const auto& J : detail::junctions(w, g)) total += detail::junction_term(J, g, detail::WeightPart::FirstDerivative, m);
    return 2.0 * total;
}

/// The four integrals of F_R[u].
struct VirialTerms {
    double bilaplacian = 0.0;  // int (-Delta Delta w_R) |u|^2
    double quartic = 0.0;      // int Delta w_R |u|^4
    double hessian = 0.0;      // int 4 w_R'' |u_r|^2
    double sextic = 0.0;       // -(4/3) int Delta w_R |u|^6

    double total() const { return bilaplacian + quartic + hessian + sextic; }
    double critical() const { return bilaplacian + hessian + sextic; }
};

/**
 * Terms of F_R for radial u. The bilaplacian term is evaluated in the
 * integrated-by-parts form -int Delta w_R Delta(|u|^2) with
 * Delta |u|^2 = 2 Re(conj(u) Delta u) + 2 |u_r|^2; phi'''' jumps at s = 1, 2,
 * so sampling Delta Delta w_R directly costs O(dr^2 |phi^(5)|) in the trapezoid.
 * Requires 2R <= r_max so no boundary terms arise.
 */
inline VirialTerms virial_terms(const RadialField& u, const VirialWeight& w,
                                Derivative scheme = Derivative::Stencil) {
    const auto& g = u.grid();
    detail::require_support_inside(w, g);
    const auto tab = detail::tabulate(w, g);
    const auto du = derivative(u, scheme);
    const auto lu = laplacian(u, scheme);
    const std::size_t n = u.size();
    // Smooth multipliers of Delta w (mb, m4, m6) and of w'' (mh).
    std::vector<double> mb(n), m4(n), mh(n), m6(n), fb(n), f4(n), fh(n), f6(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = std::norm(u[j]);
        const double ur2 = std::norm(du[j]);
        mb[j] = -(2.0 * std::real(std::conj(u[j]) * lu[j]) + 2.0 * ur2);
        m4[j] = a * a;
        mh[j] = 4.0 * ur2;
        m6[j] = a * a * a;
        fb[j] = tab.lap[j] * mb[j];
        f4[j] = tab.lap[j] * m4[j];
        fh[j] = tab.w2[j] * mh[j];
        f6[j] = tab.lap[j] * m6[j];
    }
    VirialTerms t;
    t.bilaplacian = integrate_radial(g, fb);
    t.quartic = integrate_radial(g, f4);
    t.hessian = integrate_radial(g, fh);
    double sextic = integrate_radial(g, f6);
    using detail::WeightPart;
    for (const auto& J : detail::junctions(w, g)) {
        t.bilaplacian += detail::junction_term(J, g, WeightPart::Laplacian, mb);
        t.quartic += detail::junction_term(J, g, WeightPart::Laplacian, m4);
        t.hessian += detail::junction_term(J, g, WeightPart::SecondDerivative, mh);
        sextic += detail::junction_term(J, g, WeightPart::Laplacian, m6);
    }
    t.sextic = -4.0 / 3.0 * sextic;
    return t;
}

/// d/dt I_R[u] along solutions.
inline double F_R(const RadialField& u, const VirialWeight& w,
                  Derivative scheme = Derivative::Stencil) {
    return virial_terms(u, w, scheme).total();
}

/// F_R without the quartic term.
inline double Fc_R(const RadialField& u, const VirialWeight& w,
                   Derivative scheme = Derivative::Stencil) {
    return virial_terms(u, w, scheme).critical();
}

/// F^c_inf[u] = 8 G[u].
inline double Fc_inf(const RadialField& u, Derivative scheme = Derivative::Stencil) {
    return 8.0 * g_functional(u, scheme);
}

/// F^c_inf of the exact profile e^{i theta} mu^{1/2} W(mu r): grid quadrature
/// plus the exact tails beyond the quadrature's reach r_max - dr/2.
inline double Fc_inf_profile(double theta, double mu, const RadialGrid& grid) {
    const auto u = scaled_state(theta, mu, grid);
    const double edge = grid.quadrature_edge();
    const double grad = grad_norm_sq(u) + gradient_tail(edge, mu);
    const double l6 = l6_norm_6(u) + l6_tail(edge, mu);
    return 8.0 * (grad - l6);
}

/// K = F^c_R[W_(theta,mu)] - F^c_inf[W_(theta,mu)]; both vanish, so the value
/// is itself a residual.
inline double K_correction(double theta, double mu, const VirialWeight& w,
                           const RadialGrid& grid) {
    return Fc_R(scaled_state(theta, mu, grid), w) - Fc_inf_profile(theta, mu, grid);
}

/// V_R = int w_R |u|^2, whose time derivative is I_R.
inline double V_R(const RadialField& u, const VirialWeight& w) {
    const auto& g = u.grid();
    std::vector<double> f(u.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = w.w(g.node(j), 0) * std::norm(u[j]);
    return integrate_radial(g, f);
}

}  // namespace cqnls
