#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "cqnls/dynamics.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"

namespace cqnls {

/// u = e^{i theta} (g + mu^{1/2} W(mu r)) with g orthogonal in H1-dot to the
/// phase and scaling directions.
struct ModulationFit {
    double theta = 0.0;  // in [0, 2 pi)
    double mu = 1.0;
    RadialField g;  // no default: always produced by fit()
    double orth_residual_1 = 0.0;  // <grad Im g, grad W_mu>
    double orth_residual_2 = 0.0;  // <grad Re g, grad W1_mu>
    double g_h1_norm = 0.0;
    double delta = 0.0;
    bool converged = false;
    bool outside_gate = false;  // fit made with delta above the gate; no guarantee attached
    int iterations = 0;
};

struct FitOptions {
    double gate_fraction = 0.2;  // gate = gate_fraction * ||grad W||^2
    bool enforce_gate = true;
    int max_iterations = 50;
};

namespace detail {

inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    if (a >= two_pi) a -= two_pi;
    return a;
}

/// Orthogonality residuals for trial (theta, mu), with the profile derivatives
/// taken in closed form and the derivative of u from the grid.
class OrthogonalitySystem {
public:
    OrthogonalitySystem(const RadialField& u)
        : u_(u), du_(radial_derivative(u)) {}

    std::array<double, 2> operator()(double theta, double mu) const {
        const auto& g = u_.grid();
        const Complex rot = std::polar(1.0, -theta);
        const double s = std::sqrt(mu);
        const double s3 = mu * s;
        std::vector<double> f1(u_.size()), f2(u_.size());
        for (std::size_t j = 0; j < u_.size(); ++j) {
            const double x = mu * g.node(j);
            const Complex dg = rot * du_[j] - s3 * eval_W_prime(x);
            f1[j] = std::imag(dg) * s3 * eval_W_prime(x);
            f2[j] = std::real(dg) * s3 * eval_W1_prime(x);
        }
        return {integrate_radial(g, f1), integrate_radial(g, f2)};
    }

    /// arg <u, W_mu>_{H1-dot}.
    double phase_guess(double mu) const {
        const auto& g = u_.grid();
        const double s3 = mu * std::sqrt(mu);
        std::vector<double> re(u_.size()), im(u_.size());
        for (std::size_t j = 0; j < u_.size(); ++j) {
            const double wp = s3 * eval_W_prime(mu * g.node(j));
            re[j] = std::real(du_[j]) * wp;
            im[j] = std::imag(du_[j]) * wp;
        }
        return std::atan2(integrate_radial(g, im), integrate_radial(g, re));
    }

private:
    const RadialField& u_;
    RadialField du_;
};

}  // namespace detail

/**
 * Solve the two orthogonality conditions for (theta, mu) by damped Newton in
 * (theta, log mu) with a central-difference Jacobian.
 *
 * Start: mu0 from the gradient median radius, theta0 = arg <u, W_mu0>.
 * Throws ZeroField for u = 0 and NotNearOrbit when delta(u) is above the gate
 * and the gate is enforced; otherwise such fits carry outside_gate = true.
 * If Newton does not settle in max_iterations, the best iterate is returned
 * with converged = false.
 */
inline ModulationFit fit(const RadialField& u, const GroundStateRef& ref, const FitOptions& opt = {}) {
    if (!(u.max_abs() > 0.0)) throw ZeroField();
    const double d0 = delta(u, ref);
    const double gate = opt.gate_fraction * ref.grad_norm_sq;
    const bool outside = !(d0 < gate);
    if (outside && opt.enforce_gate) throw NotNearOrbit(d0, gate);

    const auto mu0 = modulation_scale_estimate(u);
    if (!mu0) throw ZeroField();
    const detail::OrthogonalitySystem sys(u);
    auto residual = [&](double th, double lm) { return sys(th, std::exp(lm)); };
    auto norm = [](const std::array<double, 2>& f) { return std::hypot(f[0], f[1]); };

    double th = sys.phase_guess(*mu0);
    double lm = std::log(*mu0);
    auto F = residual(th, lm);
    double fn = norm(F);
    const double scale = ref.grad_norm_sq;
    const double done = 1e-13 * scale;
    constexpr double h = 1e-6;

    int it = 0;
    for (; it < opt.max_iterations && fn > done; ++it) {
        const auto fp_t = residual(th + h, lm), fm_t = residual(th - h, lm);
        const auto fp_m = residual(th, lm + h), fm_m = residual(th, lm - h);
        const double a = (fp_t[0] - fm_t[0]) / (2 * h), b = (fp_m[0] - fm_m[0]) / (2 * h);
        const double c = (fp_t[1] - fm_t[1]) / (2 * h), d = (fp_m[1] - fm_m[1]) / (2 * h);
        const double det = a * d - b * c;
        if (!(std::abs(det) > 0.0) || !std::isfinite(det)) break;
        const double dth = -(d * F[0] - b * F[1]) / det;
        const double dlm = -(-c * F[0] + a * F[1]) / det;

        double lambda = 1.0;
        bool accepted = false;
        for (int k = 0; k < 30; ++k, lambda *= 0.5) {
            const auto Fn = residual(th + lambda * dth, lm + lambda * dlm);
            if (norm(Fn) < fn) {
                th += lambda * dth;
                lm += lambda * dlm;
                F = Fn;
                fn = norm(Fn);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        if (std::abs(lambda * dth) < 1e-15 && std::abs(lambda * dlm) < 1e-15) {
            ++it;
            break;
        }
    }

    const double mu = std::exp(lm);
    const Complex rot = std::polar(1.0, -th);
    const double s = std::sqrt(mu);
    const auto& grid = u.grid();
    std::vector<Complex> gv(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) gv[j] = rot * u[j] - s * eval_W(mu * grid.node(j));
    RadialField g(grid, std::move(gv));
    const double g_h1 = std::sqrt(grad_norm_sq(g));
    return ModulationFit{.theta = detail::wrap_angle(th),
                         .mu = mu,
                         .g = std::move(g),
                         .orth_residual_1 = F[0],
                         .orth_residual_2 = F[1],
                         .g_h1_norm = g_h1,
                         .delta = d0,
                         .converged = fn <= 1e-10 * scale,
                         .outside_gate = outside,
                         .iterations = it};
}

/// e^{i theta} (g + mu^{1/2} W(mu r)), the inverse of fit().
inline RadialField reconstruct(const ModulationFit& f) {
    const auto& grid = f.g.grid();
    const Complex rot = std::polar(1.0, f.theta);
    const double s = std::sqrt(f.mu);
    std::vector<Complex> v(f.g.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = rot * (f.g[j] + s * eval_W(f.mu * grid.node(j)));
    return RadialField(grid, std::move(v));
}

/// Quadratic form (1/2) int |grad h|^2 - (1/2) int W^4 (5 h1^2 + h2^2), h = h1 + i h2.
inline double eval_quadratic_form(const RadialField& h) {
    const auto& g = h.grid();
    std::vector<double> pot(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double w = eval_W(g.node(j));
        const double w4 = w * w * w * w;
        const double a = std::real(h[j]), b = std::imag(h[j]);
        pot[j] = w4 * (5.0 * a * a + b * b);
    }
    return 0.5 * grad_norm_sq(h) - 0.5 * integrate_radial(g, pot);
}

namespace detail {

inline RadialField apply_schrodinger(const RadialField& h, double coupling, const char* name) {
    if (!h.is_real()) throw InvalidParameter(std::string(name) + ": field must be real");
    const auto lap = radial_laplacian(h);
    const auto& g = h.grid();
    std::vector<Complex> out(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const double w = eval_W(g.node(j));
        out[j] = -lap[j] - coupling * w * w * w * w * h[j];
    }
    return RadialField(g, std::move(out));
}

}  // namespace detail

/// L1 h = -Delta h - 5 W^4 h.
inline RadialField apply_L1(const RadialField& h) { return detail::apply_schrodinger(h, 5.0, "apply_L1"); }

/// L2 h = -Delta h - W^4 h.
inline RadialField apply_L2(const RadialField& h) { return detail::apply_schrodinger(h, 1.0, "apply_L2"); }

struct ModulationSample {
    double t = 0.0;
    double theta = 0.0;
    double mu = 0.0;
    double delta = 0.0;
    double g_h1 = 0.0;
    double mu_rate = std::numeric_limits<double>::quiet_NaN();  // mu'/mu
    double ratio_estimmodu = 0.0;  // (||u||_4^2 + 1/(1 + mu)) / delta
    double ratio_estimlad = std::numeric_limits<double>::quiet_NaN();  // |mu'/mu| / (mu^2 delta)
    bool converged = false;
};

/**
 * Fit every snapshot with delta below the gate and estimate mu'/mu by finite
 * differences on log mu: centered (non-uniform three-point) inside each run of
 * consecutive qualifying snapshots, one-sided at its ends. Runs of a single
 * snapshot get NaN rates. The ratios are reported, not judged.
 */
inline std::vector<ModulationSample> track_modulation(const std::vector<Snapshot>& snapshots,
                                                      const GroundStateRef& ref,
                                                      double gate_fraction = 0.2) {
    std::vector<ModulationSample> out;
    std::vector<std::size_t> source;
    FitOptions opt;
    opt.gate_fraction = gate_fraction;
    opt.enforce_gate = false;
    const double gate = gate_fraction * ref.grad_norm_sq;
    for (std::size_t i = 0; i < snapshots.size(); ++i) {
        const auto& u = snapshots[i].field;
        if (!(u.max_abs() > 0.0) || !(delta(u, ref) < gate)) continue;
        const auto f = fit(u, ref, opt);
        ModulationSample s;
        s.t = snapshots[i].t;
        s.theta = f.theta;
        s.mu = f.mu;
        s.delta = f.delta;
        s.g_h1 = f.g_h1_norm;
        s.converged = f.converged;
        s.ratio_estimmodu = (std::sqrt(l4_norm_4(u)) + 1.0 / (1.0 + f.mu)) / f.delta;
        out.push_back(s);
        source.push_back(i);
    }

    std::size_t begin = 0;
    while (begin < out.size()) {
        std::size_t end = begin + 1;
        while (end < out.size() && source[end] == source[end - 1] + 1) ++end;
        if (end - begin >= 2) {
            for (std::size_t i = begin; i < end; ++i) {
                double rate;
                if (i == begin || i + 1 == end) {
                    const std::size_t a = (i == begin) ? i : i - 1;
                    rate = (std::log(out[a + 1].mu) - std::log(out[a].mu)) / (out[a + 1].t - out[a].t);
                } else {
                    const double h1 = out[i].t - out[i - 1].t, h2 = out[i + 1].t - out[i].t;
                    rate = -h2 / (h1 * (h1 + h2)) * std::log(out[i - 1].mu) +
                           (h2 - h1) / (h1 * h2) * std::log(out[i].mu) +
                           h1 / (h2 * (h1 + h2)) * std::log(out[i + 1].mu);
                }
                out[i].mu_rate = rate;
                out[i].ratio_estimlad = std::abs(rate) / (out[i].mu * out[i].mu * out[i].delta);
            }
        }
        begin = end;
    }
    return out;
}

inline std::vector<ModulationSample> track_modulation(const TrajectoryLog& log, const GroundStateRef& ref,
                                                      double gate_fraction = 0.2) {
    return track_modulation(log.snapshots, ref, gate_fraction);
}

}  // namespace cqnls
