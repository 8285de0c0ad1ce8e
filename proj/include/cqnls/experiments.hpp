#pragma once

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "cqnls/detail/polynomial.hpp"
#include "cqnls/dynamics.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"
#include "cqnls/modulation.hpp"
#include "cqnls/virial.hpp"

namespace cqnls {

/// C^2 cutoff: 1 on [0, 1], 0 on [2, inf), quintic Hermite bridge between.
class SmoothCutoff {
public:
    SmoothCutoff() {
        const std::array<double, 3> left{1.0, 0.0, 0.0};
        const std::array<double, 3> right{0.0, 0.0, 0.0};
        bridge_ = detail::hermite_interpolant(1.0, 2.0, left, right);
    }

    double operator()(double s) const {
        if (s <= 1.0) return 1.0;
        if (s >= 2.0) return 0.0;
        return bridge_(s);
    }

    static const SmoothCutoff& instance() {
        static const SmoothCutoff xi;
        return xi;
    }

private:
    detail::Polynomial bridge_;
};

/// M_R[u] = int |u|^2 xi(r / R).
inline double localized_mass(const RadialField& u, double R) {
    if (!(R > 0.0)) throw InvalidParameter("localized_mass: R must be positive");
    const auto& xi = SmoothCutoff::instance();
    const auto& g = u.grid();
    std::vector<double> f(u.size());
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = std::norm(u[j]) * xi(g.node(j) / R);
    return integrate_radial(g, f);
}

// Data families. Each shape is a unit-amplitude profile psi; the tuner picks
// the amplitude.

/// W(mu r) chi(r / rho), chi the smooth cutoff.
struct TruncatedGroundState {
    double mu = 1.0;
    double rho = 30.0;
};

/// exp(-r^2 / (2 sigma^2)).
struct Gaussian {
    double sigma = 1.0;
};

/// exp(-(r - r0)^2 / (2 sigma^2)) + exp(-(r + r0)^2 / (2 sigma^2)); the mirror
/// term keeps the profile even in r, hence smooth at the origin.
struct Ring {
    double r0 = 4.0;
    double sigma = 1.0;
};

using Shape = std::variant<TruncatedGroundState, Gaussian, Ring>;

struct DataFamily {
    Shape shape;
    double amplitude = 1.0;
};

inline void validate(const Shape& s) {
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedGroundState>) {
                if (!(v.mu > 0.0 && v.rho > 0.0)) throw InvalidParameter("family: mu and rho must be positive");
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(v.sigma > 0.0)) throw InvalidParameter("family: sigma must be positive");
            } else {
                if (!(v.r0 > 0.0 && v.sigma > 0.0)) throw InvalidParameter("family: r0 and sigma must be positive");
            }
        },
        s);
}

inline double shape_value(const Shape& s, double r) {
    return std::visit(
        [r](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedGroundState>) {
                return eval_W(v.mu * r) * SmoothCutoff::instance()(r / v.rho);
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return std::exp(-r * r / (2.0 * v.sigma * v.sigma));
            } else {
                const double s2 = 2.0 * v.sigma * v.sigma;
                return std::exp(-(r - v.r0) * (r - v.r0) / s2) + std::exp(-(r + v.r0) * (r + v.r0) / s2);
            }
        },
        s);
}

inline std::string describe(const Shape& s) {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&os](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TruncatedGroundState>) {
                os << "TruncatedGroundState(mu=" << v.mu << ";rho=" << v.rho << ")";
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                os << "Gaussian(sigma=" << v.sigma << ")";
            } else {
                os << "Ring(r0=" << v.r0 << ";sigma=" << v.sigma << ")";
            }
        },
        s);
    return os.str();
}

inline RadialField sample_family(const DataFamily& f, const RadialGrid& grid) {
    validate(f.shape);
    return RadialField::sample(grid, [&](double r) { return f.amplitude * shape_value(f.shape, r); });
}

/// Norms of the unit-amplitude shape: ||psi||_2^2, ||psi||_4^4, ||psi||_6^6, ||grad psi||^2.
struct ShapeIntegrals {
    double s2 = 0.0;
    double s4 = 0.0;
    double s6 = 0.0;
    double sg = 0.0;
};

inline ShapeIntegrals shape_integrals(const Shape& shape, const RadialGrid& grid,
                                      Derivative scheme = Derivative::Spectral) {
    const auto psi = sample_family({shape, 1.0}, grid);
    return {l2_norm_sq(psi), l4_norm_4(psi), l6_norm_6(psi), grad_norm_sq(psi, scheme)};
}

enum class Side { Below, Above };

inline const char* to_string(Side s) { return s == Side::Below ? "Below" : "Above"; }

namespace detail {

/// Positive roots of c0 + c1 x + c2 x^2 + c3 x^3 with c3 < 0, increasing.
/// The critical points split [0, Cauchy bound] into monotone pieces; each
/// sign change is bracketed with TOMS 748 and polished by Newton.
inline std::vector<double> positive_cubic_roots(double c0, double c1, double c2, double c3) {
    auto p = [=](double x) { return ((c3 * x + c2) * x + c1) * x + c0; };
    auto dp = [=](double x) { return (3.0 * c3 * x + 2.0 * c2) * x + c1; };
    std::vector<double> knots{0.0};
    const double disc = 4.0 * c2 * c2 - 12.0 * c3 * c1;
    if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (double x : {(-2.0 * c2 + sq) / (6.0 * c3), (-2.0 * c2 - sq) / (6.0 * c3)}) {
            if (x > 0.0) knots.push_back(x);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.push_back(1.0 + std::max({std::abs(c0 / c3), std::abs(c1 / c3), std::abs(c2 / c3)}));

    std::vector<double> roots;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        const double a = knots[i], b = knots[i + 1];
        const double fa = p(a), fb = p(b);
        if (fa == 0.0) {
            if (a > 0.0) roots.push_back(a);
            continue;
        }
        if (!(fa * fb < 0.0)) continue;
        std::uintmax_t iters = 200;
        const auto br = boost::math::tools::toms748_solve(
            p, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52), iters);
        double x = 0.5 * (br.first + br.second);
        for (int k = 0; k < 3; ++k) {
            const double d = dp(x);
            if (d == 0.0) break;
            const double xn = x - p(x) / d;
            if (!(xn > a && xn < b)) break;
            x = xn;
        }
        roots.push_back(x);
    }
    return roots;
}

}  // namespace detail

/// Every positive amplitude a with E(a psi) = e_target, increasing.
inline std::vector<double> threshold_amplitudes(const ShapeIntegrals& si, double e_target) {
    if (!(si.s6 > 0.0)) return {};
    std::vector<double> a;
    for (double x : detail::positive_cubic_roots(-e_target, 0.5 * si.sg, 0.25 * si.s4, -si.s6 / 6.0)) {
        a.push_back(std::sqrt(x));
    }
    return a;
}

struct TunedData {
    RadialField field;
    double amplitude = 0.0;
    std::vector<double> roots;
    double achieved_energy = 0.0;
    double grad_ratio = 0.0;  // ||grad u0|| / ||grad W||
};

/// Amplitude selection from precomputed shape integrals; see tune_to_threshold.
inline TunedData tune_from_integrals(const Shape& shape, const ShapeIntegrals& si, Side side,
                                     const GroundStateRef& ref, const RadialGrid& grid, double tol,
                                     double e_target, Derivative scheme = Derivative::Spectral) {
    if (!(tol > 0.0)) throw InvalidParameter("tune_to_threshold: tol must be positive");
    const auto roots = threshold_amplitudes(si, e_target);
    std::optional<double> pick;
    for (double a : roots) {
        const double g = a * a * si.sg;
        const bool ok = side == Side::Below ? g < ref.grad_norm_sq : g > ref.grad_norm_sq;
        if (ok) {
            pick = a;
            break;
        }
    }
    if (!pick) {
        std::ostringstream os;
        os.precision(10);
        os << "tune_to_threshold: no " << to_string(side) << "-side amplitude for " << describe(shape)
           << "; roots a = [";
        for (std::size_t i = 0; i < roots.size(); ++i) os << (i ? ", " : "") << roots[i];
        os << "]";
        throw Infeasible(os.str(), roots);
    }
    auto field = sample_family({shape, *pick}, grid);
    const double e = energy(field, scheme);
    if (!(std::abs(e - e_target) < tol * std::abs(e_target))) {
        throw Infeasible("tune_to_threshold: re-evaluated energy misses the tolerance", roots);
    }
    const double gr = std::sqrt(grad_norm_sq(field, scheme) / ref.grad_norm_sq);
    return TunedData{std::move(field), *pick, roots, e, gr};
}

/**
 * Scale a shape onto the energy level e_target (default E^c(W)).
 *
 * E(a psi) = (x/2) sg + (x^2/4) s4 - (x^3/6) s6 with x = a^2 is a cubic, so
 * every positive root is found. The smallest root whose x sg lies on the
 * requested side of ||grad W||^2 is taken. Throws Infeasible with the root list
 * when none qualifies. The energy is then re-evaluated on the returned field.
 */
inline TunedData tune_to_threshold(const Shape& shape, Side side, const GroundStateRef& ref,
                                   const RadialGrid& grid, double tol = 1e-10,
                                   std::optional<double> e_target = std::nullopt,
                                   Derivative scheme = Derivative::Spectral) {
    const auto si = shape_integrals(shape, grid, scheme);
    return tune_from_integrals(shape, si, side, ref, grid, tol, e_target.value_or(ref.crit_energy), scheme);
}

// Virial diagnostics along a trajectory.

struct VirialSample {
    double t = 0.0;
    double I_R = 0.0;
    double F_R = 0.0;
    double Fc_inf = 0.0;
    double delta = 0.0;
    double bni_margin = 0.0;  // F_R + 14 delta
    double localized_mass = 0.0;
    double V_R = 0.0;
};

inline std::vector<VirialSample> virial_series(const std::vector<Snapshot>& snapshots, const VirialWeight& w,
                                               const GroundStateRef& ref,
                                               Derivative scheme = Derivative::Spectral) {
    std::vector<VirialSample> out;
    out.reserve(snapshots.size());
    for (const auto& s : snapshots) {
        VirialSample v;
        v.t = s.t;
        v.I_R = I_R(s.field, w, scheme);
        v.F_R = F_R(s.field, w, scheme);
        v.Fc_inf = Fc_inf(s.field, scheme);
        v.delta = delta(s.field, ref, scheme);
        v.bni_margin = v.F_R + 14.0 * v.delta;
        v.localized_mass = localized_mass(s.field, w.radius());
        v.V_R = V_R(s.field, w);
        out.push_back(v);
    }
    return out;
}

/// Records on the wrong side of ||grad W||^2 (beyond a relative band): for
/// Below runs any record at or above it, for Above runs any record at or below
/// it before the blowup bar was crossed.
inline std::size_t trapping_violations(const TrajectoryLog& log, Side side, const GroundStateRef& ref,
                                       double band = 1e-6) {
    std::size_t bad = 0;
    for (const auto& r : log.records) {
        if (side == Side::Below) {
            if (r.grad_norm_sq >= ref.grad_norm_sq * (1.0 + band)) ++bad;
        } else if (r.grad_norm_sq <= ref.grad_norm_sq * (1.0 - band)) {
            ++bad;
        }
    }
    return bad;
}

// Dichotomy experiment.

struct ExperimentOptions {
    double tol = 1e-10;
    std::optional<double> target_energy;  // default E^c(W)
    bool confirm_on_fine_grid = true;     // Blowup runs repeat on 2n + 1 nodes
    double virial_radius = 8.0;           // clipped to r_max / 2
    double gate_fraction = 0.2;
};

struct ExperimentResult {
    TunedData tuned;
    TrajectoryLog log;
    RunOutcome outcome;
    std::vector<VirialSample> virial;
    std::vector<ModulationSample> modulation;
    std::size_t trapping_violations = 0;
};

/**
 * Tune, simulate and classify. Blowup runs are repeated at dt/2 (inside
 * detect_outcome) and, unless disabled, on a grid with 2n + 1 nodes; the
 * outcome is refinement-confirmed only if every rerun crosses the bar no later
 * than t_detect (1 + refinement_slack).
 */
inline ExperimentResult dichotomy_experiment(Side side, const Shape& shape, const RadialGrid& grid,
                                             const IntegratorConfig& cfg, const GroundStateRef& ref,
                                             const ExperimentOptions& opt = {}) {
    auto tuned = tune_to_threshold(shape, side, ref, grid, opt.tol, opt.target_energy, cfg.scheme);
    auto log = simulate(tuned.field, cfg, ref);
    auto outcome = detect_outcome(tuned.field, log, cfg, ref);

    if (outcome.classification == Classification::Blowup && opt.confirm_on_fine_grid) {
        const RadialGrid fine(grid.r_max(), 2 * grid.size() + 1);
        const auto tf = tune_to_threshold(shape, side, ref, fine, opt.tol, opt.target_energy, cfg.scheme);
        IntegratorConfig fcfg = cfg;
        fcfg.snapshot_every = 0;
        const auto flog = simulate(tf.field, fcfg, ref);
        if (flog.termination == Termination::BlowupDetected) outcome.t_detect_fine_grid = flog.t_detect;
        outcome.refinement_confirmed =
            outcome.refinement_confirmed && outcome.t_detect_fine_grid &&
            *outcome.t_detect_fine_grid <= *outcome.t_detect * (1.0 + refinement_slack);
    }

    const double R = std::min(opt.virial_radius, 0.5 * grid.r_max());
    const auto w = build_weight(std::max(1.0, R));
    auto virial = virial_series(log.snapshots, w, ref, cfg.scheme);
    auto modulation = track_modulation(log, ref, opt.gate_fraction);
    const auto bad = trapping_violations(log, side, ref);
    return ExperimentResult{std::move(tuned), std::move(log), outcome, std::move(virial), std::move(modulation),
                            bad};
}

// Identity battery.

enum class CheckStatus { Pass, Fail, Infeasible };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "PASS";
        case CheckStatus::Fail: return "FAIL";
        case CheckStatus::Infeasible: return "INFEASIBLE";
    }
    return "?";
}

struct CheckEntry {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    CheckStatus status = CheckStatus::Fail;
    std::size_t min_n = 0;  // smallest n at which the default r_max is known to pass
    std::string note;
};

struct VerifyReport {
    std::vector<CheckEntry> entries;

    bool passed() const {
        return std::none_of(entries.begin(), entries.end(),
                            [](const CheckEntry& e) { return e.status == CheckStatus::Fail; });
    }
    std::size_t failures() const {
        return static_cast<std::size_t>(std::count_if(
            entries.begin(), entries.end(), [](const CheckEntry& e) { return e.status == CheckStatus::Fail; }));
    }
};

struct VerifyOptions {
    /// Weight factory, replaceable so tests can inject a defective profile.
    std::function<VirialWeight(double)> weight_builder = [](double R) { return build_weight(R); };
};

/**
 * Runs the ground-state, virial, operator and modulation identities on `grid`
 * and collects residuals. Nothing throws out of here: an exception inside a
 * check becomes a failed entry carrying the message. Quantities of W that are
 * not integrable on a finite domain get the exact tails beyond the grid.
 */
inline VerifyReport verify_identities(const RadialGrid& grid, const GroundStateRef& ref,
                                      const VerifyOptions& opt = {}) {
    VerifyReport rep;
    auto add = [&](std::string name, double tol, std::size_t min_n, auto&& body) {
        CheckEntry e;
        e.name = std::move(name);
        e.tolerance = tol;
        e.min_n = min_n;
        try {
            e.residual = body(e);
            if (e.status != CheckStatus::Infeasible) {
                e.status = (std::isfinite(e.residual) && e.residual < tol) ? CheckStatus::Pass : CheckStatus::Fail;
            }
        } catch (const std::exception& ex) {
            e.status = CheckStatus::Fail;
            e.residual = std::numeric_limits<double>::quiet_NaN();
            e.note = ex.what();
        }
        rep.entries.push_back(std::move(e));
    };

    const double G = ref.grad_norm_sq;
    const double edge = grid.quadrature_edge();
    const auto W = scaled_state(0.0, 1.0, grid);

    add("pohozaev_l6_equals_grad", 1e-8, 0, [&](CheckEntry&) { return std::abs(ref.l6_norm_6 - G) / G; });
    add("crit_energy_third_of_grad", 1e-8, 0,
        [&](CheckEntry&) { return std::abs(ref.crit_energy - G / 3.0) / (G / 3.0); });
    add("grad_closed_form", 1e-8, 0, [&](CheckEntry&) {
        const double exact = 3.0 * std::sqrt(3.0) * std::numbers::pi * std::numbers::pi / 4.0;
        return std::abs(G - exact) / exact;
    });
    add("grad_W_on_grid_plus_tail", 1e-4, 1024,
        [&](CheckEntry&) { return std::abs(grad_norm_sq(W) + gradient_tail(edge) - G) / G; });
    add("sobolev_ratio_W", 1e-2, 1024, [&](CheckEntry&) { return std::abs(sobolev_ratio(W, ref) - 1.0); });
    add("sobolev_strict_other_shapes", 1.0, 1024, [&](CheckEntry& e) {
        const std::array<Shape, 5> shapes{Gaussian{1.0}, Gaussian{3.0}, Ring{4.0, 1.0}, Ring{8.0, 2.0},
                                          TruncatedGroundState{1.0, 2.0}};
        double worst = 0.0;
        for (const auto& s : shapes) {
            worst = std::max(worst, sobolev_ratio(sample_family({s, 1.0}, grid), ref, Derivative::Spectral));
        }
        e.note = "largest ratio among five non-ground-state shapes";
        return worst;
    });

    add("virial_weight_construction", 0.5, 0, [&](CheckEntry&) {
        for (double R : {2.0, 8.0, 32.0}) (void)opt.weight_builder(R);
        return 0.0;
    });
    add("virial_weight_convexity_bound", 2.0 + 1e-12, 0, [&](CheckEntry& e) {
        const auto w = opt.weight_builder(2.0);
        e.status = w.convexity_bound_holds() ? CheckStatus::Pass : CheckStatus::Infeasible;
        e.note = "sup phi'' <= 2 is incompatible with phi = s^2 on [0,1], 0 on [2,inf)";
        return w.max_second_derivative();
    });
    add("virial_critical_vanishes_on_orbit", 1e-5, 4096, [&](CheckEntry& e) {
        double worst = 0.0;
        for (double R : {2.0, 8.0, 32.0}) {
            if (2.0 * R > grid.r_max()) continue;
            const auto w = opt.weight_builder(R);
            for (double theta : {0.0, 1.2}) {
                for (double lambda : {1.0, 4.0}) {
                    worst = std::max(worst, std::abs(Fc_R(scaled_state(theta, lambda, grid), w)) / G);
                }
            }
        }
        e.note = "max |F^c_R[W_(theta,lambda)]| / ||grad W||^2 over theta, lambda, R";
        return worst;
    });
    add("virial_K_correction", 1e-5, 4096, [&](CheckEntry&) {
        const auto w = opt.weight_builder(std::min(8.0, 0.5 * grid.r_max()));
        return std::abs(K_correction(0.0, 1.0, w, grid)) / G;
    });

    add("L2_kernel", 1e-3, 1024, [&](CheckEntry&) {
        const auto res = apply_L2(W);
        const auto w5 = W.map([](const Complex& z) { return z * z * z * z * z; });
        return std::sqrt(l2_norm_sq(res) / l2_norm_sq(w5));
    });
    add("L1_equals_4_laplacian", 1e-3, 1024, [&](CheckEntry&) {
        auto res = apply_L1(W);
        res -= radial_laplacian(W) * Complex(4.0);
        const auto w5 = W.map([](const Complex& z) { return z * z * z * z * z; });
        return std::sqrt(l2_norm_sq(res) / l2_norm_sq(w5));
    });
    add("quadratic_form_iW", 1e-4, 1024, [&](CheckEntry&) {
        const double tail = 0.5 * (gradient_tail(edge) - l6_tail(edge));
        return std::abs(eval_quadratic_form(W * Complex(0.0, 1.0)) + tail) / G;
    });
    add("quadratic_form_W", 1e-2, 1024, [&](CheckEntry&) {
        const double tail = 0.5 * gradient_tail(edge) - 2.5 * l6_tail(edge);
        return std::abs(eval_quadratic_form(W) + tail + 2.0 * G) / (2.0 * G);
    });

    add("modulation_orbit_recovery", 1e-6, 4096, [&](CheckEntry&) {
        FitOptions fo;
        fo.enforce_gate = false;
        const auto f = fit(scaled_state(0.7, 3.0, grid), ref, fo);
        return std::max({std::abs(f.theta - 0.7), std::abs(f.mu / 3.0 - 1.0), f.g_h1_norm});
    });
    add("modulation_reconstruction", 1e-12, 0, [&](CheckEntry&) {
        FitOptions fo;
        fo.enforce_gate = false;
        const auto u = scaled_state(0.7, 3.0, grid);
        const auto back = reconstruct(fit(u, ref, fo));
        double worst = 0.0;
        for (std::size_t j = 0; j < u.size(); ++j) worst = std::max(worst, std::abs(back[j] - u[j]));
        return worst / u.max_abs();
    });
    return rep;
}

// Sweeps.

struct SweepEntry {
    std::string label;
    Shape shape;
    Side side = Side::Below;
    double r_max = 64.0;
    std::size_t n = 4095;
    IntegratorConfig cfg;
    ExperimentOptions options;
};

struct SweepRow {
    std::string label;
    std::string family;
    Side side = Side::Below;
    double r_max = 0.0;
    std::size_t n = 0;
    bool ok = false;
    std::string error;
    double amplitude = std::numeric_limits<double>::quiet_NaN();
    double achieved_energy = std::numeric_limits<double>::quiet_NaN();
    double grad_ratio = std::numeric_limits<double>::quiet_NaN();
    Classification classification = Classification::Undetermined;
    Termination termination = Termination::ReachedT;
    std::optional<double> t_detect;
    bool refinement_confirmed = false;
    double min_delta = std::numeric_limits<double>::quiet_NaN();
    std::size_t window_records = 0;  // records with delta below the modulation gate
    std::size_t trapping_violations = 0;
};

struct SweepResult {
    SweepRow row;
    std::optional<ExperimentResult> result;
};

inline SweepResult run_sweep_entry(const SweepEntry& e, const GroundStateRef& ref) {
    SweepResult out;
    auto& row = out.row;
    row.label = e.label;
    row.family = describe(e.shape);
    row.side = e.side;
    row.r_max = e.r_max;
    row.n = e.n;
    try {
        const RadialGrid grid(e.r_max, e.n);
        auto res = dichotomy_experiment(e.side, e.shape, grid, e.cfg, ref, e.options);
        row.ok = true;
        row.amplitude = res.tuned.amplitude;
        row.achieved_energy = res.tuned.achieved_energy;
        row.grad_ratio = res.tuned.grad_ratio;
        row.classification = res.outcome.classification;
        row.termination = res.log.termination;
        row.t_detect = res.outcome.t_detect;
        row.refinement_confirmed = res.outcome.refinement_confirmed;
        row.trapping_violations = res.trapping_violations;
        const double gate = e.options.gate_fraction * ref.grad_norm_sq;
        for (const auto& r : res.log.records) {
            if (!(row.min_delta <= r.delta)) row.min_delta = r.delta;
            if (r.delta < gate) ++row.window_records;
        }
        out.result = std::move(res);
    } catch (const std::exception& ex) {
        row.ok = false;
        row.error = ex.what();
    }
    return out;
}

/**
 * Run every entry, at most `parallel` at a time (0 = hardware concurrency).
 * Results come back in entry order; a failing entry is reported in its row
 * and does not stop the batch.
 */
inline std::vector<SweepResult> sweep(const std::vector<SweepEntry>& entries, const GroundStateRef& ref,
                                      unsigned parallel = 0) {
    if (entries.empty()) throw InvalidParameter("sweep: empty specification");
    if (parallel == 0) parallel = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepResult> out(entries.size());
    for (std::size_t begin = 0; begin < entries.size(); begin += parallel) {
        const std::size_t end = std::min(entries.size(), begin + parallel);
        std::vector<std::future<SweepResult>> jobs;
        for (std::size_t i = begin; i < end; ++i) {
            jobs.push_back(std::async(std::launch::async, [&, i] { return run_sweep_entry(entries[i], ref); }));
        }
        for (std::size_t i = begin; i < end; ++i) out[i] = jobs[i - begin].get();
    }
    return out;
}

}  // namespace cqnls
