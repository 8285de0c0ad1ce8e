#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/grid.hpp"
#include "cqnls/ground_state.hpp"

namespace cqnls {

/// Exact flow of i u_t = (|u|^2 - |u|^4) u: a pointwise unimodular rotation.
inline RadialField nonlinear_phase(const RadialField& u, double dt) {
    return u.map([dt](const Complex& z) {
        const double a = std::norm(z);
        return z * std::polar(1.0, -dt * (a - a * a));
    });
}

/// One Strang step: half nonlinear phase, full linear propagator, half nonlinear phase.
inline RadialField step(const RadialField& u, double dt) {
    return nonlinear_phase(apply_linear_propagator(nonlinear_phase(u, 0.5 * dt), dt), 0.5 * dt);
}

struct IntegratorConfig {
    double dt0 = 1e-3;
    double t_end = 1.0;
    std::size_t cadence = 10;          // steps per record
    double blowup_factor = 3.0;        // bar on ||grad u|| / ||grad W||
    bool adapt = false;
    std::size_t max_steps = 10'000'000;
    std::size_t snapshot_every = 0;    // records per stored snapshot; 0 stores none
    double boundary_fraction = 0.05;   // outermost share of nodes watched for mass
    double boundary_tolerance = 1e-10; // allowed share of the mass there
    double resolution_factor = 0.2;    // UnderResolved once mu estimate > factor / dr
    Derivative scheme = Derivative::Spectral;

    void validate() const {
        if (!(dt0 > 0.0) || !std::isfinite(dt0)) throw InvalidConfig("integrator: dt0 must be > 0");
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidConfig("integrator: t_end must be > 0");
        if (!(blowup_factor > 1.0)) throw InvalidConfig("integrator: blowup_factor must be > 1");
        if (cadence == 0) throw InvalidConfig("integrator: cadence must be >= 1");
        if (max_steps == 0) throw InvalidConfig("integrator: max_steps must be >= 1");
        if (!(boundary_fraction > 0.0 && boundary_fraction < 1.0)) {
            throw InvalidConfig("integrator: boundary_fraction must lie in (0, 1)");
        }
        if (!(resolution_factor > 0.0)) throw InvalidConfig("integrator: resolution_factor must be > 0");
    }

    /// Amplitude-based step: dt0 / (1 + 10 dt0 max|u|^4).
    double adapted_dt(const RadialField& u) const {
        if (!adapt) return dt0;
        const double m = u.max_abs();
        const double m4 = m * m * m * m;
        return dt0 / (1.0 + m4 * dt0 * 10.0);
    }
};

enum class Termination { ReachedT, BlowupDetected, UnderResolved, BoundaryContaminated };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::ReachedT: return "ReachedT";
        case Termination::BlowupDetected: return "BlowupDetected";
        case Termination::UnderResolved: return "UnderResolved";
        case Termination::BoundaryContaminated: return "BoundaryContaminated";
    }
    return "?";
}

struct Snapshot {
    double t;
    RadialField field;
};

struct TrajectoryLog {
    std::vector<DiagnosticsRecord> records;
    std::vector<Snapshot> snapshots;
    std::vector<std::pair<double, double>> dt_history;  // (t, dt) at every change
    Termination termination = Termination::ReachedT;
    std::string reason;
    std::size_t steps = 0;
    std::optional<double> t_detect;  // time the blowup bar was crossed
};

/**
 * Integrate from u0 until t_end or a termination trigger.
 *
 * Records every `cadence` steps (plus the final state). The blowup bar
 * ||grad u||^2 >= blowup_factor^2 ||grad W||^2 is checked after every step and
 * the crossing state is always recorded. Boundary contamination and the
 * under-resolution bar are checked at record times; with `adapt` the step is
 * recomputed there as well.
 */
inline TrajectoryLog simulate(const RadialField& u0, const IntegratorConfig& cfg,
                              const GroundStateRef& ref) {
    cfg.validate();
    if (!u0.is_finite()) throw InvalidParameter("simulate: initial field is not finite");

    TrajectoryLog log;
    const double bar = cfg.blowup_factor * cfg.blowup_factor * ref.grad_norm_sq;
    const double dr = u0.grid().dr();
    RadialField u = u0;
    double t = 0.0;
    std::size_t since_record = 0;

    auto record = [&](bool force_snapshot) {
        log.records.push_back(diagnose(u, t, ref, cfg.scheme));
        const std::size_t idx = log.records.size() - 1;
        if (cfg.snapshot_every > 0 && (force_snapshot || idx % cfg.snapshot_every == 0)) {
            log.snapshots.push_back({t, u});
        }
    };

    record(false);
    double dt = cfg.adapted_dt(u);
    log.dt_history.emplace_back(0.0, dt);
    if (log.records.back().grad_norm_sq >= bar) {
        log.termination = Termination::BlowupDetected;
        log.t_detect = 0.0;
        return log;
    }

    const double t_stop = cfg.t_end * (1.0 - 1e-14);
    while (t < t_stop) {
        if (log.steps >= cfg.max_steps) {
            log.termination = Termination::UnderResolved;
            log.reason = "max_steps exhausted";
            break;
        }
        const double h = std::min(dt, cfg.t_end - t);
        RadialField next = step(u, h);
        if (!next.is_finite()) {
            log.termination = Termination::UnderResolved;
            log.reason = "non-finite field";
            break;
        }
        u = std::move(next);
        t += h;
        ++log.steps;
        ++since_record;

        if (grad_norm_sq(u, cfg.scheme) >= bar) {
            record(true);
            log.termination = Termination::BlowupDetected;
            log.t_detect = t;
            return log;
        }
        if (since_record < cfg.cadence && t < t_stop) continue;

        since_record = 0;
        record(t >= t_stop);
        if (outer_mass_fraction(u, cfg.boundary_fraction) > cfg.boundary_tolerance) {
            log.termination = Termination::BoundaryContaminated;
            log.reason = "mass reached the outer nodes";
            break;
        }
        if (const auto mu = modulation_scale_estimate(u, cfg.scheme);
            mu && *mu > cfg.resolution_factor / dr) {
            log.termination = Termination::UnderResolved;
            log.reason = "concentration below grid resolution";
            break;
        }
        if (cfg.adapt) {
            const double next_dt = cfg.adapted_dt(u);
            if (next_dt != dt) {
                dt = next_dt;
                log.dt_history.emplace_back(t, dt);
            }
        }
    }
    if (since_record > 0 && log.records.back().t < t) record(true);
    return log;
}

enum class Classification { Blowup, ScatteringProxy, Undetermined };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::Blowup: return "Blowup";
        case Classification::ScatteringProxy: return "ScatteringProxy";
        case Classification::Undetermined: return "Undetermined";
    }
    return "?";
}

struct RunOutcome {
    Classification classification = Classification::Undetermined;
    std::optional<double> t_detect;
    double achieved_energy = 0.0;
    double achieved_grad_ratio = 0.0;  // ||grad u0|| / ||grad W||
    bool refinement_confirmed = false;
    std::optional<double> t_detect_half_dt;
    std::optional<double> t_detect_fine_grid;
};

/// Allowed growth of t_detect under refinement.
inline constexpr double refinement_slack = 0.05;

/**
 * Classify a finished log.
 *
 * Blowup: the bar was crossed and the dt/2 rerun crossed it no later than
 * t_detect (1 + refinement_slack). ScatteringProxy: the run reached t_end,
 * final ||u||_4^4 is below 20% of the initial value, ||u||_4^4 does not increase
 * over the last quarter of records, and G[u] > 0 at every record. This is a
 * finite-time proxy, not a proof of scattering.
 */
inline RunOutcome classify(const TrajectoryLog& log, const GroundStateRef& ref,
                           std::optional<double> t_detect_half_dt) {
    RunOutcome out;
    if (log.records.empty()) return out;
    const auto& first = log.records.front();
    out.achieved_energy = first.energy;
    out.achieved_grad_ratio = std::sqrt(first.grad_norm_sq / ref.grad_norm_sq);
    out.t_detect = log.t_detect;
    out.t_detect_half_dt = t_detect_half_dt;

    if (log.termination == Termination::BlowupDetected) {
        if (log.t_detect && t_detect_half_dt &&
            *t_detect_half_dt <= *log.t_detect * (1.0 + refinement_slack)) {
            out.classification = Classification::Blowup;
            out.refinement_confirmed = true;
        }
        return out;
    }
    if (log.termination != Termination::ReachedT) return out;

    const double l4_0 = first.l4_norm_4;
    if (!(l4_0 > 0.0)) return out;
    const auto& last = log.records.back();
    if (!(last.l4_norm_4 < 0.2 * l4_0)) return out;
    const std::size_t n = log.records.size();
    const std::size_t tail = (3 * n) / 4;
    for (std::size_t i = tail + 1; i < n; ++i) {
        if (log.records[i].l4_norm_4 > log.records[i - 1].l4_norm_4 * (1.0 + 1e-12)) return out;
    }
    for (const auto& r : log.records) {
        if (!(r.g_functional > 0.0)) return out;
    }
    out.classification = Classification::ScatteringProxy;
    return out;
}

/// classify() with the built-in dt/2 confirmation rerun when the bar was crossed.
inline RunOutcome detect_outcome(const RadialField& u0, const TrajectoryLog& log,
                                 const IntegratorConfig& cfg, const GroundStateRef& ref) {
    std::optional<double> half;
    if (log.termination == Termination::BlowupDetected) {
        IntegratorConfig fine = cfg;
        fine.dt0 = 0.5 * cfg.dt0;
        fine.cadence = 2 * cfg.cadence;
        fine.max_steps = 2 * cfg.max_steps;
        fine.snapshot_every = 0;
        const auto rerun = simulate(u0, fine, ref);
        if (rerun.termination == Termination::BlowupDetected) half = rerun.t_detect;
    }
    return classify(log, ref, half);
}

}  // namespace cqnls
