// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Heavy runs (the two dichotomy experiments) are shared
// between criteria 8 to 10.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/cqnls.hpp"

namespace fs = std::filesystem;
using namespace cqnls;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const GroundStateRef& ref() {
    static const GroundStateRef r = reference_constants();
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// 1. Ground-state constants.
Verdict constants() {
    const auto r = reference_constants();
    const double closed = 3.0 * std::sqrt(3.0) * pi * pi / 4.0;
    const double e1 = rel(r.grad_norm_sq, closed);
    const double e2 = rel(r.l6_norm_6, r.grad_norm_sq);
    const double e3 = rel(r.crit_energy, r.grad_norm_sq / 3.0);
    return {std::max({e1, e2, e3}) < 1e-8,
            fmt("grad %.2e, pohozaev %.2e, E^c %.2e (tol 1e-8)", e1, e2, e3)};
}

// 2. Sharp Sobolev ratio.
Verdict sobolev() {
    const RadialGrid g(200.0, 16383);
    const double w = sobolev_ratio(scaled_state(0.0, 1.0, g), ref());
    struct Shape {
        const char* name;
        std::function<double(double)> f;
    };
    const std::vector<Shape> shapes = {
        {"gauss(1)", [](double r) { return std::exp(-r * r); }},
        {"gauss(3)", [](double r) { return std::exp(-r * r / 9.0); }},
        {"ring(5,1)", [](double r) { return std::exp(-(r - 5.0) * (r - 5.0)); }},
        {"sech", [](double r) { return 1.0 / std::cosh(r); }},
        {"(1+r^2)^-1", [](double r) { return 1.0 / (1.0 + r * r); }},
    };
    bool ok = std::abs(w - 1.0) < 1e-2;
    double worst = 0.0;
    for (const auto& s : shapes) {
        const double q = sobolev_ratio(RadialField::sample(g, [&](double r) { return Complex(s.f(r)); }), ref());
        ok = ok && q < 1.0;
        worst = std::max(worst, q);
    }
    return {ok, fmt("W ratio %.6f, largest of 5 other shapes %.6f", w, worst)};
}

// 3. Virial identity along a trajectory: central difference of I_R against F_R.
double virial_residual(double dt) {
    const RadialGrid g(64.0, 4096);
    const auto w = build_weight(8.0);
    auto u = RadialField::sample(g, [](double r) { return Complex(1.2 * std::exp(-r * r)); });
    const auto steps_per_sample = static_cast<long>(std::lround(0.1 / dt));
    double worst = 0.0;
    RadialField prev = u;
    for (int k = 1; k <= 20; ++k) {
        for (long i = 0; i < steps_per_sample; ++i) {
            prev = u;
            u = step(u, dt);
        }
        const double f = F_R(u, w, Derivative::Spectral);
        const double i_minus = I_R(prev, w, Derivative::Spectral);
        const auto next = step(u, dt);
        const double i_plus = I_R(next, w, Derivative::Spectral);
        const double res = std::abs((i_plus - i_minus) / (2.0 * dt) - f) / std::max(std::abs(f), 1.0);
        worst = std::max(worst, res);
    }
    return worst;
}

Verdict virial_identity() {
    const double a = virial_residual(1e-4);
    const double b = virial_residual(5e-5);
    const double ratio = a / b;
    return {a < 1e-3 && ratio >= 3.0 && ratio <= 5.0,
            fmt("max residual %.3e at dt = 1e-4, %.3e at dt/2, ratio %.2f", a, b, ratio)};
}

// 4. F^c_R vanishes on the ground-state orbit.
Verdict virial_zero() {
    const RadialGrid g(80.0, 7999);
    double worst = 0.0;
    for (double theta : {0.0, 1.2}) {
        for (double lam : {1.0, 4.0}) {
            for (double R : {2.0, 8.0, 32.0}) {
                const double v = Fc_R(scaled_state(theta, lam, g), build_weight(R));
                worst = std::max(worst, std::abs(v) / ref().grad_norm_sq);
            }
        }
    }
    return {worst < 1e-5, fmt("max |Fc_R| / ||grad W||^2 = %.3e over 12 cases", worst)};
}

// 5. Conservation over 1e4 steps.
struct Drift {
    double mass = 0.0;
    double energy = 0.0;
};

Drift drift(double dt, std::size_t steps) {
    const RadialGrid g(64.0, 4096);
    const auto u0 = RadialField::sample(g, [](double r) { return Complex(1.2 * std::exp(-r * r)); });
    IntegratorConfig cfg;
    cfg.dt0 = dt;
    cfg.t_end = dt * static_cast<double>(steps);
    cfg.cadence = 100;
    const auto log = simulate(u0, cfg, ref());
    if (log.termination != Termination::ReachedT) throw Error("conservation run stopped: " + log.reason);
    Drift d;
    const auto& a = log.records.front();
    for (const auto& r : log.records) {
        d.mass = std::max(d.mass, rel(r.mass, a.mass));
        d.energy = std::max(d.energy, rel(r.energy, a.energy));
    }
    return d;
}

Verdict conservation() {
    const auto a = drift(1e-4, 10000);
    const auto b = drift(5e-5, 20000);
    const double ratio = a.energy / b.energy;
    return {a.mass < 1e-11 && a.energy < 1e-6 && ratio >= 3.0 && ratio <= 5.0,
            fmt("mass %.2e, energy %.2e, energy ratio under dt/2 %.2f", a.mass, a.energy, ratio)};
}

// 6. Modulation recovery near the orbit.
Verdict modulation() {
    const RadialGrid g(80.0, 7999);
    auto h = [](double r) { return Complex(1.0, 0.5) * std::exp(-(r - 1.0) * (r - 1.0)); };
    auto run = [&](double eps) {
        return fit(scaled_state(0.7, 3.0, g) + RadialField::sample(g, h) * Complex(eps), ref());
    };
    const auto a = run(1e-3);
    const auto b = run(5e-4);
    const double scale = std::sqrt(ref().grad_norm_sq) * a.g_h1_norm;
    const double orth = std::max(std::abs(a.orth_residual_1), std::abs(a.orth_residual_2)) / scale;
    const double th = std::abs(std::remainder(a.theta - 0.7, 2 * pi)) / std::abs(std::remainder(b.theta - 0.7, 2 * pi));
    const double mu = std::abs(a.mu / 3.0 - 1.0) / std::abs(b.mu / 3.0 - 1.0);
    const bool ok = a.converged && b.converged && orth < 1e-8 && std::abs(th - 2.0) < 0.2 && std::abs(mu - 2.0) < 0.2;
    return {ok, fmt("halving ratios theta %.3f, mu %.3f; orthogonality %.2e", th, mu, orth)};
}

// 7. Kernel relations of the linearized operators.
Verdict kernels() {
    const RadialGrid g(80.0, 7999);
    const auto w = scaled_state(0.0, 1.0, g);
    const double scale = std::sqrt(l2_norm_sq(w));
    const double r2 = std::sqrt(l2_norm_sq(apply_L2(w))) / scale;
    const double r1 = std::sqrt(l2_norm_sq(apply_L1(w) - radial_laplacian(w) * Complex(4.0))) / scale;
    return {r2 < 1e-3 && r1 < 1e-3, fmt("L2 W %.2e, L1 W - 4 Delta W %.2e (relative)", r2, r1)};
}

// Shared threshold runs.
struct ThresholdRuns {
    ExperimentResult below;
    ExperimentResult above;
    ExperimentResult near_orbit;
};

const ThresholdRuns& threshold_runs() {
    static const ThresholdRuns runs = [] {
        IntegratorConfig bc;
        bc.dt0 = 1e-3;
        bc.t_end = 6.0;
        bc.cadence = 100;
        bc.snapshot_every = 5;
        auto below = dichotomy_experiment(Side::Below, Gaussian{2.0}, RadialGrid(64.0, 4095), bc, ref());

        IntegratorConfig ac;
        ac.dt0 = 1e-3;
        ac.t_end = 1.0;
        ac.cadence = 10;
        ac.adapt = true;
        ac.snapshot_every = 1;
        auto above = dichotomy_experiment(Side::Above, TruncatedGroundState{1.0, 30.0}, RadialGrid(128.0, 8191), ac,
                                          ref());

        // A sharply concentrated profile just below threshold: its early
        // snapshots sit inside the modulation window.
        IntegratorConfig nc;
        nc.dt0 = 2e-6;
        nc.t_end = 4e-4;
        nc.cadence = 10;
        nc.adapt = true;
        nc.snapshot_every = 1;
        ExperimentOptions no;
        no.virial_radius = 2.0;
        no.confirm_on_fine_grid = false;
        auto near = dichotomy_experiment(Side::Below, TruncatedGroundState{100.0, 2.0}, RadialGrid(8.0, 16383), nc,
                                         ref(), no);
        return ThresholdRuns{std::move(below), std::move(above), std::move(near)};
    }();
    return runs;
}

// 8. Trapping on both sides.
Verdict trapping() {
    const auto& r = threshold_runs();
    const bool ok = !r.below.log.records.empty() && !r.above.log.records.empty() &&
                    r.below.trapping_violations == 0 && r.above.trapping_violations == 0;
    return {ok, fmt("violations: Below %zu of %zu records, Above %zu of %zu records", r.below.trapping_violations,
                    r.below.log.records.size(), r.above.trapping_violations, r.above.log.records.size())};
}

// 9. Dichotomy at the threshold energy.
Verdict dichotomy() {
    const auto& r = threshold_runs();
    const double ec = ref().crit_energy;
    const double eb = rel(r.below.tuned.achieved_energy, ec);
    const double ea = rel(r.above.tuned.achieved_energy, ec);
    const auto& bo = r.below.outcome;
    const auto& ao = r.above.outcome;
    const bool ok = eb < 1e-10 && ea < 1e-10 && bo.classification == Classification::ScatteringProxy &&
                    ao.classification == Classification::Blowup && ao.refinement_confirmed;
    return {ok, fmt("Below Gaussian(2): %s (energy err %.1e); Above TruncatedGroundState(1,30): %s at t = %.4f, "
                    "confirmed %s (energy err %.1e)",
                    to_string(bo.classification), eb, to_string(ao.classification), ao.t_detect.value_or(NAN),
                    ao.refinement_confirmed ? "yes" : "no", ea)};
}

// 10. Report-only diagnostics reach the CSV artifacts with finite values.
Verdict diagnostics() {
    const auto& r = threshold_runs();
    const auto dir = fs::temp_directory_path() / ("cqnls_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    io::write_csv(dir / "virial.csv", io::virial_table(r.above.virial));
    io::write_csv(dir / "modulation.csv", io::modulation_table(r.near_orbit.modulation));
    const auto bni = io::read_csv(dir / "virial.csv").numbers("bni_margin");
    const auto mod = io::read_csv(dir / "modulation.csv");
    const auto modu = mod.numbers("ratio_estimmodu");
    const auto lad = mod.numbers("ratio_estimlad");
    fs::remove_all(dir);

    auto all_finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    const bool ok = !bni.empty() && all_finite(bni) && !modu.empty() && all_finite(modu) && all_finite(lad);
    return {ok, fmt("bni_margin rows %zu (Above); modulation rows %zu (near-orbit Below)", bni.size(), modu.size())};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Verdict (*run)();
    };
    const Criterion criteria[] = {
        {1, "ground-state constants", constants},
        {2, "sharp Sobolev ratio", sobolev},
        {3, "virial identity", virial_identity},
        {4, "Fc_R on the ground-state orbit", virial_zero},
        {5, "conservation", conservation},
        {6, "modulation recovery", modulation},
        {7, "operator kernels", kernels},
        {8, "trapping", trapping},
        {9, "threshold dichotomy", dichotomy},
        {10, "report-only diagnostics", diagnostics},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %2d %-32s %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
        if (!v.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
