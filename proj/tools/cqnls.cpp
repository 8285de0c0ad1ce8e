// Command-line front end: verify | simulate | tune | sweep.
//
// Exit codes: 0 success, 1 identity failure or run error, 2 configuration
// error, 3 sweep finished with failed entries.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cqnls/cqnls.hpp"

namespace fs = std::filesystem;
using cqnls::io::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_failure = 1;
constexpr int exit_config = 2;
constexpr int exit_partial = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> overrides;
};

cqnls::config::RunConfig load_config(const CommonArgs& a) {
    auto cfg = a.config_path.empty() ? cqnls::config::parse_string("", a.overrides)
                                     : cqnls::config::load(a.config_path, a.overrides);
    if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
    return cfg;
}

fs::path prepare_dir(const fs::path& dir) {
    fs::create_directories(dir);
    return dir;
}

struct RunArtifacts {
    const cqnls::TrajectoryLog& log;
    const cqnls::RunOutcome& outcome;
    const std::vector<cqnls::VirialSample>& virial;
    const std::vector<cqnls::ModulationSample>& modulation;
};

json write_run(const fs::path& dir, const RunArtifacts& run, bool emit_plots) {
    namespace io = cqnls::io;
    io::write_csv(dir / "run.csv", io::records_table(run.log.records));
    io::write_csv(dir / "virial.csv", io::virial_table(run.virial));
    io::write_csv(dir / "modulation.csv", io::modulation_table(run.modulation));
    json files = {"run.csv", "virial.csv", "modulation.csv"};
    if (emit_plots) {
        io::write_plot_script(dir, !run.virial.empty(), !run.modulation.empty());
        files.push_back("plot.gp");
    }
    return json{{"trajectory", io::to_json(run.log)}, {"outcome", io::to_json(run.outcome)}, {"artifacts", files}};
}

int cmd_verify(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const cqnls::RadialGrid grid(cfg.base.r_max, cfg.base.n);
    const auto ref = cqnls::reference_constants();
    const auto rep = cqnls::verify_identities(grid, ref);

    std::printf("%-36s %-10s %12s %10s\n", "check", "status", "residual", "tolerance");
    for (const auto& e : rep.entries) {
        std::printf("%-36s %-10s %12.3e %10.1e", e.name.c_str(), cqnls::to_string(e.status), e.residual,
                    e.tolerance);
        if (e.status == cqnls::CheckStatus::Fail && cfg.base.n < e.min_n) {
            std::printf("  (needs n >= %zu)", e.min_n);
        }
        if (!e.note.empty() && e.status != cqnls::CheckStatus::Pass) std::printf("  %s", e.note.c_str());
        std::printf("\n");
    }
    std::printf("%s: %zu failure(s) on r_max = %g, n = %zu\n", rep.passed() ? "PASS" : "FAIL", rep.failures(),
                cfg.base.r_max, cfg.base.n);

    const auto dir = prepare_dir(cfg.out_dir);
    cqnls::io::write_csv(dir / "verify.csv", cqnls::io::verify_table(rep));
    cqnls::io::write_summary(dir / "summary.json", json{{"command", "verify"},
                                                        {"config", cqnls::config::to_json(cfg.base)},
                                                        {"reference", cqnls::io::to_json(ref)},
                                                        {"report", cqnls::io::to_json(rep)}});
    return rep.passed() ? exit_ok : exit_failure;
}

json tuned_json(const cqnls::TunedData& t, double target) {
    namespace io = cqnls::io;
    return json{{"amplitude", t.amplitude},
                {"roots", t.roots},
                {"achieved_energy", io::number(t.achieved_energy)},
                {"target_energy", target},
                {"relative_energy_error", io::number(std::abs(t.achieved_energy - target) / std::abs(target))},
                {"grad_ratio", io::number(t.grad_ratio)}};
}

int cmd_simulate(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto& s = cfg.base;
    const cqnls::RadialGrid grid(s.r_max, s.n);
    const auto ref = cqnls::reference_constants();
    const auto dir = prepare_dir(cfg.out_dir);
    const auto shape = s.experiment.shape();
    json summary{{"command", "simulate"}, {"config", cqnls::config::to_json(s)},
                 {"reference", cqnls::io::to_json(ref)}};

    std::string classification, termination;
    if (s.experiment.tune) {
        const auto res =
            cqnls::dichotomy_experiment(s.experiment.side, shape, grid, s.integrator, ref, s.experiment.options());
        summary.update(write_run(dir, {res.log, res.outcome, res.virial, res.modulation}, cfg.emit_plots));
        summary["tuned"] = tuned_json(res.tuned, s.experiment.target_energy.value_or(ref.crit_energy));
        summary["trapping_violations"] = res.trapping_violations;
        classification = cqnls::to_string(res.outcome.classification);
        termination = cqnls::to_string(res.log.termination);
    } else {
        const auto u0 = cqnls::sample_family({shape, s.experiment.amplitude}, grid);
        const auto log = cqnls::simulate(u0, s.integrator, ref);
        const auto outcome = cqnls::detect_outcome(u0, log, s.integrator, ref);
        const double R = std::max(1.0, std::min(s.experiment.virial_radius, 0.5 * s.r_max));
        const auto virial = cqnls::virial_series(log.snapshots, cqnls::build_weight(R), ref, s.integrator.scheme);
        const auto modulation = cqnls::track_modulation(log, ref, s.experiment.gate_fraction);
        summary.update(write_run(dir, {log, outcome, virial, modulation}, cfg.emit_plots));
        classification = cqnls::to_string(outcome.classification);
        termination = cqnls::to_string(log.termination);
    }
    cqnls::io::write_summary(dir / "summary.json", summary);
    std::printf("termination: %s\nclassification: %s\nartifacts: %s\n", termination.c_str(), classification.c_str(),
                dir.string().c_str());
    return exit_ok;
}

int cmd_tune(const CommonArgs& args) {
    const auto cfg = load_config(args);
    const auto& s = cfg.base;
    const cqnls::RadialGrid grid(s.r_max, s.n);
    const auto ref = cqnls::reference_constants();
    const auto dir = prepare_dir(cfg.out_dir);
    const double target = s.experiment.target_energy.value_or(ref.crit_energy);
    const auto shape = s.experiment.shape();
    json summary{{"command", "tune"}, {"config", cqnls::config::to_json(s)}, {"reference", cqnls::io::to_json(ref)}};
    try {
        const auto t = cqnls::tune_to_threshold(shape, s.experiment.side, ref, grid, s.experiment.tol,
                                                s.experiment.target_energy, s.integrator.scheme);
        cqnls::io::write_csv(dir / "initial.csv", cqnls::io::profile_table(t.field));
        summary["status"] = "ok";
        summary["tuned"] = tuned_json(t, target);
        summary["artifacts"] = {"initial.csv"};
        cqnls::io::write_summary(dir / "summary.json", summary);
        std::printf("amplitude: %.17g\nachieved_energy: %.17g (target %.17g)\ngrad_ratio: %.6f\n", t.amplitude,
                    t.achieved_energy, target, t.grad_ratio);
        return exit_ok;
    } catch (const cqnls::Infeasible& ex) {
        summary["status"] = "infeasible";
        summary["error"] = ex.what();
        summary["roots"] = ex.amplitudes();
        cqnls::io::write_summary(dir / "summary.json", summary);
        std::fprintf(stderr, "%s\n", ex.what());
        return exit_failure;
    }
}

int cmd_sweep(const CommonArgs& args) {
    const auto cfg = load_config(args);
    if (cfg.sweep.empty()) throw cqnls::ConfigError("sweep", "config: no [sweep.NAME] sections");
    const auto ref = cqnls::reference_constants();
    const auto dir = prepare_dir(cfg.out_dir);
    const auto results = cqnls::sweep(cfg.sweep_entries(), ref, cfg.sweep_parallel);

    json runs = json::array();
    bool any_failed = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& spec = cfg.sweep[i];
        json entry{{"label", r.row.label}, {"config", cqnls::config::to_json(spec.settings)}};
        if (r.result) {
            const auto sub = prepare_dir(dir / r.row.label);
            const auto& res = *r.result;
            json run{{"command", "sweep"}, {"label", r.row.label}, {"config", entry["config"]}};
            run.update(write_run(sub, {res.log, res.outcome, res.virial, res.modulation}, cfg.emit_plots));
            run["tuned"] =
                tuned_json(res.tuned, spec.settings.experiment.target_energy.value_or(ref.crit_energy));
            run["trapping_violations"] = res.trapping_violations;
            cqnls::io::write_summary(sub / "summary.json", run);
            entry["status"] = "ok";
            entry["classification"] = cqnls::to_string(res.outcome.classification);
        } else {
            any_failed = true;
            entry["status"] = "error";
            entry["error"] = r.row.error;
        }
        runs.push_back(entry);
        std::printf("%-20s %-8s %s\n", r.row.label.c_str(), r.row.ok ? "ok" : "error",
                    r.row.ok ? cqnls::to_string(r.row.classification) : r.row.error.c_str());
    }
    cqnls::io::write_csv(dir / "sweep.csv", cqnls::io::sweep_table(results));
    cqnls::io::write_summary(dir / "summary.json",
                             json{{"command", "sweep"}, {"reference", cqnls::io::to_json(ref)}, {"runs", runs}});
    return any_failed ? exit_partial : exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Radial cubic-quintic NLS toolkit"};
    app.set_version_flag("--version", std::string(cqnls::io::version));
    app.require_subcommand(1);

    CommonArgs args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", args.config_path, "INI configuration file (defaults apply when omitted)")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", args.out_dir, "Output directory (overrides output.dir)");
        sub->add_option("--override", args.overrides, "section.key=value, repeatable")->take_all();
    };
    auto* verify = app.add_subcommand("verify", "Run the identity battery");
    auto* simulate = app.add_subcommand("simulate", "Simulate one trajectory");
    auto* tune = app.add_subcommand("tune", "Scale the configured family onto the threshold energy");
    auto* sweep = app.add_subcommand("sweep", "Run every [sweep.NAME] entry");
    for (auto* sub : {verify, simulate, tune, sweep}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*verify) return cmd_verify(args);
        if (*simulate) return cmd_simulate(args);
        if (*tune) return cmd_tune(args);
        return cmd_sweep(args);
    } catch (const cqnls::ConfigError& e) {
        std::fprintf(stderr, "config error [%s]: %s\n", e.key().c_str(), e.what());
        return exit_config;
    } catch (const cqnls::InvalidConfig& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_failure;
    }
}
