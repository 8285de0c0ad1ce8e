#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/dynamics.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/experiments.hpp"
#include "cqnls/io.hpp"

namespace cqnls::config {

/**
 * Declarative run description, read from an INI file:
 *
 *   [grid]        r_max, n
 *   [integrator]  dt0, t_end, cadence, blowup_factor, adapt, max_steps,
 *                 snapshot_every, boundary_fraction, boundary_tolerance,
 *                 resolution_factor, scheme
 *   [experiment]  family, amplitude, tune, side, mu, rho, sigma, r0, tol,
 *                 target_energy, confirm_fine_grid, virial_radius, gate_fraction
 *   [output]      dir, emit_plots
 *   [sweep]       parallel
 *   [sweep.NAME]  any grid / integrator / experiment key, overriding the base
 *
 * Unknown sections or keys and malformed values raise ConfigError naming the key.
 */
struct ExperimentParams {
    std::string family = "gaussian";  // gaussian | truncated_ground_state | ring
    double amplitude = 1.0;           // used when tune = false
    bool tune = false;                // scale onto the threshold energy first
    Side side = Side::Below;
    double mu = 1.0;
    double rho = 30.0;
    double sigma = 1.0;
    double r0 = 4.0;
    double tol = 1e-10;
    std::optional<double> target_energy;  // empty: E^c(W)
    bool confirm_fine_grid = true;
    double virial_radius = 8.0;
    double gate_fraction = 0.2;

    Shape shape() const {
        if (family == "gaussian") return Gaussian{sigma};
        if (family == "truncated_ground_state") return TruncatedGroundState{mu, rho};
        if (family == "ring") return Ring{r0, sigma};
        throw ConfigError("experiment.family", "unknown family '" + family + "'");
    }

    ExperimentOptions options() const {
        ExperimentOptions o;
        o.tol = tol;
        o.target_energy = target_energy;
        o.confirm_on_fine_grid = confirm_fine_grid;
        o.virial_radius = virial_radius;
        o.gate_fraction = gate_fraction;
        return o;
    }
};

struct RunSettings {
    double r_max = 200.0;
    std::size_t n = 16383;
    IntegratorConfig integrator;
    ExperimentParams experiment;
};

struct SweepSpec {
    std::string label;
    RunSettings settings;
};

struct RunConfig {
    RunSettings base;
    std::string out_dir = "out";
    bool emit_plots = false;
    unsigned sweep_parallel = 0;
    std::vector<SweepSpec> sweep;

    std::vector<SweepEntry> sweep_entries() const {
        std::vector<SweepEntry> out;
        for (const auto& s : sweep) {
            SweepEntry e;
            e.label = s.label;
            e.shape = s.settings.experiment.shape();
            e.side = s.settings.experiment.side;
            e.r_max = s.settings.r_max;
            e.n = s.settings.n;
            e.cfg = s.settings.integrator;
            e.options = s.settings.experiment.options();
            out.push_back(std::move(e));
        }
        return out;
    }
};

namespace detail {

inline std::string trim(std::string s) {
    auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), sp));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), sp).base(), s.end());
    return s;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        const double x = io::parse_double(trim(v));
        if (!std::isfinite(x)) throw ConfigError(key, key + ": value must be finite");
        return x;
    } catch (const io::IoError&) {
        throw ConfigError(key, key + ": expected a number, got '" + v + "'");
    }
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    if (t.empty() || !std::all_of(t.begin(), t.end(), [](unsigned char c) { return std::isdigit(c) != 0; })) {
        throw ConfigError(key, key + ": expected a non-negative integer, got '" + v + "'");
    }
    try {
        return static_cast<std::size_t>(std::stoull(t));
    } catch (const std::exception&) {
        throw ConfigError(key, key + ": integer out of range: '" + v + "'");
    }
}

inline bool to_bool(const std::string& key, const std::string& v) {
    std::string t = trim(v);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(key, key + ": expected true or false, got '" + v + "'");
}

inline bool apply_grid(RunSettings& s, const std::string& key, const std::string& v, const std::string& where) {
    if (key == "r_max") s.r_max = to_double(where, v);
    else if (key == "n") s.n = to_count(where, v);
    else return false;
    return true;
}

inline bool apply_integrator(RunSettings& s, const std::string& key, const std::string& v,
                             const std::string& where) {
    auto& c = s.integrator;
    if (key == "dt0") c.dt0 = to_double(where, v);
    else if (key == "t_end") c.t_end = to_double(where, v);
    else if (key == "cadence") c.cadence = to_count(where, v);
    else if (key == "blowup_factor") c.blowup_factor = to_double(where, v);
    else if (key == "adapt") c.adapt = to_bool(where, v);
    else if (key == "max_steps") c.max_steps = to_count(where, v);
    else if (key == "snapshot_every") c.snapshot_every = to_count(where, v);
    else if (key == "boundary_fraction") c.boundary_fraction = to_double(where, v);
    else if (key == "boundary_tolerance") c.boundary_tolerance = to_double(where, v);
    else if (key == "resolution_factor") c.resolution_factor = to_double(where, v);
    else if (key == "scheme") {
        const auto t = trim(v);
        if (t == "spectral") c.scheme = Derivative::Spectral;
        else if (t == "stencil") c.scheme = Derivative::Stencil;
        else throw ConfigError(where, where + ": expected spectral or stencil, got '" + v + "'");
    } else {
        return false;
    }
    return true;
}

inline bool apply_experiment(RunSettings& s, const std::string& key, const std::string& v,
                             const std::string& where) {
    auto& e = s.experiment;
    if (key == "family") {
        e.family = trim(v);
        if (e.family != "gaussian" && e.family != "truncated_ground_state" && e.family != "ring") {
            throw ConfigError(where, where + ": unknown family '" + v + "'");
        }
    } else if (key == "amplitude") e.amplitude = to_double(where, v);
    else if (key == "tune") e.tune = to_bool(where, v);
    else if (key == "side") {
        const auto t = trim(v);
        if (t == "below") e.side = Side::Below;
        else if (t == "above") e.side = Side::Above;
        else throw ConfigError(where, where + ": expected below or above, got '" + v + "'");
    } else if (key == "mu") e.mu = to_double(where, v);
    else if (key == "rho") e.rho = to_double(where, v);
    else if (key == "sigma") e.sigma = to_double(where, v);
    else if (key == "r0") e.r0 = to_double(where, v);
    else if (key == "tol") e.tol = to_double(where, v);
    else if (key == "target_energy") {
        if (trim(v) == "critical") e.target_energy.reset();
        else e.target_energy = to_double(where, v);
    } else if (key == "confirm_fine_grid") e.confirm_fine_grid = to_bool(where, v);
    else if (key == "virial_radius") e.virial_radius = to_double(where, v);
    else if (key == "gate_fraction") e.gate_fraction = to_double(where, v);
    else return false;
    return true;
}

// Validation errors name "section.key" for the base settings and
// "sweep.NAME.key" inside a sweep section.
inline void check(const RunSettings& s, const std::string& sweep_prefix) {
    auto key = [&](const char* section, const char* name) {
        return sweep_prefix.empty() ? std::string(section) + "." + name : sweep_prefix + name;
    };
    auto fail = [&](const std::string& k, const std::string& what) { throw ConfigError(k, k + ": " + what); };
    if (!(s.r_max > 0.0)) fail(key("grid", "r_max"), "must be positive");
    if (s.n < RadialGrid::min_points) fail(key("grid", "n"), "must be at least 16");
    try {
        s.integrator.validate();
    } catch (const InvalidConfig& ex) {
        const std::string k = sweep_prefix.empty() ? "integrator" : sweep_prefix + "integrator";
        throw ConfigError(k, ex.what());
    }
    const auto& e = s.experiment;
    if (!(e.tol > 0.0)) fail(key("experiment", "tol"), "must be positive");
    if (!(e.gate_fraction > 0.0)) fail(key("experiment", "gate_fraction"), "must be positive");
    if (!(e.virial_radius >= 1.0)) fail(key("experiment", "virial_radius"), "must be >= 1");
    try {
        validate(e.shape());
    } catch (const InvalidParameter& ex) {
        throw ConfigError(key("experiment", "family"), ex.what());
    }
}

}  // namespace detail

/// `section.key=value` with the key after the last dot; sections may contain dots.
struct Override {
    std::string section;
    std::string key;
    std::string value;
};

inline Override parse_override(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(text, "override '" + text + "': expected section.key=value");
    const std::string path = detail::trim(text.substr(0, eq));
    const auto dot = path.rfind('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
        throw ConfigError(path, "override '" + text + "': expected section.key=value");
    }
    return {path.substr(0, dot), path.substr(dot + 1), detail::trim(text.substr(eq + 1))};
}

/// Parse INI text plus overrides (applied on top, in order).
inline RunConfig parse(std::istream& in, const std::vector<std::string>& overrides = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& ex) {
        throw ConfigError("line " + std::to_string(ex.line()), "config: " + ex.message() + " (line " +
                                                                   std::to_string(ex.line()) + ")");
    }
    for (const auto& text : overrides) {
        const auto o = parse_override(text);
        auto it = std::find_if(tree.begin(), tree.end(), [&](const auto& kv) { return kv.first == o.section; });
        if (it == tree.end()) it = tree.push_back({o.section, pt::ptree()});
        it->second.put(pt::ptree::path_type(o.key, '\0'), o.value);
    }

    RunConfig cfg;
    std::vector<std::pair<std::string, const pt::ptree*>> sweeps;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError(section, "config: key '" + section + "' outside any section");
        }
        if (section.rfind("sweep.", 0) == 0) {
            if (section.size() == 6) throw ConfigError(section, "config: empty sweep label");
            sweeps.emplace_back(section.substr(6), &body);
            continue;
        }
        for (const auto& [key, node] : body) {
            const std::string where = section + "." + key;
            const std::string& v = node.data();
            bool known = false;
            if (section == "grid") known = detail::apply_grid(cfg.base, key, v, where);
            else if (section == "integrator") known = detail::apply_integrator(cfg.base, key, v, where);
            else if (section == "experiment") known = detail::apply_experiment(cfg.base, key, v, where);
            else if (section == "output") {
                known = true;
                if (key == "dir") cfg.out_dir = detail::trim(v);
                else if (key == "emit_plots") cfg.emit_plots = detail::to_bool(where, v);
                else known = false;
            } else if (section == "sweep") {
                known = key == "parallel";
                if (known) cfg.sweep_parallel = static_cast<unsigned>(detail::to_count(where, v));
            } else {
                throw ConfigError(section, "config: unknown section [" + section + "]");
            }
            if (!known) throw ConfigError(where, "config: unknown key '" + where + "'");
        }
    }
    detail::check(cfg.base, "");

    for (const auto& [label, body] : sweeps) {
        SweepSpec spec{label, cfg.base};
        for (const auto& [key, node] : *body) {
            const std::string where = "sweep." + label + "." + key;
            const std::string& v = node.data();
            if (!detail::apply_grid(spec.settings, key, v, where) &&
                !detail::apply_integrator(spec.settings, key, v, where) &&
                !detail::apply_experiment(spec.settings, key, v, where)) {
                throw ConfigError(where, "config: unknown key '" + where + "'");
            }
        }
        detail::check(spec.settings, "sweep." + label + ".");
        cfg.sweep.push_back(std::move(spec));
    }
    return cfg;
}

inline RunConfig parse_string(const std::string& text, const std::vector<std::string>& overrides = {}) {
    std::istringstream is(text);
    return parse(is, overrides);
}

inline RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path.string(), "config: cannot open " + path.string());
    return parse(is, overrides);
}

inline io::json to_json(const RunSettings& s) {
    const auto& e = s.experiment;
    return io::json{{"grid", {{"r_max", s.r_max}, {"n", s.n}}},
                    {"integrator", io::to_json(s.integrator)},
                    {"experiment",
                     {{"family", e.family},
                      {"shape", describe(e.shape())},
                      {"amplitude", e.amplitude},
                      {"tune", e.tune},
                      {"side", to_string(e.side)},
                      {"tol", e.tol},
                      {"target_energy", io::number(e.target_energy)},
                      {"confirm_fine_grid", e.confirm_fine_grid},
                      {"virial_radius", e.virial_radius},
                      {"gate_fraction", e.gate_fraction}}}};
}

}  // namespace cqnls::config
