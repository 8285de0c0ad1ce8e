#pragma once

#include <json.hpp>

#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cqnls/dynamics.hpp"
#include "cqnls/errors.hpp"
#include "cqnls/experiments.hpp"
#include "cqnls/functionals.hpp"
#include "cqnls/modulation.hpp"

#ifndef CQNLS_VERSION_STRING
#define CQNLS_VERSION_STRING "v0.1.0-unknown"
#endif

namespace cqnls::io {

using nlohmann::json;

inline constexpr const char* version = CQNLS_VERSION_STRING;

class IoError : public Error {
public:
    using Error::Error;
};

/// Shortest text that reads back to the same double; NaN and infinities as nan/inf/-inf.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    // strtod rather than stod: subnormals set ERANGE but are valid values.
    if (s.empty() || std::isspace(static_cast<unsigned char>(s.front()))) throw IoError("not a number: '" + s + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw IoError("not a number: '" + s + "'");
    if (end != s.c_str() + s.size()) throw IoError("trailing characters in number: '" + s + "'");
    if (errno == ERANGE && std::isinf(v)) throw IoError("number out of range: '" + s + "'");
    return v;
}

/// Column-oriented CSV with a leading "# schema: <name>/<version>" line.
struct CsvTable {
    std::string schema;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        throw IoError("csv: no column '" + name + "'");
    }

    std::vector<double> numbers(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(parse_double(r.at(c)));
        return out;
    }
};

inline void write_csv(const std::filesystem::path& path, const CsvTable& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << "# schema: " << t.schema << '\n';
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path.string());
}

/// Reader for our own CSV output (no quoting: no field ever contains a comma).
inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ss(s);
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        if (!s.empty() && s.back() == ',') out.emplace_back();
        return out;
    };
    if (!std::getline(is, line) || line.rfind("# schema: ", 0) != 0) {
        throw IoError(path.string() + ": missing schema header");
    }
    t.schema = line.substr(10);
    if (!std::getline(is, line)) throw IoError(path.string() + ": missing column header");
    t.columns = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto r = split(line);
        if (r.size() != t.columns.size()) throw IoError(path.string() + ": ragged row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline std::string opt_number(const std::optional<double>& x) {
    return x ? format_double(*x) : std::string("nan");
}

inline CsvTable records_table(const std::vector<DiagnosticsRecord>& records) {
    CsvTable t;
    t.schema = "cqnls.run/1";
    t.columns = {"t", "mass", "energy", "crit_energy", "grad_norm_sq", "l4_norm_4",
                 "l6_norm_6", "delta", "g_functional", "below_threshold"};
    for (const auto& r : records) {
        t.rows.push_back({format_double(r.t), format_double(r.mass), format_double(r.energy),
                          format_double(r.crit_energy), format_double(r.grad_norm_sq), format_double(r.l4_norm_4),
                          format_double(r.l6_norm_6), format_double(r.delta), format_double(r.g_functional),
                          r.below_threshold ? "1" : "0"});
    }
    return t;
}

inline std::vector<DiagnosticsRecord> parse_records(const CsvTable& t) {
    if (t.schema != "cqnls.run/1") throw IoError("unexpected schema " + t.schema);
    std::vector<DiagnosticsRecord> out(t.rows.size());
    const auto cols = std::vector<std::string>{"t", "mass", "energy", "crit_energy", "grad_norm_sq",
                                               "l4_norm_4", "l6_norm_6", "delta", "g_functional"};
    std::vector<std::vector<double>> v;
    for (const auto& c : cols) v.push_back(t.numbers(c));
    const std::size_t below = t.column("below_threshold");
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& r = out[i];
        r.t = v[0][i];
        r.mass = v[1][i];
        r.energy = v[2][i];
        r.crit_energy = v[3][i];
        r.grad_norm_sq = v[4][i];
        r.l4_norm_4 = v[5][i];
        r.l6_norm_6 = v[6][i];
        r.delta = v[7][i];
        r.g_functional = v[8][i];
        r.below_threshold = t.rows[i][below] == "1";
    }
    return out;
}

inline CsvTable virial_table(const std::vector<VirialSample>& samples) {
    CsvTable t;
    t.schema = "cqnls.virial/1";
    t.columns = {"t", "I_R", "F_R", "Fc_inf", "delta", "bni_margin", "localized_mass", "V_R"};
    for (const auto& s : samples) {
        t.rows.push_back({format_double(s.t), format_double(s.I_R), format_double(s.F_R), format_double(s.Fc_inf),
                          format_double(s.delta), format_double(s.bni_margin), format_double(s.localized_mass),
                          format_double(s.V_R)});
    }
    return t;
}

inline CsvTable modulation_table(const std::vector<ModulationSample>& samples) {
    CsvTable t;
    t.schema = "cqnls.modulation/1";
    t.columns = {"t", "theta", "mu", "delta", "g_h1", "mu_rate", "ratio_estimmodu", "ratio_estimlad", "converged"};
    for (const auto& s : samples) {
        t.rows.push_back({format_double(s.t), format_double(s.theta), format_double(s.mu), format_double(s.delta),
                          format_double(s.g_h1), format_double(s.mu_rate), format_double(s.ratio_estimmodu),
                          format_double(s.ratio_estimlad), s.converged ? "1" : "0"});
    }
    return t;
}

inline CsvTable profile_table(const RadialField& u) {
    CsvTable t;
    t.schema = "cqnls.profile/1";
    t.columns = {"r", "re", "im"};
    const auto r = u.grid().nodes();
    for (std::size_t j = 0; j < u.size(); ++j) {
        t.rows.push_back({format_double(r[j]), format_double(u[j].real()), format_double(u[j].imag())});
    }
    return t;
}

inline CsvTable sweep_table(const std::vector<SweepResult>& results) {
    CsvTable t;
    t.schema = "cqnls.sweep/1";
    t.columns = {"label", "family", "side", "r_max", "n", "status", "amplitude", "achieved_energy",
                 "grad_ratio", "classification", "termination", "t_detect", "refinement_confirmed",
                 "min_delta", "window_records", "trapping_violations"};
    for (const auto& res : results) {
        const auto& r = res.row;
        t.rows.push_back({r.label, r.family, to_string(r.side), format_double(r.r_max), std::to_string(r.n),
                          r.ok ? "ok" : "error", format_double(r.amplitude), format_double(r.achieved_energy),
                          format_double(r.grad_ratio), r.ok ? to_string(r.classification) : "none",
                          r.ok ? to_string(r.termination) : "none", opt_number(r.t_detect),
                          r.refinement_confirmed ? "1" : "0", format_double(r.min_delta),
                          std::to_string(r.window_records), std::to_string(r.trapping_violations)});
    }
    return t;
}

inline CsvTable verify_table(const VerifyReport& rep) {
    CsvTable t;
    t.schema = "cqnls.verify/1";
    t.columns = {"check", "status", "residual", "tolerance", "min_n"};
    for (const auto& e : rep.entries) {
        t.rows.push_back({e.name, to_string(e.status), format_double(e.residual), format_double(e.tolerance),
                          std::to_string(e.min_n)});
    }
    return t;
}

/// JSON numbers cannot hold NaN; those become null.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
inline json number(const std::optional<double>& x) { return x ? number(*x) : json(nullptr); }

inline json to_json(const RunOutcome& o) {
    return json{{"classification", to_string(o.classification)},
                {"classification_is_proxy", o.classification == Classification::ScatteringProxy},
                {"t_detect", number(o.t_detect)},
                {"t_detect_half_dt", number(o.t_detect_half_dt)},
                {"t_detect_fine_grid", number(o.t_detect_fine_grid)},
                {"achieved_energy", number(o.achieved_energy)},
                {"achieved_grad_ratio", number(o.achieved_grad_ratio)},
                {"refinement_confirmed", o.refinement_confirmed}};
}

inline json to_json(const IntegratorConfig& c) {
    return json{{"dt0", c.dt0},
                {"t_end", c.t_end},
                {"cadence", c.cadence},
                {"blowup_factor", c.blowup_factor},
                {"adapt", c.adapt},
                {"max_steps", c.max_steps},
                {"snapshot_every", c.snapshot_every},
                {"boundary_fraction", c.boundary_fraction},
                {"boundary_tolerance", c.boundary_tolerance},
                {"resolution_factor", c.resolution_factor},
                {"scheme", c.scheme == Derivative::Spectral ? "spectral" : "stencil"}};
}

inline json to_json(const TrajectoryLog& log) {
    json dt = json::array();
    for (const auto& [t, h] : log.dt_history) dt.push_back({number(t), number(h)});
    return json{{"termination", to_string(log.termination)},
                {"reason", log.reason},
                {"steps", log.steps},
                {"records", log.records.size()},
                {"snapshots", log.snapshots.size()},
                {"t_final", log.records.empty() ? json(nullptr) : number(log.records.back().t)},
                {"t_detect", number(log.t_detect)},
                {"dt_history", dt}};
}

inline json to_json(const GroundStateRef& r) {
    return json{{"grad_norm_sq", r.grad_norm_sq},
                {"l6_norm_6", r.l6_norm_6},
                {"crit_energy", r.crit_energy},
                {"c_gn", r.c_gn},
                {"quadrature_error_bound", r.quadrature_error_bound}};
}

inline json to_json(const VerifyReport& rep) {
    json entries = json::array();
    for (const auto& e : rep.entries) {
        entries.push_back({{"check", e.name},
                           {"status", to_string(e.status)},
                           {"residual", number(e.residual)},
                           {"tolerance", number(e.tolerance)},
                           {"min_n", e.min_n},
                           {"note", e.note}});
    }
    return json{{"passed", rep.passed()}, {"failures", rep.failures()}, {"entries", entries}};
}

/// UTC wall-clock time; the only nondeterministic value in any artifact.
inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Writes `body` with the version and a "generated_at" timestamp added.
inline void write_summary(const std::filesystem::path& path, json body) {
    body["version"] = version;
    body["generated_at"] = utc_timestamp();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << body.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return json::parse(is);
}

/// gnuplot script over the run's CSVs, referenced by relative path.
inline void write_plot_script(const std::filesystem::path& dir, bool has_virial, bool has_modulation) {
    std::ofstream os(dir / "plot.gp", std::ios::binary);
    if (!os) throw IoError("cannot write plot script in " + dir.string());
    os << "# gnuplot -p plot.gp\n"
          "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set xlabel 't'\n"
          "set multiplot layout 2,2\n"
          "plot 'run.csv' using 1:5 with lines title '||grad u||^2'\n"
          "plot 'run.csv' using 1:6 with lines title '||u||_4^4'\n"
          "plot 'run.csv' using 1:3 with lines title 'E'\n";
    if (has_virial) os << "plot 'virial.csv' using 1:6 with linespoints title 'F_R + 14 delta'\n";
    if (has_modulation) os << "plot 'modulation.csv' using 1:3 with linespoints title 'mu'\n";
    os << "unset multiplot\n";
}

}  // namespace cqnls::io
