#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include <unistd.h>

#include "cqnls/config.hpp"
#include "cqnls/io.hpp"

using namespace cqnls;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("cqnls_io_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

std::string config_error_key(const std::string& text, const std::vector<std::string>& overrides = {}) {
    try {
        config::parse_string(text, overrides);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST(Csv, NumbersRoundTripBitExactly) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(rng) * std::pow(10.0, (i % 40) - 20);
        EXPECT_TRUE(same_bits(io::parse_double(io::format_double(x)), x)) << io::format_double(x);
    }
    EXPECT_TRUE(std::isnan(io::parse_double(io::format_double(std::numeric_limits<double>::quiet_NaN()))));
    EXPECT_EQ(io::parse_double("-inf"), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(io::parse_double("1.5x"), io::IoError);
    EXPECT_THROW(io::parse_double(""), io::IoError);
}

TEST(Csv, RecordsRoundTrip) {
    std::vector<DiagnosticsRecord> recs(3);
    for (std::size_t i = 0; i < recs.size(); ++i) {
        auto& r = recs[i];
        r.t = 0.1 * static_cast<double>(i) + 1e-17;
        r.mass = 1.0 / 3.0;
        r.energy = std::sqrt(2.0);
        r.crit_energy = -1e-300;
        r.grad_norm_sq = 12.82 + static_cast<double>(i);
        r.l4_norm_4 = std::nextafter(1.0, 2.0);
        r.l6_norm_6 = 5e-324;
        r.delta = 0.0;
        r.g_functional = -3.25;
        r.below_threshold = i % 2 == 0;
    }
    const auto dir = scratch_dir("records");
    io::write_csv(dir / "run.csv", io::records_table(recs));
    const auto table = io::read_csv(dir / "run.csv");
    EXPECT_EQ(table.schema, "cqnls.run/1");
    EXPECT_EQ(table.columns.front(), "t");
    EXPECT_EQ(table.columns.back(), "below_threshold");
    const auto back = io::parse_records(table);
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_TRUE(same_bits(back[i].t, recs[i].t));
        EXPECT_TRUE(same_bits(back[i].crit_energy, recs[i].crit_energy));
        EXPECT_TRUE(same_bits(back[i].l4_norm_4, recs[i].l4_norm_4));
        EXPECT_TRUE(same_bits(back[i].l6_norm_6, recs[i].l6_norm_6));
        EXPECT_EQ(back[i].below_threshold, recs[i].below_threshold);
    }
    fs::remove_all(dir);
}

TEST(Csv, RejectsForeignFiles) {
    const auto dir = scratch_dir("foreign");
    {
        std::ofstream os(dir / "x.csv");
        os << "a,b\n1,2\n";
    }
    EXPECT_THROW(io::read_csv(dir / "x.csv"), io::IoError);
    EXPECT_THROW(io::read_csv(dir / "missing.csv"), io::IoError);
    io::CsvTable t{"cqnls.virial/1", {"t"}, {{"0"}}};
    EXPECT_THROW(io::parse_records(t), io::IoError);
    fs::remove_all(dir);
}

TEST(Json, NonFiniteNumbersBecomeNull) {
    EXPECT_TRUE(io::number(std::numeric_limits<double>::quiet_NaN()).is_null());
    EXPECT_TRUE(io::number(std::optional<double>{}).is_null());
    EXPECT_EQ(io::number(1.5).get<double>(), 1.5);
    RunOutcome o;
    o.t_detect = 0.25;
    const auto j = io::to_json(o);
    EXPECT_EQ(j.at("classification"), "Undetermined");
    EXPECT_EQ(j.at("t_detect").get<double>(), 0.25);
    EXPECT_TRUE(j.at("t_detect_half_dt").is_null());
}

TEST(Json, SummaryCarriesVersionAndTimestamp) {
    const auto dir = scratch_dir("summary");
    io::write_summary(dir / "summary.json", io::json{{"command", "test"}});
    const auto j = io::read_json(dir / "summary.json");
    EXPECT_EQ(j.at("command"), "test");
    EXPECT_EQ(j.at("version").get<std::string>().rfind("v", 0), 0u);
    EXPECT_EQ(j.at("generated_at").get<std::string>().size(), 20u);
    fs::remove_all(dir);
}

TEST(Config, DefaultsWithEmptyInput) {
    const auto cfg = config::parse_string("");
    EXPECT_EQ(cfg.base.r_max, 200.0);
    EXPECT_EQ(cfg.base.n, 16383u);
    EXPECT_EQ(cfg.out_dir, "out");
    EXPECT_FALSE(cfg.emit_plots);
    EXPECT_TRUE(cfg.sweep.empty());
    EXPECT_EQ(cfg.base.integrator.scheme, Derivative::Spectral);
}

TEST(Config, ParsesEverySection) {
    const auto cfg = config::parse_string(R"(
[grid]
r_max = 64
n = 4095

[integrator]
dt0 = 2e-4
t_end = 3
cadence = 25
adapt = true
snapshot_every = 2
scheme = stencil

[experiment]
family = truncated_ground_state
mu = 2
rho = 20
tune = yes
side = above
target_energy = 4.0

[output]
dir = results
emit_plots = true

[sweep]
parallel = 2

[sweep.wide]
family = gaussian
sigma = 3
side = below

[sweep.fine]
n = 8191
)");
    EXPECT_EQ(cfg.base.r_max, 64.0);
    EXPECT_EQ(cfg.base.n, 4095u);
    EXPECT_EQ(cfg.base.integrator.dt0, 2e-4);
    EXPECT_EQ(cfg.base.integrator.cadence, 25u);
    EXPECT_TRUE(cfg.base.integrator.adapt);
    EXPECT_EQ(cfg.base.integrator.scheme, Derivative::Stencil);
    EXPECT_TRUE(cfg.base.experiment.tune);
    EXPECT_EQ(cfg.base.experiment.side, Side::Above);
    ASSERT_TRUE(cfg.base.experiment.target_energy.has_value());
    EXPECT_EQ(*cfg.base.experiment.target_energy, 4.0);
    EXPECT_TRUE(std::holds_alternative<TruncatedGroundState>(cfg.base.experiment.shape()));
    EXPECT_EQ(cfg.out_dir, "results");
    EXPECT_TRUE(cfg.emit_plots);
    EXPECT_EQ(cfg.sweep_parallel, 2u);

    ASSERT_EQ(cfg.sweep.size(), 2u);
    const auto entries = cfg.sweep_entries();
    EXPECT_EQ(entries[0].label, "wide");
    EXPECT_EQ(entries[0].side, Side::Below);
    EXPECT_EQ(std::get<Gaussian>(entries[0].shape).sigma, 3.0);
    EXPECT_EQ(entries[0].n, 4095u);
    EXPECT_EQ(entries[1].label, "fine");
    EXPECT_EQ(entries[1].n, 8191u);
    EXPECT_EQ(entries[1].side, Side::Above);
    EXPECT_EQ(entries[1].cfg.dt0, 2e-4);
}

TEST(Config, ErrorsNameTheOffendingKey) {
    EXPECT_EQ(config_error_key("[grid]\nnn = 5\n"), "grid.nn");
    EXPECT_EQ(config_error_key("[grid]\nn = many\n"), "grid.n");
    EXPECT_EQ(config_error_key("[grid]\nn = 8\n"), "grid.n");
    EXPECT_EQ(config_error_key("[sweep.a]\nn = 8\n"), "sweep.a.n");
    EXPECT_EQ(config_error_key("[bogus]\nx = 1\n"), "bogus");
    EXPECT_EQ(config_error_key("[integrator]\nadapt = maybe\n"), "integrator.adapt");
    EXPECT_EQ(config_error_key("[experiment]\nfamily = square\n"), "experiment.family");
    EXPECT_EQ(config_error_key("[experiment]\nside = middle\n"), "experiment.side");
    EXPECT_EQ(config_error_key("[sweep.a]\nwhatever = 1\n"), "sweep.a.whatever");
    EXPECT_EQ(config_error_key("[integrator]\ndt0 = -1\n"), "integrator");
    EXPECT_NE(config_error_key("[grid\nn = 5\n"), "");
}

TEST(Config, OverridesApplyInOrder) {
    const auto cfg = config::parse_string("[grid]\nn = 4095\n", {"grid.n=2047", "integrator.dt0=5e-4",
                                                                  "sweep.x.sigma=2", "grid.n=1023"});
    EXPECT_EQ(cfg.base.n, 1023u);
    EXPECT_EQ(cfg.base.integrator.dt0, 5e-4);
    ASSERT_EQ(cfg.sweep.size(), 1u);
    EXPECT_EQ(cfg.sweep[0].label, "x");
    EXPECT_EQ(std::get<Gaussian>(cfg.sweep[0].settings.experiment.shape()).sigma, 2.0);
    EXPECT_EQ(config_error_key("", {"grid.nope=1"}), "grid.nope");
    EXPECT_THROW(config::parse_override("no-equals"), ConfigError);
    EXPECT_THROW(config::parse_override("nodot=1"), ConfigError);
    const auto o = config::parse_override("sweep.a.b.sigma = 3");
    EXPECT_EQ(o.section, "sweep.a.b");
    EXPECT_EQ(o.key, "sigma");
    EXPECT_EQ(o.value, "3");
}

TEST(Config, TargetEnergyCanBeResetToCritical) {
    const auto cfg = config::parse_string("[experiment]\ntarget_energy = 3\n", {"experiment.target_energy=critical"});
    EXPECT_FALSE(cfg.base.experiment.target_energy.has_value());
}

TEST(Config, JsonEchoIsStable) {
    const auto cfg = config::parse_string("[experiment]\nfamily = ring\nr0 = 5\n");
    const auto j = config::to_json(cfg.base);
    EXPECT_EQ(j.at("experiment").at("shape"), "Ring(r0=5;sigma=1)");
    EXPECT_TRUE(j.at("experiment").at("target_energy").is_null());
    EXPECT_EQ(j.at("grid").at("n").get<std::size_t>(), 16383u);
}
