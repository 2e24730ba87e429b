#include "mutum/errors.hpp"
#include "mutum/harness.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mutum;
using namespace mutum::harness;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("mutum_harness_" + name);
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig sweep_config(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::VelocitySweep;
    cfg.designs = {robot::DesignKind::TP, robot::DesignKind::EP};
    cfg.payloads = {PayloadVariant::Empty, PayloadVariant::Filled};
    cfg.frequencies = {2.0, 5.0};
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST(Harness, SameSeedSameBytes) {
    auto a = sweep_config(7);
    auto b = sweep_config(7);
    a.output_dir = scratch_dir("a");
    b.output_dir = scratch_dir("b");
    const auto ra = run_velocity_sweep(a);
    const auto rb = run_velocity_sweep(b);
    EXPECT_EQ(ra.csv, rb.csv);
    EXPECT_EQ(read_file(a.output_dir / "velocity_sweep.csv"), read_file(b.output_dir / "velocity_sweep.csv"));
    EXPECT_EQ(read_file(a.output_dir / "velocity_trials.csv"), read_file(b.output_dir / "velocity_trials.csv"));
    EXPECT_NE(run_velocity_sweep(sweep_config(8)).csv, ra.csv);
}

TEST(Harness, WritesConfigSidecar) {
    auto cfg = sweep_config(3);
    cfg.output_dir = scratch_dir("sidecar");
    run_velocity_sweep(cfg);
    const auto j = nlohmann::json::parse(read_file(cfg.output_dir / "config.json"));
    EXPECT_EQ(j.at("experiment"), "velocity-sweep");
    EXPECT_EQ(j.at("seed"), 3);
    EXPECT_TRUE(j.contains("scene"));
    EXPECT_EQ(j.at("frequencies_hz"), nlohmann::json({2.0, 5.0}));
    EXPECT_EQ(j.at("scene").at("name"), "flat_dry");
}

TEST(Harness, VelocitySweepShape) {
    const auto r = run_velocity_sweep(sweep_config(1));
    ASSERT_EQ(r.rows.size(), 2u * 2u * 2u);
    std::istringstream in(r.csv);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "env,scene,design,payload,freq_hz,v_mean,v_min,v_max");
    for (const auto& row : r.rows) {
        EXPECT_EQ(row.env, Environment::Dry);
        EXPECT_GT(row.panel.mean, 0.0);
        EXPECT_LE(row.panel.max, 8.8e-3 * row.panel.frequency);
    }
}

TEST(Harness, RejectsUnsupportedFrequency) {
    auto cfg = sweep_config(0);
    cfg.frequencies = {2.0, 6.0};
    EXPECT_THROW(cfg.validate(), ValidationError);
    EXPECT_THROW(run_velocity_sweep(cfg), ValidationError);
    cfg.frequencies = {2.5};
    EXPECT_THROW(cfg.validate(), ValidationError);
    cfg.frequencies = {4.0};
    EXPECT_NO_THROW(cfg.validate());
    cfg.field = 0.05;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Harness, ParsesNames) {
    EXPECT_EQ(parse_experiment("fus-phantom"), Experiment::FusPhantom);
    EXPECT_EQ(to_string(Experiment::DesignComparison), "design-comparison");
    EXPECT_THROW(parse_experiment("warp-drive"), ValidationError);
    EXPECT_EQ(parse_payload_variant("filled"), PayloadVariant::Filled);
    EXPECT_THROW(parse_payload_variant("half"), ValidationError);
}

TEST(Harness, InclineLadderDefaults) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::InclineLadder;
    cfg.designs = {robot::DesignKind::TP, robot::DesignKind::SP, robot::DesignKind::EP};
    const auto r = run_incline_ladder(cfg);
    ASSERT_EQ(r.rows.size(), 6u);
    for (const auto& row : r.rows) {
        EXPECT_DOUBLE_EQ(row.ladder.theta_max_deg, row.env == Environment::Dry ? 20.0 : 50.0);
    }
}

TEST(Harness, MeltCurveSweep) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::MeltCurveSweep;
    const auto r = run_melt_curve_sweep(cfg);
    ASSERT_EQ(r.rows.size(), 13u);
    EXPECT_DOUBLE_EQ(r.rows.front().onset_c, 50.0);
    EXPECT_DOUBLE_EQ(r.rows.back().onset_c, 39.0);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        EXPECT_LT(r.rows[i].onset_c, r.rows[i - 1].onset_c);
    }
}

TEST(Harness, ReleaseSchedule) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::ReleaseSchedule;
    const auto r = run_release_schedule(cfg);
    ASSERT_EQ(r.samples.size(), 12u);
    double first_nonzero_bath = 0.0;
    for (const auto& s : r.samples) {
        if (s.cumulative_fraction > 0.0) {
            first_nonzero_bath = s.bath_c;
            break;
        }
    }
    EXPECT_DOUBLE_EQ(first_nonzero_bath, 40.0);
    ASSERT_TRUE(r.breach_temperature_c.has_value());
    EXPECT_GE(*r.breach_temperature_c, 39.0);
    EXPECT_NEAR(r.samples.back().cumulative_fraction, 0.80, 0.01);
    double sampled = 0.0;
    for (const auto& s : r.samples) sampled += s.sample_mass;
    EXPECT_NEAR(sampled + r.retained_mass, r.loaded_mass, 1e-12 * r.loaded_mass);
}

TEST(Harness, FusPhantomSummary) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::FusPhantom;
    cfg.output_dir = scratch_dir("fus");
    const auto r = run_fus_phantom(cfg);
    EXPECT_GE(r.temperature_at_90s, 40.9);
    EXPECT_LE(r.deviation_from_42_late, 0.5);
    ASSERT_EQ(r.replicates.size(), 3u);
    for (const auto& rep : r.replicates) {
        ASSERT_TRUE(rep.release_time.has_value());
        EXPECT_LE(*rep.release_time, 90.0);
    }
    const auto j = nlohmann::json::parse(read_file(cfg.output_dir / "summary.json"));
    EXPECT_TRUE(j.contains("temperature_at_90s_c"));
    EXPECT_TRUE(fs::exists(cfg.output_dir / "fus_phantom.csv"));
}

TEST(Harness, DesignComparisonOrdering) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::DesignComparison;
    cfg.designs = {robot::DesignKind::TP, robot::DesignKind::SP, robot::DesignKind::EP};
    const auto r = run_design_comparison(cfg);
    ASSERT_EQ(r.rows.size(), 3u);
    EXPECT_NEAR(r.rows[0].fraction, 0.93, 0.01);
    EXPECT_NEAR(r.rows[1].fraction, 0.52, 0.01);
    EXPECT_NEAR(r.rows[2].fraction, 1.00, 0.01);
}

TEST(Harness, NoReleaseAtBodyTemperature) {
    ExperimentConfig cfg;
    cfg.experiment = Experiment::DesignComparison;
    cfg.designs = {robot::DesignKind::TP, robot::DesignKind::SP, robot::DesignKind::EP};
    DesignComparisonSpec spec;
    spec.hot_c = 37.0;
    for (const auto& row : run_design_comparison(cfg, spec).rows) {
        EXPECT_EQ(row.fraction, 0.0) << robot::to_string(row.design);
    }
}
