#include "mutum/calibration.hpp"
#include "mutum/errors.hpp"
#include "mutum/locomotion.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>


using namespace mutum;
using namespace mutum::calibration;

namespace {

// The default fit is shared by several tests and takes a few seconds.
const CalibrationResult& default_fit() {
    static const CalibrationResult r = calibrate(default_anchors());
    return r;
}

}  // namespace

TEST(Calibration, AnchorFileMatchesBuiltIns) {
    const auto file = load_anchors(std::filesystem::path(MUTUM_ANCHOR_DIR) / "default_anchors.json");
    const auto builtin = default_anchors();
    ASSERT_EQ(file.incline.size(), builtin.incline.size());
    for (std::size_t i = 0; i < file.incline.size(); ++i) {
        EXPECT_EQ(file.incline[i].env, builtin.incline[i].env);
        EXPECT_EQ(file.incline[i].angle_deg, builtin.incline[i].angle_deg);
        EXPECT_EQ(file.incline[i].pass, builtin.incline[i].pass);
    }
    EXPECT_EQ(file.designs, builtin.designs);
    EXPECT_EQ(file.thermal_points.size(), builtin.thermal_points.size());
    EXPECT_EQ(file.thermal_windows.size(), builtin.thermal_windows.size());
}

TEST(Calibration, DefaultAnchorsReproduceFrozenDefaults) {
    const auto& r = default_fit();
    EXPECT_DOUBLE_EQ(r.friction.at(Environment::Dry).friction_coefficient, 0.415);
    EXPECT_DOUBLE_EQ(r.friction.at(Environment::Dry).adhesion_stress, 0.0);
    EXPECT_DOUBLE_EQ(r.friction.at(Environment::Wet).friction_coefficient, 0.8);
    EXPECT_DOUBLE_EQ(r.friction.at(Environment::Wet).adhesion_stress, 2.27);
    ASSERT_TRUE(r.thermal.has_value());
    EXPECT_EQ(*r.thermal, thermics::default_thermal_params());
    for (const auto env : {Environment::Dry, Environment::Wet, Environment::Phantom, Environment::InVivo}) {
        EXPECT_EQ(apply(r, env), default_params(env)) << to_string(env);
    }
}

TEST(Calibration, FitSatisfiesEveryInclineAnchor) {
    const auto anchors = default_anchors();
    const auto& r = default_fit();
    for (const auto& a : anchors.incline) {
        const auto params = apply(r, a.env);
        for (const auto kind : anchors.designs) {
            const bool ok = locomotion::climb_feasible(a.angle_deg * kPi / 180.0, params,
                                                       robot::stock_design(kind));
            EXPECT_EQ(ok, a.pass) << a.describe();
        }
    }
}

TEST(Calibration, ContradictoryAnchorsAreInfeasible) {
    const auto anchors = load_anchors(std::filesystem::path(MUTUM_ANCHOR_DIR) / "contradictory_anchors.json");
    try {
        calibrate(anchors);
        FAIL() << "expected CalibrationInfeasible";
    } catch (const CalibrationInfeasible& e) {
        EXPECT_FALSE(e.violated().empty());
    }
}

TEST(Calibration, ThermalWindowOutOfReachIsInfeasible) {
    auto anchors = default_anchors();
    anchors.incline.clear();
    anchors.thermal_windows = {{180.0, 240.0, 80.0, 0.5}};
    EXPECT_THROW(calibrate(anchors), CalibrationInfeasible);
}

TEST(Calibration, MalformedAnchorFile) {
    EXPECT_THROW(parse_anchors("{\"incline\": [ }"), ParseError);
    EXPECT_THROW(parse_anchors(R"({"incline":[{"env":"lava","angle_deg":5,"pass":true}]})"), ValidationError);
}

TEST(Calibration, ResultJsonIsComplete) {
    const auto j = nlohmann::json::parse(to_json(default_fit()));
    EXPECT_TRUE(j.contains("locomotion"));
    EXPECT_TRUE(j.contains("thermal"));
}
