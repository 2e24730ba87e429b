#include "generators.hpp"

#include "mutum/errors.hpp"
#include "mutum/scene.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace mutum;
using namespace mutum::scene;

namespace {

Scene random_scene(proptest::Gen& g, int index) {
    Scene s;
    s.name = "random_" + std::to_string(index);
    s.kind = static_cast<SceneKind>(g.integer(0, 4));
    s.fluid = static_cast<Fluid>(g.integer(0, 2));
    s.temperature_ambient_c = g.uniform(15.0, 40.0);
    if (s.kind == SceneKind::Incline) {
        s.incline_angle_deg = g.uniform(0.0, 60.0);
    }
    if (s.has_lumen()) {
        std::vector<Vec3> pts;
        std::vector<double> radii;
        const int n = g.integer(2, 8);
        Vec3 p(g.uniform(-0.03, 0.0), g.uniform(-0.01, 0.01), 0.0);
        for (int i = 0; i < n; ++i) {
            pts.push_back(p);
            radii.push_back(g.uniform(2e-3, 6e-3));
            p += Vec3(g.uniform(1e-3, 8e-3), g.uniform(-2e-3, 2e-3), g.uniform(-1e-3, 1e-3));
        }
        s.lumen = LumenProfile(pts, radii);
    }
    s.locomotion_params = default_params(s.environment());
    s.locomotion_params.friction_coefficient = g.uniform(0.0, 1.2);
    s.locomotion_params.adhesion_stress = g.uniform(0.0, 5.0);
    s.locomotion_params.slip = {{g.uniform(0.5, 2.5), g.uniform(0.0, 1.0)},
                                {g.uniform(3.0, 5.0), g.uniform(0.0, 1.0)}};
    s.locomotion_params.slip_noise = g.uniform(0.0, 0.2);
    s.locomotion_params.include_magnetic_force = g.coin();
    return s;
}

LumenProfile straight_lumen() {
    return LumenProfile({Vec3(-0.03, 0, 0), Vec3(0, 0, 0), Vec3(0.03, 0, 0)}, {4.25e-3, 4.25e-3, 4.25e-3});
}

}  // namespace

TEST(Scene, RoundTripsThroughJson) {
    proptest::Gen g(2024);
    for (int i = 0; i < 200; ++i) {
        const Scene s = random_scene(g, i);
        ASSERT_NO_THROW(s.validate());
        const std::string text = serialize(s);
        const Scene back = parse_scene(text);
        ASSERT_EQ(back, s) << text;
        ASSERT_EQ(serialize(back), text);
    }
}

TEST(Scene, BundledFixturesLoad) {
    const auto names = list_scenes(default_scene_dir());
    for (const char* expected : {"flat_dry", "flat_wet", "incline_20", "incline_50", "incline_60",
                                 "phantom_rat", "invivo_rat"}) {
        EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected;
    }
    for (const auto& n : names) {
        const auto s = load_scene(default_scene_dir() / (n + ".json"));
        EXPECT_EQ(s.name, n);
    }
    EXPECT_EQ(load_scene(default_scene_dir() / "invivo_rat.json").environment(), Environment::InVivo);
    EXPECT_EQ(load_scene(default_scene_dir() / "incline_20.json").environment(), Environment::Dry);
}

TEST(Scene, ParseErrorCarriesPosition) {
    const std::string text = "{\n  \"kind\": \"flat_dry\",\n  \"fluid\": ,\n}\n";
    try {
        parse_scene(text);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_GE(e.column(), 11u);
    }
}

TEST(Scene, ValidationErrors) {
    EXPECT_THROW(parse_scene(R"({"kind":"incline","incline_angle_deg":75})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"flat_dry","incline_angle_deg":5})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"phantom"})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"flat_dry","colour":"red"})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"volcano"})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"flat_dry","locomotion_params":{"mu":-1}})"), ValidationError);
    EXPECT_THROW(parse_scene(R"({"kind":"phantom","lumen":{"centerline":[[0,0,0],[0.01,0,0]],"radius":1e-3}})"),
                 ValidationError);
    EXPECT_THROW(parse_scene(R"([1,2])"), ValidationError);
    EXPECT_THROW(load_scene("/nonexistent/scene.json"), IoError);
    try {
        parse_scene(R"({"kind":"incline","incline_angle_deg":75})");
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.invariant(), "incline_angle in [0, 60] deg");
    }
}

TEST(Scene, DefaultsFollowKind) {
    const auto s = parse_scene(R"({"kind":"incline","incline_angle_deg":30})", "ramp");
    EXPECT_EQ(s.name, "ramp");
    EXPECT_EQ(s.fluid, Fluid::DIWater);
    EXPECT_EQ(s.environment(), Environment::Wet);
    EXPECT_EQ(s.locomotion_params, default_params(Environment::Wet));
    const Plane p = s.plane();
    EXPECT_NEAR(p.normal.dot(p.uphill), 0.0, 1e-15);
    EXPECT_NEAR(std::asin(p.uphill.z()), 30.0 * kPi / 180.0, 1e-12);
}

TEST(Lumen, ProjectionAndEnds) {
    const auto l = straight_lumen();
    EXPECT_DOUBLE_EQ(l.length(), 0.06);
    const auto proj = l.project(Vec3(0.01, 0.002, -0.001));
    EXPECT_NEAR(proj.arc_length, 0.04, 1e-15);
    EXPECT_TRUE(proj.point.isApprox(Vec3(0.01, 0, 0)));
    EXPECT_THROW(l.project(Vec3(0.031, 0, 0)), OffCenterlineEnds);
    EXPECT_THROW(l.project(Vec3(-0.0301, 0, 0)), OffCenterlineEnds);
    EXPECT_THROW(LumenProfile({Vec3::Zero()}, {1e-3}), ValidationError);
    EXPECT_THROW(LumenProfile({Vec3::Zero(), Vec3::Zero()}, {1e-3, 1e-3}), ValidationError);
}

TEST(Lumen, ConstraintIsIdempotentAndOnTheFloor) {
    proptest::Gen g(8);
    const auto l = straight_lumen();
    for (int i = 0; i < 500; ++i) {
        const Vec3 p(g.uniform(-0.029, 0.029), g.uniform(-0.004, 0.004), g.uniform(-0.004, 0.004));
        const double clearance = g.uniform(0.0, 1.6e-3);
        const auto c1 = constrain_to_lumen(p, l, clearance);
        const auto c2 = constrain_to_lumen(c1.position, l, clearance);
        ASSERT_TRUE(c1.position.isApprox(c2.position, 1e-12));
        ASSERT_NEAR(c1.position.z(), -4.25e-3 + clearance, 1e-15);
        ASSERT_TRUE(c1.normal.isApprox(Vec3::UnitZ()));
    }
}
