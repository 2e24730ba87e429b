#include "generators.hpp"

#include "mutum/errors.hpp"
#include "mutum/thermics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace mutum;
using namespace mutum::thermics;

namespace {

// Closed-form solution of C dT/dt = P - G (T - Ta) from T0 at constant P.
double oracle_temperature(double t, double t0_c, double ambient, double power, double c, double g) {
    const double eq = ambient + power / g;
    return eq + (t0_c - eq) * std::exp(-t * g / c);
}

ThermalState state(double c, double g, double ambient = 36.0) {
    ThermalState s;
    s.capacitance = c;
    s.conductance = g;
    s.ambient_c = ambient;
    s.temperature_c = ambient;
    return s;
}

}  // namespace

TEST(MeltCurve, Anchors) {
    const auto curve = default_melt_curve();
    EXPECT_NEAR(melt_onset(curve, 0.0), 50.0, 1.0);
    EXPECT_NEAR(melt_onset(curve, 0.6), 39.0, 0.5);
    double prev = melt_onset(curve, 0.0);
    for (int i = 0; i <= 600; ++i) {
        const double o = melt_onset(curve, std::min(0.001 * i, curve.w_max()));
        EXPECT_LE(o, prev + 1e-12);
        prev = o;
    }
}

TEST(MeltCurve, DomainAndValidation) {
    const auto curve = default_melt_curve();
    EXPECT_THROW(curve.onset(0.7), OutOfDomain);
    EXPECT_THROW(curve.onset(-0.1), OutOfDomain);
    EXPECT_THROW(MeltCurve({{0.0, 50.0, 49.0}}), ValidationError);
    EXPECT_THROW(MeltCurve({{0.5, 40.0, 41.0}, {0.4, 42.0, 43.0}}), ValidationError);
    EXPECT_THROW(MeltCurve({}), ValidationError);
    const MeltCurve c({{0.0, 50.0, 52.0}, {1.0, 40.0, 44.0}});
    EXPECT_DOUBLE_EQ(c.onset(0.5), 45.0);
    EXPECT_DOUBLE_EQ(c.final_melt(0.5), 48.0);
}

TEST(Heating, MatchesClosedFormWithoutSource) {
    auto s = state(10.0, 0.2, 36.0);
    s.temperature_c = 45.0;
    for (int i = 1; i <= 500; ++i) {
        s = heat_step(s, std::nullopt, 0.0, 0.1);
        ASSERT_NEAR(s.temperature_c, oracle_temperature(0.1 * i, 45.0, 36.0, 0.0, 10.0, 0.2), 1e-10);
    }
}

TEST(Heating, MatchesClosedFormDuringAndAfterFus) {
    const auto s0 = state(13.25, 0.222);
    FusConfig fus;
    fus.absorbed_fraction = 0.7;
    const double p = 10.0 * 0.2 * 0.7;
    auto s = s0;
    for (int i = 0; i < 300; ++i) {
        s = heat_step(s, fus, i * 1.0, 1.0);
    }
    const double at_180 = oracle_temperature(180.0, 36.0, 36.0, p, 13.25, 0.222);
    const double at_300 = oracle_temperature(120.0, at_180, 36.0, 0.0, 13.25, 0.222);
    EXPECT_NEAR(s.temperature_c, at_300, 1e-10);
}

TEST(Heating, StepSizeIndependent) {
    proptest::Gen g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s0 = state(g.uniform(1.0, 30.0), g.uniform(0.01, 0.5));
        FusConfig fus;
        fus.absorbed_fraction = g.uniform(0.05, 1.0);
        fus.duration = g.uniform(10.0, 200.0);
        const double horizon = 250.0;
        auto coarse = heat_step(s0, fus, 0.0, horizon);
        auto fine = s0;
        const int n = g.integer(7, 900);
        for (int i = 0; i < n; ++i) {
            fine = heat_step(fine, fus, horizon * i / n, horizon / n);
        }
        EXPECT_NEAR(coarse.temperature_c, fine.temperature_c, 1e-9) << "trial " << trial;
    }
}

TEST(Heating, SourceIdleBeforeTrigger) {
    FusConfig fus;
    const auto s = heat_step(state(5.0, 0.1), fus, -20.0, 10.0);
    EXPECT_DOUBLE_EQ(s.temperature_c, 36.0);
    EXPECT_THROW(heat_step(state(5.0, 0.1), fus, 0.0, 0.0), InvalidTimestep);
}

TEST(Heating, CalibratedPhantomAnchors) {
    const auto tp = default_thermal_params();
    FusConfig fus;
    fus.absorbed_fraction = tp.absorbed_fraction;
    const auto s0 = state(tp.capacitance, tp.conductance);
    EXPECT_GE(heat_step(s0, fus, 0.0, 90.0).temperature_c, 40.9);
    EXPECT_NEAR(heat_step(s0, fus, 0.0, 180.0).temperature_c, 42.0, 0.5);
}

TEST(Fus, DutyAndPower) {
    FusConfig f;
    EXPECT_DOUBLE_EQ(f.duty_cycle(), 0.2);
    f.absorbed_fraction = 0.5;
    EXPECT_DOUBLE_EQ(f.absorbed_power(10.0), 1.0);
    EXPECT_DOUBLE_EQ(f.absorbed_power(180.0), 0.0);
    f.burst_length = 2e-3;
    EXPECT_THROW(f.validate(), ValidationError);
}

TEST(Cap, DecaysOnlyAboveOnset) {
    auto cap = make_wax_cap(default_melt_curve(), 0.6);
    EXPECT_DOUBLE_EQ(cap.onset_c, 39.0);
    for (int i = 0; i < 100; ++i) cap = cap_update(cap, 38.99, 1.0);
    EXPECT_DOUBLE_EQ(cap.integrity, 1.0);
    int steps = 0;
    while (!cap.breached()) {
        cap = cap_update(cap, 39.0, 1.0);
        ++steps;
    }
    // exp(-n/10) < 0.5 first at n = 7.
    EXPECT_EQ(steps, 7);
}

TEST(Release, NothingBeforeBreachThenFirstOrder) {
    const auto d = robot::stock_design(robot::DesignKind::TP);
    auto p = make_payload_state(d, robot::filled_payload(d), make_wax_cap(default_melt_curve(), 0.6));
    for (int i = 0; i < 100; ++i) p = release_step(p, false, 1.0);
    EXPECT_EQ(p.released_mass, 0.0);
    p = release_step(p, true, 1.0);
    ASSERT_TRUE(p.breach_time.has_value());
    EXPECT_DOUBLE_EQ(*p.breach_time, 100.0);
    for (int i = 0; i < 99; ++i) p = release_step(p, true, 1.0);
    EXPECT_NEAR(p.released_fraction(), 0.93 * (1.0 - std::exp(-0.01 * 100.0)), 1e-12);
}

TEST(Release, RateScalesWithPortArea) {
    EXPECT_DOUBLE_EQ(release_rate_constant(robot::stock_design(robot::DesignKind::TP)), 0.01);
    EXPECT_NEAR(release_rate_constant(robot::stock_design(robot::DesignKind::SP)), 0.02, 1e-15);
    EXPECT_NEAR(release_rate_constant(robot::stock_design(robot::DesignKind::EP)), 0.017778, 1e-6);
}

TEST(Release, MassConservedUnderRandomProtocols) {
    proptest::Gen g(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto kind = static_cast<robot::DesignKind>(g.integer(0, 2));
        const auto d = robot::stock_design(kind);
        auto p = make_payload_state(d, robot::filled_payload(d),
                                    make_wax_cap(default_melt_curve(), g.uniform(0.0, 0.6)));
        const double m0 = p.loaded_mass;
        double sampled = 0.0;
        double prev_released = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double temp = g.uniform(30.0, 52.0);
            p.cap = cap_update(p.cap, temp, 1.0);
            p = release_step(p, p.cap.breached(), 1.0);
            ASSERT_GE(p.released_mass, prev_released);
            prev_released = p.released_mass;
            if (g.integer(0, 50) == 0) sampled += sample_supernatant(p);
        }
        sampled += sample_supernatant(p);
        EXPECT_NEAR(p.released_mass + p.retained_mass(), m0, 1e-12 * m0);
        EXPECT_NEAR(sampled + p.retained_mass(), m0, 1e-12 * m0);
        EXPECT_LE(p.released_fraction(), p.max_release_fraction + 1e-15);
    }
}
