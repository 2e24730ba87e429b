#include "mutum/harness.hpp"
#include "mutum/locomotion.hpp"
#include "mutum/magnetics.hpp"
#include "mutum/thermics.hpp"

#include <benchmark/benchmark.h>

using namespace mutum;

namespace {

void BM_DipoleField(benchmark::State& state) {
    magnetics::DipoleSource s;
    s.moment_magnitude = 16.9;
    Vec3 p(0.01, 0.02, 0.05);
    for (auto _ : state) {
        benchmark::DoNotOptimize(magnetics::dipole_field(s, p));
        p.x() += 1e-9;
    }
}
BENCHMARK(BM_DipoleField);

void BM_LocomotionStep(benchmark::State& state) {
    scene::Scene sc = scene::load_scene(scene::default_scene_dir() / "phantom_rat.json");
    const locomotion::Robot robot{robot::stock_design(robot::DesignKind::TP), robot::empty_payload()};
    magnetics::ActuatorState act;
    act.rotation_frequency = 3.0;
    const auto start = locomotion::default_start(sc, robot, act);
    auto s = start;
    int n = 0;
    for (auto _ : state) {
        s = locomotion::step(s, act, sc, robot, sc.locomotion_params, 1e-3, 1);
        act = magnetics::advance(act, 1e-3);
        // Stay inside the lumen.
        if (++n == 2000) {
            s = start;
            n = 0;
        }
    }
}
BENCHMARK(BM_LocomotionStep);

void BM_NinePanel(benchmark::State& state) {
    const auto sc = scene::load_scene(scene::default_scene_dir() / "flat_dry.json");
    const locomotion::Robot robot{robot::stock_design(robot::DesignKind::TP), robot::empty_payload()};
    for (auto _ : state) {
        benchmark::DoNotOptimize(locomotion::nine_panel_velocity(robot, sc, 5.0, 7));
    }
}
BENCHMARK(BM_NinePanel)->Unit(benchmark::kMillisecond);

void BM_HeatStep(benchmark::State& state) {
    thermics::ThermalState s;
    s.capacitance = 13.25;
    s.conductance = 0.222;
    thermics::FusConfig fus;
    double t = 0.0;
    for (auto _ : state) {
        s = thermics::heat_step(s, fus, t, 0.1);
        t = t > 300.0 ? 0.0 : t + 0.1;
    }
    benchmark::DoNotOptimize(s);
}
BENCHMARK(BM_HeatStep);

void BM_FusPhantomRunner(benchmark::State& state) {
    harness::ExperimentConfig cfg;
    cfg.experiment = harness::Experiment::FusPhantom;
    for (auto _ : state) {
        benchmark::DoNotOptimize(harness::run_fus_phantom(cfg));
    }
}
BENCHMARK(BM_FusPhantomRunner)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
