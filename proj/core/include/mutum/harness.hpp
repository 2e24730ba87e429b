#pragma once

#include "mutum/calibration.hpp"
#include "mutum/locomotion.hpp"
#include "mutum/microrobot.hpp"
#include "mutum/params.hpp"
#include "mutum/scene.hpp"
#include "mutum/thermics.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mutum::harness {

enum class Experiment {
    VelocitySweep,
    InclineLadder,
    MeltCurveSweep,
    ReleaseSchedule,
    FusPhantom,
    DesignComparison
};

/// Kebab-case names as used on the command line ("velocity-sweep", ...).
std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view text);

enum class PayloadVariant { Empty, Filled };

std::string_view to_string(PayloadVariant p);
PayloadVariant parse_payload_variant(std::string_view text);
robot::PayloadSpec make_payload(PayloadVariant variant, const robot::MicrorobotDesign& design);

struct ExperimentConfig {
    Experiment experiment = Experiment::VelocitySweep;
    /// Empty selects the experiment's default scene.
    std::filesystem::path scene_path;
    std::vector<robot::DesignKind> designs{robot::DesignKind::TP};
    std::vector<PayloadVariant> payloads{PayloadVariant::Empty};
    std::vector<double> frequencies{2.0, 3.0, 5.0};
    std::uint64_t seed = 0;
    /// Empty means "do not write files".
    std::filesystem::path output_dir;
    double field = 0.020;  // T
    /// Per-pivot slip noise on (scene value) or forced to zero.
    bool perturbations = true;

    /// Throws ValidationError (frequencies must be a subset of {2, 3, 4, 5}).
    void validate() const;
};

struct VelocityRow {
    std::string scene;
    Environment env;
    robot::DesignKind design;
    PayloadVariant payload;
    locomotion::PanelResult panel;
};

struct VelocitySweepResult {
    std::vector<VelocityRow> rows;
    std::string csv;         // env,scene,design,payload,freq_hz,v_mean,v_min,v_max
    std::string trials_csv;  // one row per trial
};

VelocitySweepResult run_velocity_sweep(const ExperimentConfig& cfg);

struct LadderRow {
    robot::DesignKind design;
    Environment env;
    PayloadVariant payload;
    locomotion::LadderResult ladder;
};

struct InclineLadderResult {
    std::vector<LadderRow> rows;
    std::string csv;  // design,env,payload,theta_max_deg
    std::string rungs_csv;
};

/// Uses the scene's environment and parameters when a scene is given,
/// otherwise dry and wet with their default parameter sets.
InclineLadderResult run_incline_ladder(const ExperimentConfig& cfg);
/// Same, with explicit parameters per environment.
InclineLadderResult run_incline_ladder(const ExperimentConfig& cfg,
                                       const std::map<Environment, LocomotionParams>& params);

struct MeltCurveSweepResult {
    std::vector<thermics::MeltPoint> rows;
    std::string csv;  // w,onset_c,final_c
};

MeltCurveSweepResult run_melt_curve_sweep(const ExperimentConfig& cfg, double w_step = 0.05);

/// Bath protocol: each segment ramps to `target_c`, holds for `hold_s` and
/// is sampled at k·sample_interval_s after arrival, k = 0, 1, ... (the
/// experiment's t = 0 is never sampled).
struct ReleaseScheduleSpec {
    struct Segment {
        double target_c;
        double hold_s;
        double sample_interval_s;
    };
    double start_c = 36.0;
    double ramp_rate_c_per_s = 0.01;
    double dt = 1.0;  // s
    double oil_mass_fraction = 0.6;
    /// Terminal releasable fraction of the 100 mg/mL formulation.
    double max_release_fraction = 0.80;
    std::vector<Segment> segments;

    void validate() const;
};

/// 36 °C for 20 min sampled every 5 min, then 38/40/42/44 °C each sampled on
/// arrival and after a 5 min hold: 12 samples.
ReleaseScheduleSpec default_release_schedule();

struct ReleaseSample {
    double t;
    double bath_c;
    double sample_mass;
    double cumulative_fraction;
};

struct ReleaseScheduleResult {
    robot::DesignKind design;
    double loaded_mass = 0.0;
    double retained_mass = 0.0;
    std::vector<ReleaseSample> samples;
    std::optional<double> breach_time;
    std::optional<double> breach_temperature_c;
    std::string csv;  // t,T,sample_mass,cumulative_fraction
};

ReleaseScheduleResult run_release_schedule(const ExperimentConfig& cfg,
                                           const ReleaseScheduleSpec& spec = default_release_schedule());

struct FusPhantomSpec {
    thermics::FusConfig fus;
    double duration_s = 300.0;
    double dt = 0.1;
    double log_interval_s = 1.0;
    double oil_mass_fraction = 0.6;
    /// Coating offset added to the melt onset, one entry per replicate:
    /// thin, nominal, thick.
    std::vector<double> onset_offsets_c{-1.87, 0.0, 1.73};
    /// Relative half-width of the seeded jitter on the cap decay time.
    double decay_jitter = 0.1;

    void validate() const;
};

struct FusReplicate {
    double onset_c = 0.0;
    double decay_time = 0.0;
    std::optional<double> release_time;
    std::optional<double> release_temperature_c;
    double final_fraction = 0.0;
};

struct FusPhantomResult {
    std::vector<FusReplicate> replicates;
    double temperature_at_90s = 0.0;
    double peak_temperature_c = 0.0;
    /// First logged instant with |T - 42| <= 0.5.
    std::optional<double> time_near_42;
    /// Smallest |T - 42| over logged instants in [180, 240] s.
    double deviation_from_42_late = std::numeric_limits<double>::infinity();
    std::vector<double> times;
    std::vector<double> temperatures;
    std::string csv;  // t,T,released_r0,released_r1,...
    std::string summary_json;
};

FusPhantomResult run_fus_phantom(const ExperimentConfig& cfg, const FusPhantomSpec& spec = {});

struct DesignComparisonSpec {
    double base_c = 37.0;
    double base_s = 600.0;
    double hot_c = 42.0;
    double hot_s = 600.0;
    double dt = 1.0;
    double oil_mass_fraction = 0.6;
};

struct DesignComparisonRow {
    robot::DesignKind design;
    double fraction = 0.0;
    double loaded_mass = 0.0;
    double released_mass = 0.0;
    double retained_mass = 0.0;
};

struct DesignComparisonResult {
    std::vector<DesignComparisonRow> rows;
    std::string csv;  // design,released_fraction,max_release_fraction
};

DesignComparisonResult run_design_comparison(const ExperimentConfig& cfg,
                                             const DesignComparisonSpec& spec = {});

/// Scene used when `cfg.scene_path` is empty, per experiment.
scene::Scene resolve_scene(const ExperimentConfig& cfg);

/// Resolved configuration (defaults included) as pretty JSON.
std::string config_json(const ExperimentConfig& cfg);

}  // namespace mutum::harness
