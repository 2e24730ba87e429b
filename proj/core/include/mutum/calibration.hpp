#pragma once

#include "mutum/microrobot.hpp"
#include "mutum/params.hpp"
#include "mutum/thermics.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mutum::calibration {

/// Pass/fail outcome of the 5° incline ladder at one angle.
struct InclineAnchor {
    Environment env = Environment::Dry;
    double angle_deg = 0.0;
    bool pass = true;

    std::string describe() const;
};

/// Temperature bounds at a fixed time after the FUS trigger. `target_c`
/// contributes |T - target| to the objective.
struct ThermalPointAnchor {
    double t_s = 0.0;
    std::optional<double> min_c;
    std::optional<double> max_c;
    std::optional<double> target_c;

    std::string describe() const;
};

/// Some instant in [t0, t1] must have |T - target| <= tol.
struct ThermalWindowAnchor {
    double t0_s = 0.0;
    double t1_s = 0.0;
    double target_c = 0.0;
    double tol_c = 0.0;

    std::string describe() const;
};

struct AnchorSet {
    std::vector<robot::DesignKind> designs{robot::DesignKind::TP, robot::DesignKind::SP,
                                           robot::DesignKind::EP};
    bool filled_payload = false;
    std::vector<InclineAnchor> incline;
    /// Upper bound on the friction coefficient searched per environment.
    std::map<Environment, double> friction_max;

    double thermal_start_c = 36.0;
    thermics::FusConfig fus;
    std::vector<ThermalPointAnchor> thermal_points;
    std::vector<ThermalWindowAnchor> thermal_windows;
};

/// Grid resolution; documented so results are reproducible.
struct GridSpec {
    double friction_step = 0.005;
    double adhesion_step = 0.01;   // Pa
    double adhesion_max = 10.0;    // Pa
    double fraction_step = 0.05;
    double conductance_step = 0.002;  // W/°C
    double conductance_max = 0.5;
    double capacitance_step = 0.25;   // J/°C
    double capacitance_max = 30.0;
    double window_sample = 1.0;       // s
};

struct FrictionFit {
    double friction_coefficient = 0.0;
    double adhesion_stress = 0.0;
    /// Smallest tan-margin over all anchors and designs.
    double margin = 0.0;
};

struct CalibrationResult {
    std::map<Environment, FrictionFit> friction;
    std::optional<thermics::ThermalParams> thermal;
    double thermal_objective = 0.0;
};

AnchorSet default_anchors();
AnchorSet parse_anchors(std::string_view json_text);
AnchorSet load_anchors(const std::filesystem::path& path);

/// Deterministic grid search. Throws CalibrationInfeasible listing every
/// anchor left unsatisfied by the best compromise.
CalibrationResult calibrate(const AnchorSet& anchors, const GridSpec& grid = {});

/// Default parameter set for `env` with calibrated friction/adhesion applied.
LocomotionParams apply(const CalibrationResult& result, Environment env);

std::string to_json(const CalibrationResult& result);

}  // namespace mutum::calibration
