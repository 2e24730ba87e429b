#pragma once

#include "mutum/microrobot.hpp"

#include <optional>
#include <vector>

namespace mutum::thermics {

struct MeltPoint {
    double w;         // mineral-oil mass fraction
    double onset_c;   // first visible melting
    double final_c;   // fully molten
};

/// Piecewise-linear melt temperatures of paraffin/mineral-oil mixtures.
class MeltCurve {
public:
    /// Throws ValidationError unless w is strictly increasing and
    /// onset <= final at every knot.
    explicit MeltCurve(std::vector<MeltPoint> points);

    const std::vector<MeltPoint>& points() const { return points_; }
    double w_min() const { return points_.front().w; }
    double w_max() const { return points_.back().w; }

    /// Throws OutOfDomain outside [w_min, w_max].
    double onset(double w) const;
    double final_melt(double w) const;

private:
    std::vector<MeltPoint> points_;
};

/// Two knots: pure paraffin starts melting at 50 °C and the w = 0.6 mixture
/// at 39 °C. Final temperatures equal the onsets; linear in between.
MeltCurve default_melt_curve();

double melt_onset(const MeltCurve& curve, double w);

/// Lumped single-node temperature at the robot.
struct ThermalState {
    double temperature_c = 36.0;
    double ambient_c = 36.0;
    double capacitance = 1.0;  // J/°C
    double conductance = 1.0;  // W/°C

    void validate() const;
    double time_constant() const { return capacitance / conductance; }
};

/// Pulsed focused-ultrasound drive.
struct FusConfig {
    double electrical_power = 10.0;  // W
    double frequency = 6.775e6;      // Hz
    double burst_length = 0.20e-3;   // s
    double period = 1.00e-3;         // s
    double duration = 180.0;         // s
    double absorbed_fraction = 0.7;

    void validate() const;
    double duty_cycle() const { return burst_length / period; }
    /// Time-averaged absorbed power `t` seconds after the trigger.
    double absorbed_power(double t) const;
};

/// Parameters of the lumped model fixed by calibration.
struct ThermalParams {
    double capacitance = 13.25;
    double conductance = 0.222;
    double absorbed_fraction = 0.7;

    bool operator==(const ThermalParams&) const = default;
};

/// Calibrated against the phantom heating anchors (see calibration.hpp).
ThermalParams default_thermal_params();

/// Advance the lumped temperature by `dt`. `t` is the time since the FUS
/// trigger (ignored without a source). The update is the exact solution of
/// C dT/dt = P - G (T - ambient) for the piecewise-constant source, split at
/// the moment the source switches off.
ThermalState heat_step(const ThermalState& state, const std::optional<FusConfig>& fus, double t,
                       double dt);

/// Effective melt onset of a coated robot: curve onset at `w` plus a per-robot
/// coating offset (thin coats open early, thick coats late).
robot::WaxCap make_wax_cap(const MeltCurve& curve, double w, double onset_offset_c = 0.0);

/// Integrity decays as exp(-dt/decay_time) while T >= onset, else holds.
robot::WaxCap cap_update(const robot::WaxCap& cap, double temperature_c, double dt);

struct PayloadState {
    double loaded_mass = 0.0;    // kg of drug
    double released_mass = 0.0;  // kg
    double sampled_mass = 0.0;   // kg already removed by sampling
    double max_release_fraction = 1.0;
    double rate_constant = 0.01;  // 1/s
    double t = 0.0;              // s since the payload timeline started
    std::optional<double> breach_time;
    robot::WaxCap cap;

    double released_fraction() const {
        return loaded_mass > 0.0 ? released_mass / loaded_mass : 0.0;
    }
    double retained_mass() const { return loaded_mass - released_mass; }
};

/// First-order rate constant of the reference top-port design.
inline constexpr double kReferenceRateConstant = 0.01;

/// Rate constant scaled by open port area relative to the top-port design.
double release_rate_constant(const robot::MicrorobotDesign& design,
                             double reference_rate = kReferenceRateConstant);

PayloadState make_payload_state(const robot::MicrorobotDesign& design,
                                const robot::PayloadSpec& payload, const robot::WaxCap& cap);

/// Advance the released mass by `dt`. Nothing is released before the cap is
/// breached; afterwards F(t) = F_max (1 - exp(-k (t - t_breach))).
PayloadState release_step(const PayloadState& p, bool cap_breached, double dt);

/// Mass released since the previous sample; resets the accumulator.
double sample_supernatant(PayloadState& p);

}  // namespace mutum::thermics
