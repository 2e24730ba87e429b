#pragma once

#include <map>
#include <string_view>

namespace mutum {

/// Substrate/medium class that selects a locomotion parameter set.
enum class Environment { Dry, Wet, Phantom, InVivo };

std::string_view to_string(Environment env);

/// Calibration knobs of the tumbling model.
struct LocomotionParams {
    /// Slip factor keyed by actuation frequency (Hz); linearly interpolated,
    /// held constant outside the table.
    std::map<double, double> slip;
    double friction_coefficient = 0.0;
    double adhesion_stress = 0.0;  // Pa
    /// Amplitude of the zero-mean uniform multiplicative noise drawn once per pivot.
    double slip_noise = 0.05;
    /// Adds the actuator's gradient force to the normal load.
    bool include_magnetic_force = false;

    double slip_at(double frequency) const;
    void validate() const;

    bool operator==(const LocomotionParams&) const = default;
};

/// Default calibrated parameters for each environment.
LocomotionParams default_params(Environment env);

}  // namespace mutum
