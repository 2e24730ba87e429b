#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mutum {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kMu0 = 4.0e-7 * kPi;  // T·m/A
inline constexpr double kGravity = 9.81;      // m/s²

}  // namespace mutum

namespace mutum::magnetics {

/// Point dipole, e.g. the actuator's permanent magnet.
struct DipoleSource {
    double moment_magnitude = 1.0;  // A·m²
    Vec3 moment_direction = Vec3::UnitZ();
    Vec3 position = Vec3::Zero();

    Vec3 moment() const { return moment_magnitude * moment_direction; }
};

/// Flux density and its Jacobian at a point, gradB(i, j) = dB_i/dx_j.
struct FieldSample {
    Vec3 B = Vec3::Zero();
    Mat3 gradB = Mat3::Zero();
};

/// Cubic NdFeB magnet embedded in the robot body.
class RobotMagnet {
public:
    static constexpr double kDefaultEdge = 500e-6;
    static constexpr double kDefaultRemanence = 1.3;

    RobotMagnet() : RobotMagnet(kDefaultEdge, kDefaultRemanence) {}
    RobotMagnet(double edge_length, double remanence,
                Vec3 moment_direction_body = Vec3::UnitZ());

    double edge_length() const { return edge_length_; }
    double remanence() const { return remanence_; }
    double volume() const { return edge_length_ * edge_length_ * edge_length_; }
    /// Br·V/μ0.
    double moment() const { return moment_; }
    const Vec3& moment_direction_body() const { return direction_body_; }

private:
    double edge_length_;
    double remanence_;
    double moment_;
    Vec3 direction_body_;
};

/// Operating point of the rotating-field actuator.
///
/// The field rotates in the vertical plane that contains the heading; at
/// `phase` = 0 it points straight up (+z) and a quarter turn later it points
/// along the heading.
struct ActuatorState {
    static constexpr double kMaxFrequency = 5.0;
    static constexpr double kMinField = 0.010;
    static constexpr double kMaxField = 0.030;
    static constexpr double kDefaultStandoff = 55.3e-3;

    double rotation_frequency = 0.0;  // Hz
    double heading = 0.0;             // rad, in-plane travel direction
    double phase = 0.0;               // rad, field angle at the start of the step
    double field_magnitude_at_workspace = 0.020;  // T
    /// Distance from the actuator dipole to the workspace centre.
    double standoff = kDefaultStandoff;

    /// Throws ValidationError when outside the actuator's operating envelope.
    void validate() const;
    Vec3 heading_direction() const;
};

void validate(const DipoleSource& source);

/// Point-dipole field and analytic gradient. Throws SingularPoint when the
/// point is closer than 0.1 mm to the source.
FieldSample dipole_field(const DipoleSource& source, const Vec3& point);

/// T = m × B.
Vec3 magnetic_torque(const Vec3& robot_moment, const Vec3& B);

/// F_i = Σ_j m_j dB_i/dx_j.
Vec3 magnetic_force(const Vec3& robot_moment, const Mat3& gradB);

/// Field at the workspace centre `t` seconds after the actuator state was
/// captured. B is a pure rotation of constant magnitude; gradB is that of the
/// equivalent point dipole placed `standoff` below the centre which produces
/// exactly this B there.
FieldSample actuator_field(const ActuatorState& state, double t);

/// Field angle (rad) `t` seconds after the actuator state was captured.
double field_angle(const ActuatorState& state, double t);

/// Actuator state after `dt` seconds of rotation (phase wrapped into [0, 2π)).
ActuatorState advance(const ActuatorState& state, double dt);

/// Dipole moment giving `field` on the dipole axis at distance `standoff`.
double on_axis_moment_for_field(double field, double standoff);

/// Equivalent actuator dipole reproducing the workspace-centre field at `t`.
DipoleSource equivalent_dipole(const ActuatorState& state, double t);

}  // namespace mutum::magnetics
