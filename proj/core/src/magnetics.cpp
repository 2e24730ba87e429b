#include "mutum/magnetics.hpp"

#include "mutum/errors.hpp"

#include <cmath>
#include <string>

namespace mutum::magnetics {

namespace {

constexpr double kMinDipoleDistance = 1e-4;
constexpr double kFieldTolerance = 1e-12;

}  // namespace

RobotMagnet::RobotMagnet(double edge_length, double remanence, Vec3 moment_direction_body)
    : edge_length_(edge_length), remanence_(remanence), direction_body_(moment_direction_body) {
    if (!(edge_length > 0.0)) {
        throw ValidationError("magnet.edge_length > 0", std::to_string(edge_length));
    }
    if (!(remanence > 0.0)) {
        throw ValidationError("magnet.remanence > 0", std::to_string(remanence));
    }
    if (std::abs(direction_body_.norm() - 1.0) > 1e-12) {
        throw ValidationError("|magnet.moment_direction_body| = 1", "not a unit vector");
    }
    moment_ = remanence_ * volume() / kMu0;
}

void ActuatorState::validate() const {
    if (!(rotation_frequency >= 0.0 && rotation_frequency <= kMaxFrequency)) {
        throw ValidationError("0 <= rotation_frequency <= 5 Hz",
                              std::to_string(rotation_frequency));
    }
    if (!(field_magnitude_at_workspace >= kMinField - kFieldTolerance &&
          field_magnitude_at_workspace <= kMaxField + kFieldTolerance)) {
        throw ValidationError("field_magnitude_at_workspace in [10, 30] mT",
                              std::to_string(field_magnitude_at_workspace));
    }
    if (!(standoff > kMinDipoleDistance)) {
        throw ValidationError("standoff > 0.1 mm", std::to_string(standoff));
    }
    if (!std::isfinite(heading) || !std::isfinite(phase)) {
        throw ValidationError("finite heading and phase", "non-finite actuator angle");
    }
}

Vec3 ActuatorState::heading_direction() const {
    return {std::cos(heading), std::sin(heading), 0.0};
}

void validate(const DipoleSource& source) {
    if (!(source.moment_magnitude > 0.0)) {
        throw ValidationError("moment_magnitude > 0", std::to_string(source.moment_magnitude));
    }
    if (std::abs(source.moment_direction.norm() - 1.0) > 1e-12) {
        throw ValidationError("|moment_direction| = 1", "not a unit vector");
    }
}

FieldSample dipole_field(const DipoleSource& source, const Vec3& point) {
    const Vec3 r = point - source.position;
    const double dist = r.norm();
    if (!(dist >= kMinDipoleDistance)) {
        throw SingularPoint("field point within 0.1 mm of dipole (distance " +
                            std::to_string(dist) + " m)");
    }
    const Vec3 m = source.moment();
    const double k = kMu0 / (4.0 * kPi);
    const double r2 = dist * dist;
    const double r3 = r2 * dist;
    const double r5 = r3 * r2;
    const double mr = m.dot(r);

    FieldSample out;
    out.B = k * (3.0 * mr * r / r5 - m / r3);
    // d/dx_j of 3 (m·r) r_i / r^5 - m_i / r^3
    out.gradB = k * (3.0 * (r * m.transpose() + m * r.transpose() + mr * Mat3::Identity()) / r5 -
                     15.0 * mr * (r * r.transpose()) / (r5 * r2));
    return out;
}

Vec3 magnetic_torque(const Vec3& robot_moment, const Vec3& B) {
    return robot_moment.cross(B);
}

Vec3 magnetic_force(const Vec3& robot_moment, const Mat3& gradB) {
    return gradB * robot_moment;
}

double field_angle(const ActuatorState& state, double t) {
    return state.phase + 2.0 * kPi * state.rotation_frequency * t;
}

ActuatorState advance(const ActuatorState& state, double dt) {
    ActuatorState next = state;
    next.phase = std::fmod(field_angle(state, dt), 2.0 * kPi);
    if (next.phase < 0.0) {
        next.phase += 2.0 * kPi;
    }
    return next;
}

double on_axis_moment_for_field(double field, double standoff) {
    return field * 2.0 * kPi * standoff * standoff * standoff / kMu0;
}

DipoleSource equivalent_dipole(const ActuatorState& state, double t) {
    // Dipole sits on the vertical axis below the centre, so r̂ = +z and
    // B = k/d³ (3 m_z ẑ - m): B_z = 2k m_z/d³, B_⊥ = -k m_⊥/d³.
    const double angle = field_angle(state, t);
    const Vec3 b_dir = std::cos(angle) * Vec3::UnitZ() + std::sin(angle) * state.heading_direction();
    const Vec3 B = state.field_magnitude_at_workspace * b_dir;
    const double d = state.standoff;
    const double scale = d * d * d * 4.0 * kPi / kMu0;
    Vec3 m(-B.x() * scale, -B.y() * scale, 0.5 * B.z() * scale);

    DipoleSource src;
    src.moment_magnitude = m.norm();
    src.moment_direction = m / m.norm();
    src.position = Vec3(0.0, 0.0, -d);
    return src;
}

FieldSample actuator_field(const ActuatorState& state, double t) {
    const double angle = field_angle(state, t);
    const Vec3 b_dir = std::cos(angle) * Vec3::UnitZ() + std::sin(angle) * state.heading_direction();

    FieldSample out = dipole_field(equivalent_dipole(state, t), Vec3::Zero());
    // Replace B by the exact rotation so |B| carries no rounding from the
    // dipole round trip.
    out.B = state.field_magnitude_at_workspace * b_dir;
    return out;
}

}  // namespace mutum::magnetics
