#include "mutum/locomotion.hpp"

#include "mutum/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace mutum {

std::string_view to_string(Environment env) {
    switch (env) {
        case Environment::Dry: return "dry";
        case Environment::Wet: return "wet";
        case Environment::Phantom: return "phantom";
        case Environment::InVivo: return "invivo";
    }
    return "dry";
}

double LocomotionParams::slip_at(double frequency) const {
    if (slip.empty()) {
        return 1.0;
    }
    auto hi = slip.lower_bound(frequency);
    if (hi == slip.end()) {
        return std::prev(hi)->second;
    }
    if (hi == slip.begin() || hi->first == frequency) {
        return hi->second;
    }
    auto lo = std::prev(hi);
    const double u = (frequency - lo->first) / (hi->first - lo->first);
    return lo->second + u * (hi->second - lo->second);
}

void LocomotionParams::validate() const {
    for (const auto& [f, s] : slip) {
        if (!(f >= 0.0) || !std::isfinite(f)) {
            throw ValidationError("slip table frequencies >= 0", std::to_string(f));
        }
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ValidationError("0 <= slip <= 1", "slip(" + std::to_string(f) + " Hz) = " +
                                                        std::to_string(s));
        }
    }
    if (!(friction_coefficient >= 0.0) || !std::isfinite(friction_coefficient)) {
        throw ValidationError("mu >= 0", std::to_string(friction_coefficient));
    }
    if (!(adhesion_stress >= 0.0) || !std::isfinite(adhesion_stress)) {
        throw ValidationError("adhesion_stress >= 0", std::to_string(adhesion_stress));
    }
    if (!(slip_noise >= 0.0 && slip_noise < 1.0)) {
        throw ValidationError("0 <= slip_noise < 1", std::to_string(slip_noise));
    }
}

LocomotionParams default_params(Environment env) {
    // Friction/adhesion pairs are the output of `mutum-sim calibrate` on
    // anchors/default_anchors.json; slip tables are hand-set so the phantom
    // and in-vivo sweeps show the measured slowdown pattern.
    LocomotionParams p;
    switch (env) {
        case Environment::Dry:
            p.slip = {{2.0, 0.85}, {3.0, 0.85}, {4.0, 0.85}, {5.0, 0.85}};
            p.friction_coefficient = 0.415;
            p.adhesion_stress = 0.0;
            break;
        case Environment::Wet:
            p.slip = {{2.0, 0.75}, {3.0, 0.75}, {4.0, 0.75}, {5.0, 0.75}};
            p.friction_coefficient = 0.8;
            p.adhesion_stress = 2.27;
            break;
        case Environment::Phantom:
            p.slip = {{2.0, 0.60}, {3.0, 0.60}, {4.0, 0.60}, {5.0, 0.60}};
            p.friction_coefficient = 0.8;
            p.adhesion_stress = 2.27;
            break;
        case Environment::InVivo:
            p.slip = {{2.0, 0.30}, {3.0, 0.36}, {4.0, 0.42}, {5.0, 0.58}};
            p.friction_coefficient = 0.8;
            p.adhesion_stress = 2.27;
            break;
    }
    return p;
}

}  // namespace mutum

namespace mutum::locomotion {

namespace {

constexpr double kHalfPi = 0.5 * kPi;
constexpr double kWorkspaceRadius = 37.5e-3;
constexpr double kMaxDt = 1e-2;

struct QuarterShape {
    double a;  // side lying on the substrate at the start of the quarter
    double b;  // the other side
};

QuarterShape shape_for(const robot::MicrorobotDesign& d, std::int64_t k) {
    return (k % 2 == 0) ? QuarterShape{d.length, d.height} : QuarterShape{d.height, d.length};
}

// Centre relative to the pivot edge, in (forward, normal) coordinates.
double centre_forward(const QuarterShape& q, double alpha) {
    return -0.5 * q.a * std::cos(alpha) + 0.5 * q.b * std::sin(alpha);
}

double centre_height(const QuarterShape& q, double alpha) {
    return 0.5 * q.a * std::sin(alpha) + 0.5 * q.b * std::cos(alpha);
}

double lever_arm(const QuarterShape& q, double alpha, double slope) {
    return 0.5 * q.a * std::cos(alpha - slope) + 0.5 * q.b * std::sin(slope - alpha);
}

// Peak lever arm over [a0, a1]; the arm is R cos(α - α*) with α* = slope - atan2(b, a).
double max_lever_arm(const QuarterShape& q, double a0, double a1, double slope) {
    const double peak_at = slope - std::atan2(q.b, q.a);
    if (peak_at >= a0 && peak_at <= a1) {
        return 0.5 * std::hypot(q.a, q.b);
    }
    return std::max(lever_arm(q, a0, slope), lever_arm(q, a1, slope));
}

// Largest α reachable from 0 inside the quarter before the gravity torque
// exceeds `tau_max`.
double rocking_limit(const QuarterShape& q, double slope, double weight, double tau_max) {
    if (weight * lever_arm(q, 0.0, slope) > tau_max) {
        return 0.0;
    }
    const double radius = 0.5 * std::hypot(q.a, q.b);
    const double peak_at = slope - std::atan2(q.b, q.a);
    if (peak_at <= 0.0 || weight * radius <= tau_max) {
        return kHalfPi;
    }
    return std::clamp(peak_at - std::acos(tau_max / (weight * radius)), 0.0, kHalfPi);
}

double wrap_two_pi(double x) {
    double r = std::fmod(x, 2.0 * kPi);
    if (r < 0.0) r += 2.0 * kPi;
    return r;
}

Contact contact_for(std::int64_t k, double alpha) {
    if (alpha != 0.0) return Contact::Pivoting;
    return (k % 2 == 0) ? Contact::FaceL : Contact::FaceH;
}

double uniform_pm1(std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 eng(seed * 0x9E3779B97F4A7C15ULL + index);
    return static_cast<double>(eng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double normal_load(const Robot& robot, const LocomotionParams& params,
                   const magnetics::ActuatorState& actuator, const Quat& orientation,
                   const Vec3& normal) {
    double w = robot.weight();
    if (params.include_magnetic_force) {
        const auto field = magnetics::actuator_field(actuator, 0.0);
        const Vec3 m = robot.design.magnet.moment() *
                       (orientation * robot.design.magnet.moment_direction_body());
        const Vec3 f = magnetics::magnetic_force(m, field.gradB);
        w = std::max(0.0, w - f.dot(normal));
    }
    return w;
}

bool grip_holds(double slope, double weight, const LocomotionParams& params,
                const robot::MicrorobotDesign& design) {
    if (slope <= 0.0) {
        return true;
    }
    const double adhesion = params.adhesion_stress * design.contact_area() / weight;
    return std::tan(slope) <= params.friction_coefficient + adhesion;
}

Quat orientation_for(const ContactFrame& frame, double tumble_phase) {
    Eigen::Matrix3d base;
    base.col(0) = frame.forward;
    base.col(1) = frame.axis;
    base.col(2) = frame.normal;
    Quat q = Quat(Eigen::AngleAxisd(tumble_phase, frame.axis)) * Quat(base);
    q.normalize();
    return q;
}

ContactFrame frame_at(const scene::Scene& scene, const Vec3& position, double arc_length,
                      const Vec3& heading) {
    ContactFrame f;
    if (scene.has_lumen()) {
        const auto& lumen = *scene.lumen;
        const auto contact = scene::constrain_to_lumen(lumen.point_at(arc_length), lumen, 0.0);
        const Vec3 tangent = lumen.tangent_at(arc_length);
        const double sign = heading.dot(tangent) >= 0.0 ? 1.0 : -1.0;
        f.normal = contact.normal;
        f.forward = (sign * tangent - (sign * tangent).dot(f.normal) * f.normal).normalized();
        f.contact_point = contact.position;
    } else {
        const scene::Plane plane = scene.plane();
        f.normal = plane.normal;
        Vec3 fwd = heading - heading.dot(f.normal) * f.normal;
        if (fwd.norm() < 1e-12) {
            fwd = plane.uphill;
        }
        f.forward = fwd.normalized();
        f.contact_point = position - (position - plane.origin).dot(f.normal) * f.normal;
    }
    f.axis = f.normal.cross(f.forward);
    f.slope = std::asin(std::clamp(f.forward.z(), -1.0, 1.0));
    return f;
}

void check_workspace(const Vec3& p) {
    if (std::hypot(p.x(), p.y()) > kWorkspaceRadius) {
        throw OutOfWorkspace("robot left the 75 mm actuator workspace at (" + std::to_string(p.x()) +
                             ", " + std::to_string(p.y()) + ") m");
    }
}

void write_double(std::ostream& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

}  // namespace

std::string_view to_string(Contact contact) {
    switch (contact) {
        case Contact::FaceL: return "face_l";
        case Contact::FaceH: return "face_h";
        case Contact::Pivoting: return "pivoting";
        case Contact::Free: return "free";
    }
    return "free";
}

ContactFrame contact_frame(const RobotState& state, const magnetics::ActuatorState& actuator,
                           const scene::Scene& scene) {
    return frame_at(scene, state.position, state.arc_length, actuator.heading_direction());
}

RobotState initial_state(const scene::Scene& scene, const Robot& robot,
                         const magnetics::ActuatorState& actuator, const Vec3& anchor,
                         double arc_length) {
    RobotState s;
    s.arc_length = scene.has_lumen() ? arc_length : 0.0;
    const ContactFrame frame = frame_at(scene, anchor, s.arc_length, actuator.heading_direction());
    const QuarterShape q = shape_for(robot.design, 0);
    s.position = frame.contact_point + centre_height(q, 0.0) * frame.normal;
    s.orientation = orientation_for(frame, 0.0);
    s.contact = Contact::FaceL;
    s.stepout_field_ref = actuator.phase;
    return s;
}

double pivot_lever_arm(const robot::MicrorobotDesign& design, std::int64_t pivot_index,
                       double pivot_angle, double slope) {
    return lever_arm(shape_for(design, pivot_index), pivot_angle, slope);
}

double required_pivot_torque(const RobotState& state, const scene::Scene& scene,
                             const robot::MicrorobotDesign& design,
                             const robot::PayloadSpec& payload) {
    if (state.contact == Contact::Free) {
        throw NoContact("robot is not in contact with the substrate");
    }
    magnetics::ActuatorState heading_only;
    // Recover the travel direction from the body's forward axis at phase 0.
    const Vec3 body_x = state.orientation * Vec3::UnitX();
    const Vec3 body_z = state.orientation * Vec3::UnitZ();
    const Vec3 fwd = std::cos(state.tumble_phase) * body_x + std::sin(state.tumble_phase) * body_z;
    heading_only.heading = std::atan2(fwd.y(), fwd.x());
    const ContactFrame frame = contact_frame(state, heading_only, scene);
    const double w = robot::robot_mass(design, payload) * kGravity;
    return w * pivot_lever_arm(design, state.pivot_index, state.pivot_angle, frame.slope);
}

double worst_case_pivot_torque(const robot::MicrorobotDesign& design,
                               const robot::PayloadSpec& payload) {
    return robot::robot_mass(design, payload) * kGravity * design.half_diagonal();
}

bool climb_feasible(double incline_rad, const LocomotionParams& params,
                    const robot::MicrorobotDesign& design, const robot::PayloadSpec& payload) {
    const double w = robot::robot_mass(design, payload) * kGravity;
    return grip_holds(incline_rad, w, params, design);
}

double pivot_slip(const LocomotionParams& params, double frequency, std::int64_t pivot_index,
                  std::uint64_t noise_seed) {
    double s = params.slip_at(frequency);
    if (params.slip_noise > 0.0) {
        s *= 1.0 + params.slip_noise * uniform_pm1(noise_seed, static_cast<std::uint64_t>(pivot_index));
    }
    return std::clamp(s, 0.0, 1.0);
}

RobotState step(const RobotState& state, const magnetics::ActuatorState& actuator,
                const scene::Scene& scene, const Robot& robot, const LocomotionParams& params,
                double dt, std::uint64_t noise_seed) {
    if (!(dt > 0.0 && dt <= kMaxDt)) {
        throw InvalidTimestep("dt must lie in (0, 10 ms], got " + std::to_string(dt));
    }
    RobotState next = state;
    next.t = state.t + dt;
    const double f = actuator.rotation_frequency;
    if (!(f > 0.0)) {
        return next;
    }

    const ContactFrame frame = contact_frame(state, actuator, scene);
    const double weight = normal_load(robot, params, actuator, state.orientation, frame.normal);
    const double tau_max = robot.design.magnet.moment() * actuator.field_magnitude_at_workspace;
    const bool grip = grip_holds(frame.slope, weight, params, robot.design);
    const auto slip_for = [&](std::int64_t k) {
        return grip ? pivot_slip(params, f, k, noise_seed) : 0.0;
    };
    const double dtheta = 2.0 * kPi * f * dt;

    std::int64_t k = state.pivot_index;
    double alpha = state.pivot_angle;
    double du = 0.0;
    bool synced = state.synchronized;

    if (!synced) {
        // Resynchronise once the rest of the current quarter is within reach.
        const QuarterShape q = shape_for(robot.design, k);
        if (weight * max_lever_arm(q, alpha, kHalfPi, frame.slope) <= tau_max) {
            synced = true;
        }
    }

    if (synced) {
        double remaining = dtheta;
        bool stepped_out = false;
        while (remaining > 0.0) {
            const QuarterShape q = shape_for(robot.design, k);
            const double room = kHalfPi - alpha;
            const bool crosses = remaining >= room;
            const double a1 = crosses ? kHalfPi : alpha + remaining;
            if (weight * max_lever_arm(q, alpha, a1, frame.slope) > tau_max) {
                // Torque deficit: the robot drops back onto the face it
                // started this quarter on and rocks from there.
                du += slip_for(k) * (centre_forward(q, 0.0) - centre_forward(q, alpha));
                alpha = 0.0;
                stepped_out = true;
                break;
            }
            du += slip_for(k) * (centre_forward(q, a1) - centre_forward(q, alpha));
            if (crosses) {
                remaining -= room;
                ++k;
                alpha = 0.0;
            } else {
                remaining = 0.0;
                alpha = a1;
            }
        }
        if (stepped_out) {
            next.synchronized = false;
            next.stepout_field_ref = magnetics::field_angle(actuator, dt);
            next.tumble_phase = static_cast<double>(k) * kHalfPi;
        } else {
            next.synchronized = true;
            next.tumble_phase = state.tumble_phase + dtheta;
        }
    } else {
        const QuarterShape q = shape_for(robot.design, k);
        const double limit = rocking_limit(q, frame.slope, weight, tau_max);
        const double psi = wrap_two_pi(magnetics::field_angle(actuator, dt) - state.stepout_field_ref);
        const double target = psi <= kPi ? std::min(psi, limit) : 0.0;
        du += slip_for(k) * (centre_forward(q, target) - centre_forward(q, alpha));
        alpha = target;
        next.synchronized = false;
        next.tumble_phase = static_cast<double>(k) * kHalfPi + alpha;
    }

    next.pivot_index = k;
    next.pivot_angle = alpha;
    next.contact = contact_for(k, alpha);

    const QuarterShape q = shape_for(robot.design, k);
    const double height = centre_height(q, alpha);
    if (scene.has_lumen()) {
        const Vec3 tangent = scene.lumen->tangent_at(state.arc_length);
        const double sign = frame.forward.dot(tangent) >= 0.0 ? 1.0 : -1.0;
        next.arc_length = state.arc_length + sign * du;
        const auto& lumen = *scene.lumen;
        const auto contact =
            scene::constrain_to_lumen(lumen.point_at(next.arc_length), lumen, height);
        next.position = contact.position;
    } else {
        next.arc_length = state.arc_length + du;
        next.position = frame.contact_point + du * frame.forward + height * frame.normal;
    }
    check_workspace(next.position);

    const ContactFrame next_frame = frame_at(scene, next.position, next.arc_length,
                                             actuator.heading_direction());
    next.orientation = orientation_for(next_frame, next.tumble_phase);
    next.lag = std::asin(std::clamp(weight * lever_arm(q, alpha, frame.slope) / tau_max, -1.0, 1.0));
    return next;
}

double average_velocity(const Trajectory& traj) {
    if (traj.samples.size() < 2) {
        throw TooFewSamples("average velocity needs at least two samples");
    }
    const auto& first = traj.samples.front();
    const auto& last = traj.samples.back();
    Vec3 disp = last.position - first.position;
    disp.z() = 0.0;
    Vec3 heading = traj.heading;
    heading.z() = 0.0;
    heading.normalize();
    return disp.dot(heading) / (last.t - first.t);
}

Trajectory simulate(const RobotState& start, magnetics::ActuatorState actuator,
                    const scene::Scene& scene, const Robot& robot, const LocomotionParams& params,
                    double duration, double dt, std::uint64_t noise_seed) {
    Trajectory traj;
    traj.dt = dt;
    Vec3 heading = contact_frame(start, actuator, scene).forward;
    heading.z() = 0.0;
    traj.heading = heading.norm() > 1e-12 ? heading.normalized() : actuator.heading_direction();
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    traj.samples.reserve(steps + 1);
    traj.samples.push_back(start);
    RobotState state = start;
    for (std::size_t i = 0; i < steps; ++i) {
        state = step(state, actuator, scene, robot, params, dt, noise_seed);
        // Keep the clock on the fixed grid rather than accumulating dt.
        state.t = start.t + static_cast<double>(i + 1) * dt;
        actuator = magnetics::advance(actuator, dt);
        traj.samples.push_back(state);
    }
    return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,x,y,z,qw,qx,qy,qz,phase,synchronized\n";
    for (const auto& s : traj.samples) {
        const double row[] = {s.t,
                              s.position.x(),
                              s.position.y(),
                              s.position.z(),
                              s.orientation.w(),
                              s.orientation.x(),
                              s.orientation.y(),
                              s.orientation.z(),
                              s.tumble_phase};
        for (double v : row) {
            write_double(out, v);
            out << ',';
        }
        out << (s.synchronized ? 1 : 0) << '\n';
    }
}

RobotState default_start(const scene::Scene& scene, const Robot& robot,
                         const magnetics::ActuatorState& actuator) {
    if (scene.has_lumen()) {
        return initial_state(scene, robot, actuator, Vec3::Zero(), 2e-3);
    }
    if (scene.kind == scene::SceneKind::Incline) {
        const scene::Plane plane = scene.plane();
        return initial_state(scene, robot, actuator, -15e-3 * plane.uphill);
    }
    return initial_state(scene, robot, actuator, -20e-3 * actuator.heading_direction());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::mt19937_64 eng(seed ^ ((index + 1) * 0xD1B54A32D192ED03ULL));
    return eng();
}

namespace {

double lumen_heading(const scene::Scene& scene) {
    if (!scene.has_lumen()) return 0.0;
    const Vec3 t = scene.lumen->tangent_at(0.0);
    return std::atan2(t.y(), t.x());
}

}  // namespace

PanelResult nine_panel_velocity(const Robot& robot, const scene::Scene& scene, double f,
                                std::uint64_t seed, const PanelOptions& options) {
    magnetics::ActuatorState act;
    act.rotation_frequency = f;
    act.heading = lumen_heading(scene);
    act.field_magnitude_at_workspace = options.field;
    act.validate();

    PanelResult out;
    out.frequency = f;
    out.trials.reserve(9);
    for (std::uint64_t r = 0; r < 3; ++r) {
        for (std::uint64_t i = 0; i < 3; ++i) {
            const auto trial_seed = derive_seed(seed, r * 3 + i);
            const RobotState start = default_start(scene, robot, act);
            const Trajectory traj = simulate(start, act, scene, robot, scene.locomotion_params,
                                             options.duration, options.dt, trial_seed);
            out.trials.push_back(average_velocity(traj));
        }
    }
    double sum = 0.0;
    out.min = std::numeric_limits<double>::infinity();
    out.max = -std::numeric_limits<double>::infinity();
    for (double v : out.trials) {
        sum += v;
        out.min = std::min(out.min, v);
        out.max = std::max(out.max, v);
    }
    out.mean = sum / static_cast<double>(out.trials.size());
    return out;
}

LadderResult incline_ladder(const Robot& robot, const LocomotionParams& params, double f,
                            scene::Fluid fluid) {
    constexpr double kClimbTarget = 10e-3;
    constexpr double kTimeLimit = 2.0;
    constexpr double kDt = 1e-3;

    LadderResult out;
    for (int deg = 0; deg <= 60; deg += 5) {
        scene::Scene sc;
        sc.name = "incline_ladder";
        sc.kind = scene::SceneKind::Incline;
        sc.incline_angle_deg = deg;
        sc.fluid = fluid;
        sc.locomotion_params = params;
        sc.validate();

        LadderRung rung{static_cast<double>(deg), false, false, 0.0};
        rung.feasible = climb_feasible(sc.incline_angle(), params, robot.design, robot.payload);

        magnetics::ActuatorState act;
        act.rotation_frequency = f;
        act.heading = 0.0;
        RobotState state = default_start(sc, robot, act);
        const auto steps = static_cast<int>(std::llround(kTimeLimit / kDt));
        for (int i = 0; i < steps && state.arc_length < kClimbTarget; ++i) {
            state = step(state, act, sc, robot, params, kDt, derive_seed(0, static_cast<std::uint64_t>(deg)));
            act = magnetics::advance(act, kDt);
        }
        rung.climbed = state.arc_length;
        rung.completed = state.arc_length >= kClimbTarget;
        out.rungs.push_back(rung);
        if (!(rung.feasible && rung.completed)) {
            break;
        }
        out.theta_max_deg = deg;
        out.any_passed = true;
    }
    return out;
}

}  // namespace mutum::locomotion
