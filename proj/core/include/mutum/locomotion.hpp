#pragma once

#include "mutum/magnetics.hpp"
#include "mutum/microrobot.hpp"
#include "mutum/params.hpp"
#include "mutum/scene.hpp"

#include <Eigen/Geometry>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mutum::locomotion {

using Quat = Eigen::Quaterniond;

enum class Contact { FaceL, FaceH, Pivoting, Free };

std::string_view to_string(Contact contact);

/// Quasi-static pose of the tumbling robot.
///
/// The body rotates about its width axis by `tumble_phase`; the rotation is
/// split into successive quarter turns, each a pivot about the leading bottom
/// edge. Quarter `pivot_index` starts with the robot lying on its long face
/// (even index) or its end face (odd index) and `pivot_angle` is the rotation
/// inside the current quarter, in [0, π/2).
struct RobotState {
    double t = 0.0;
    Vec3 position = Vec3::Zero();  // geometric centre
    Quat orientation = Quat::Identity();
    double tumble_phase = 0.0;
    std::int64_t pivot_index = 0;
    double pivot_angle = 0.0;
    Contact contact = Contact::FaceL;
    bool synchronized = true;
    /// Angle by which the field leads the body at torque balance.
    double lag = 0.0;
    /// Distance travelled along the lumen (lumen scenes) or along the
    /// substrate (planar scenes), signed.
    double arc_length = 0.0;
    /// Field angle at which the robot last fell back after stepping out.
    double stepout_field_ref = 0.0;

    bool operator==(const RobotState&) const = default;
};

/// Design and payload together; everything mass-dependent reads from here.
struct Robot {
    robot::MicrorobotDesign design;
    robot::PayloadSpec payload;

    double mass() const { return robot::robot_mass(design, payload); }
    double weight() const { return mass() * kGravity; }
};

struct Trajectory {
    double dt = 0.0;
    /// Unit horizontal direction used to project displacement.
    Vec3 heading = Vec3::UnitX();
    std::vector<RobotState> samples;
};

/// Local contact frame of the substrate at the robot.
struct ContactFrame {
    Vec3 forward;   // unit travel direction, tangent to the surface
    Vec3 normal;    // unit, out of the surface
    Vec3 axis;      // tumbling axis, normal × forward
    double slope;   // rad, positive when travel is uphill
    Vec3 contact_point;  // point on the surface below the robot
};

/// Places a robot at rest (lying on its long face, tumble phase 0) on the
/// scene's substrate. Planar scenes use `anchor` as the surface point under
/// the robot; lumen scenes use `arc_length` along the centreline.
RobotState initial_state(const scene::Scene& scene, const Robot& robot,
                         const magnetics::ActuatorState& actuator, const Vec3& anchor = Vec3::Zero(),
                         double arc_length = 0.0);

ContactFrame contact_frame(const RobotState& state, const magnetics::ActuatorState& actuator,
                           const scene::Scene& scene);

/// One quasi-static step of duration `dt` (0 < dt <= 10 ms). `noise_seed`
/// selects the per-pivot slip perturbation stream.
///
/// Throws InvalidTimestep, OutOfWorkspace (centre more than 37.5 mm from the
/// workspace axis) and OffCenterlineEnds.
RobotState step(const RobotState& state, const magnetics::ActuatorState& actuator,
                const scene::Scene& scene, const Robot& robot, const LocomotionParams& params,
                double dt, std::uint64_t noise_seed = 0);

/// Gravity torque about the current pivot edge, W times the horizontal lever
/// arm of the centre of mass; positive when it resists forward tumbling.
/// Throws NoContact for a free robot.
double required_pivot_torque(const RobotState& state, const scene::Scene& scene,
                             const robot::MicrorobotDesign& design,
                             const robot::PayloadSpec& payload);

/// Lever-arm form used by `required_pivot_torque`: quarter `pivot_index`,
/// rotation `pivot_angle` inside it, substrate slope `slope` (rad).
double pivot_lever_arm(const robot::MicrorobotDesign& design, std::int64_t pivot_index,
                       double pivot_angle, double slope);

/// Largest gravity torque any pose can demand, W·√(L² + h²)/2.
double worst_case_pivot_torque(const robot::MicrorobotDesign& design,
                               const robot::PayloadSpec& payload);

/// tan θ <= μ + σ·A/W.
bool climb_feasible(double incline_rad, const LocomotionParams& params,
                    const robot::MicrorobotDesign& design,
                    const robot::PayloadSpec& payload = robot::empty_payload());

/// Effective slip for pivot `pivot_index` at `frequency`, noise included,
/// clamped into [0, 1].
double pivot_slip(const LocomotionParams& params, double frequency, std::int64_t pivot_index,
                  std::uint64_t noise_seed);

/// Net horizontal displacement along the trajectory heading divided by the
/// elapsed time. Throws TooFewSamples for fewer than two samples.
double average_velocity(const Trajectory& traj);

/// Steps `duration` seconds from `start`, recording every state.
Trajectory simulate(const RobotState& start, magnetics::ActuatorState actuator,
                    const scene::Scene& scene, const Robot& robot, const LocomotionParams& params,
                    double duration, double dt = 1e-3, std::uint64_t noise_seed = 0);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

struct PanelOptions {
    double duration = 1.0;  // s, a whole number of field revolutions at integer f
    double dt = 1e-3;
    double field = 0.020;
};

struct PanelResult {
    double frequency = 0.0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    /// 3 robots × 3 trials, robot-major.
    std::vector<double> trials;
};

/// Start pose used by the experiment runners for a given scene.
RobotState default_start(const scene::Scene& scene, const Robot& robot,
                         const magnetics::ActuatorState& actuator);

/// Nine-trial velocity panel (3 robots × 3 trials) at frequency `f`.
PanelResult nine_panel_velocity(const Robot& robot, const scene::Scene& scene, double f,
                                std::uint64_t seed, const PanelOptions& options = {});

struct LadderRung {
    double angle_deg;
    bool feasible;      // friction/adhesion condition
    bool completed;     // simulated 10 mm climb finished in time
    double climbed;     // m along the slope
};

struct LadderResult {
    double theta_max_deg = 0.0;
    bool any_passed = false;
    std::vector<LadderRung> rungs;
};

/// 5° incline ladder at `f` (default 5 Hz); stops at the first failure.
LadderResult incline_ladder(const Robot& robot, const LocomotionParams& params, double f = 5.0,
                            scene::Fluid fluid = scene::Fluid::DIWater);

/// Seed for trial `index` derived from a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace mutum::locomotion
