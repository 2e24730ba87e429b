#pragma once

#include "mutum/locomotion.hpp"
#include "mutum/magnetics.hpp"
#include "mutum/microrobot.hpp"
#include "mutum/scene.hpp"
#include "mutum/thermics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mutum::teleop {

struct Command {
    enum class Type {
        SetFrequency,
        SetHeading,
        StartRotation,
        StopRotation,
        TriggerFus,
        Reset,
        LoadScene
    };

    Type type = Type::StartRotation;
    std::int64_t seq = 0;
    /// Hz for SetFrequency, rad for SetHeading, s for TriggerFus.
    double value = 0.0;
    /// LoadScene target name.
    std::string scene_name;
    /// Filled in when the session resolves a LoadScene, so logs are
    /// self-contained.
    std::optional<scene::Scene> resolved_scene;
};

std::string_view to_string(Command::Type type);

/// Parses one wire message, e.g. {"seq":4,"cmd":"set_frequency","hz":3.0}.
/// Throws MalformedCommand.
Command parse_command(std::string_view line);
std::string to_json(const Command& cmd);

struct Snapshot {
    double t = 0.0;
    Vec3 position = Vec3::Zero();
    locomotion::Quat orientation = locomotion::Quat::Identity();
    double phase = 0.0;
    bool synchronized = true;
    double arc_length = 0.0;
    double temperature_c = 0.0;
    double released = 0.0;
    double frequency = 0.0;
    double heading = 0.0;
    bool rotating = false;
    bool fus_active = false;
    std::uint64_t dropped = 0;
    std::int64_t ack = -1;
    std::uint64_t tick = 0;
    std::string scene;
    std::string event;

    bool operator==(const Snapshot&) const = default;
};

/// One-line JSON in the wire schema.
std::string to_json(const Snapshot& s);
Snapshot parse_snapshot(std::string_view line);

struct SessionConfig {
    scene::Scene scene;
    robot::DesignKind design = robot::DesignKind::TP;
    int tick_rate = 100;     // Hz
    int snapshot_rate = 30;  // Hz
    std::uint64_t seed = 0;
    double field = 0.020;    // T
    /// Where LoadScene looks up `<name>.json`.
    std::filesystem::path scene_dir;

    void validate() const;
};

class SessionRecorder;

/// Deterministic simulation loop. Commands are queued by `submit` and applied
/// at the start of the next `tick` in sequence order.
class Session {
public:
    explicit Session(SessionConfig config);

    /// Validates and queues a command. Throws MalformedCommand when the
    /// sequence number does not increase or a field is out of range.
    void submit(Command cmd);

    /// Advances one tick; returns a snapshot on emission ticks.
    std::optional<Snapshot> tick();

    /// Pose of the latest tick, emitted or not.
    Snapshot current() const;

    std::uint64_t ticks() const { return tick_; }
    double dt() const { return 1.0 / config_.tick_rate; }
    const SessionConfig& config() const { return config_; }
    const locomotion::RobotState& robot_state() const { return robot_; }

    void set_recorder(SessionRecorder* recorder);

private:
    void apply(const Command& cmd);
    void restart(const scene::Scene& scene);

    SessionConfig config_;
    scene::Scene scene_;
    locomotion::Robot robot_spec_;
    magnetics::ActuatorState actuator_;
    locomotion::RobotState robot_;
    thermics::ThermalState heat_;
    thermics::ThermalParams thermal_params_;
    std::optional<thermics::FusConfig> fus_;
    double fus_started_ = 0.0;
    thermics::PayloadState payload_;
    double frequency_ = 0.0;
    bool rotating_ = false;
    std::uint64_t tick_ = 0;
    std::int64_t last_seq_ = -1;
    std::int64_t last_applied_ = -1;
    std::vector<Command> pending_;
    std::string event_;
    SessionRecorder* recorder_ = nullptr;
};

/// JSON-lines log: a header, then commands tagged with the tick they were
/// applied at, emitted snapshots, and an end marker with the final pose.
class SessionRecorder {
public:
    explicit SessionRecorder(std::ostream& out);

    void header(const SessionConfig& config);
    void command(std::uint64_t tick, const Command& cmd);
    void snapshot(const Snapshot& s);
    void end(const Session& session);

private:
    std::ostream& out_;
};

struct ReplayResult {
    std::uint64_t ticks = 0;
    std::size_t commands = 0;
    std::vector<Snapshot> snapshots;
    /// Count of regenerated snapshots that differ from the recorded ones.
    std::size_t mismatches = 0;
    std::optional<Snapshot> final_recorded;
    Snapshot final_replayed;
    bool final_pose_identical = true;
};

/// Re-runs a recorded session. Throws ReplayError naming the offending line.
ReplayResult replay(std::istream& log);
ReplayResult replay_file(const std::filesystem::path& path);

}  // namespace mutum::teleop
