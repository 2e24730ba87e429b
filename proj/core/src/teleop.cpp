#include "mutum/teleop.hpp"

#include "mutum/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace mutum::teleop {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kMaxFusDuration = 600.0;  // s

struct CommandName {
    Command::Type type;
    std::string_view name;
};

constexpr CommandName kCommandNames[] = {
    {Command::Type::SetFrequency, "set_frequency"},
    {Command::Type::SetHeading, "set_heading"},
    {Command::Type::StartRotation, "start_rotation"},
    {Command::Type::StopRotation, "stop_rotation"},
    {Command::Type::TriggerFus, "trigger_fus"},
    {Command::Type::Reset, "reset"},
    {Command::Type::LoadScene, "load_scene"},
};

bool valid_scene_name(const std::string& name) {
    if (name.empty() || name.size() > 64) return false;
    for (const char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-';
        if (!ok) return false;
    }
    return true;
}

double number_field(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        throw MalformedCommand(std::string("missing numeric field \"") + key + "\"");
    }
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) {
        throw MalformedCommand(std::string("non-finite \"") + key + "\"");
    }
    return v;
}

Command command_from(const json& j) {
    if (!j.is_object()) {
        throw MalformedCommand("command must be a JSON object");
    }
    if (!j.contains("seq") || !j.at("seq").is_number_integer()) {
        throw MalformedCommand("missing integer \"seq\"");
    }
    if (!j.contains("cmd") || !j.at("cmd").is_string()) {
        throw MalformedCommand("missing string \"cmd\"");
    }
    Command c;
    c.seq = j.at("seq").get<std::int64_t>();
    const auto name = j.at("cmd").get<std::string>();
    bool known = false;
    for (const auto& n : kCommandNames) {
        if (n.name == name) {
            c.type = n.type;
            known = true;
        }
    }
    if (!known) {
        throw MalformedCommand("unknown command \"" + name + "\"");
    }
    switch (c.type) {
        case Command::Type::SetFrequency: c.value = number_field(j, "hz"); break;
        case Command::Type::SetHeading: c.value = number_field(j, "rad"); break;
        case Command::Type::TriggerFus: c.value = number_field(j, "duration_s"); break;
        case Command::Type::LoadScene:
            if (!j.contains("name") || !j.at("name").is_string()) {
                throw MalformedCommand("missing string \"name\"");
            }
            c.scene_name = j.at("name").get<std::string>();
            if (j.contains("scene")) {
                try {
                    c.resolved_scene = scene::parse_scene(j.at("scene").dump(), c.scene_name);
                } catch (const Error& e) {
                    throw MalformedCommand(std::string("embedded scene: ") + e.what());
                }
            }
            break;
        default: break;
    }
    return c;
}

ordered_json command_object(const Command& c) {
    ordered_json j;
    j["seq"] = c.seq;
    j["cmd"] = std::string(to_string(c.type));
    switch (c.type) {
        case Command::Type::SetFrequency: j["hz"] = c.value; break;
        case Command::Type::SetHeading: j["rad"] = c.value; break;
        case Command::Type::TriggerFus: j["duration_s"] = c.value; break;
        case Command::Type::LoadScene:
            j["name"] = c.scene_name;
            if (c.resolved_scene) {
                j["scene"] = ordered_json::parse(scene::serialize(*c.resolved_scene));
            }
            break;
        default: break;
    }
    return j;
}

ordered_json snapshot_object(const Snapshot& s) {
    ordered_json j;
    j["t"] = s.t;
    j["pos"] = {s.position.x(), s.position.y(), s.position.z()};
    j["phase"] = s.phase;
    j["sync"] = s.synchronized;
    j["arc"] = s.arc_length;
    j["temp_c"] = s.temperature_c;
    j["released"] = s.released;
    j["freq"] = s.frequency;
    j["heading"] = s.heading;
    j["dropped"] = s.dropped;
    j["ack"] = s.ack;
    j["q"] = {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()};
    j["rotating"] = s.rotating;
    j["fus"] = s.fus_active;
    j["tick"] = s.tick;
    j["scene"] = s.scene;
    j["event"] = s.event;
    return j;
}

Snapshot snapshot_from(const json& j) {
    Snapshot s;
    s.t = j.at("t").get<double>();
    const auto& p = j.at("pos");
    s.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    s.phase = j.at("phase").get<double>();
    s.synchronized = j.at("sync").get<bool>();
    s.arc_length = j.at("arc").get<double>();
    s.temperature_c = j.at("temp_c").get<double>();
    s.released = j.at("released").get<double>();
    s.frequency = j.at("freq").get<double>();
    s.heading = j.at("heading").get<double>();
    s.dropped = j.at("dropped").get<std::uint64_t>();
    s.ack = j.at("ack").get<std::int64_t>();
    if (j.contains("q")) {
        const auto& q = j.at("q");
        s.orientation = locomotion::Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                         q.at(2).get<double>(), q.at(3).get<double>());
    }
    s.rotating = j.value("rotating", false);
    s.fus_active = j.value("fus", false);
    s.tick = j.value("tick", std::uint64_t{0});
    s.scene = j.value("scene", std::string());
    s.event = j.value("event", std::string());
    return s;
}

double lumen_heading(const scene::Scene& sc) {
    if (!sc.has_lumen()) return 0.0;
    const Vec3 t = sc.lumen->tangent_at(0.0);
    return std::atan2(t.y(), t.x());
}

}  // namespace

std::string_view to_string(Command::Type type) {
    for (const auto& n : kCommandNames) {
        if (n.type == type) return n.name;
    }
    return "unknown";
}

Command parse_command(std::string_view line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw MalformedCommand(std::string("invalid JSON: ") + e.what());
    }
    try {
        return command_from(j);
    } catch (const json::exception& e) {
        throw MalformedCommand(e.what());
    }
}

std::string to_json(const Command& cmd) {
    return command_object(cmd).dump();
}

std::string to_json(const Snapshot& s) {
    return snapshot_object(s).dump();
}

Snapshot parse_snapshot(std::string_view line) {
    try {
        return snapshot_from(json::parse(line));
    } catch (const json::exception& e) {
        throw ParseError(std::string("snapshot: ") + e.what(), 1, 0);
    }
}

void SessionConfig::validate() const {
    scene.validate();
    if (tick_rate <= 0 || snapshot_rate <= 0 || snapshot_rate > tick_rate) {
        throw ValidationError("0 < snapshot_rate <= tick_rate", std::to_string(snapshot_rate));
    }
    if (1.0 / tick_rate > 1e-2) {
        throw ValidationError("tick_rate >= 100 Hz", std::to_string(tick_rate));
    }
}

Session::Session(SessionConfig config) : config_(std::move(config)) {
    config_.validate();
    thermal_params_ = thermics::default_thermal_params();
    restart(config_.scene);
}

void Session::restart(const scene::Scene& sc) {
    scene_ = sc;
    const auto design = robot::stock_design(config_.design);
    robot_spec_ = {design, robot::filled_payload(design)};
    actuator_ = {};
    actuator_.heading = lumen_heading(scene_);
    actuator_.field_magnitude_at_workspace = config_.field;
    actuator_.validate();
    robot_ = locomotion::default_start(scene_, robot_spec_, actuator_);
    robot_.t = static_cast<double>(tick_) * dt();

    heat_ = {};
    heat_.ambient_c = scene_.temperature_ambient_c;
    heat_.temperature_c = scene_.temperature_ambient_c;
    heat_.capacitance = thermal_params_.capacitance;
    heat_.conductance = thermal_params_.conductance;
    fus_.reset();
    fus_started_ = 0.0;

    payload_ = thermics::make_payload_state(
        robot_spec_.design, robot_spec_.payload,
        thermics::make_wax_cap(thermics::default_melt_curve(), 0.6));
    frequency_ = 0.0;
    rotating_ = false;
}

void Session::set_recorder(SessionRecorder* recorder) {
    recorder_ = recorder;
}

void Session::submit(Command cmd) {
    if (cmd.seq <= last_seq_) {
        throw MalformedCommand("sequence number " + std::to_string(cmd.seq) +
                               " does not exceed " + std::to_string(last_seq_));
    }
    switch (cmd.type) {
        case Command::Type::SetFrequency:
            if (!(cmd.value >= 0.0 && cmd.value <= magnetics::ActuatorState::kMaxFrequency)) {
                throw MalformedCommand("frequency must lie in [0, 5] Hz");
            }
            break;
        case Command::Type::SetHeading:
            if (!std::isfinite(cmd.value)) {
                throw MalformedCommand("heading must be finite");
            }
            break;
        case Command::Type::TriggerFus:
            if (!(cmd.value > 0.0 && cmd.value <= kMaxFusDuration)) {
                throw MalformedCommand("FUS duration must lie in (0, 600] s");
            }
            break;
        case Command::Type::LoadScene:
            if (!cmd.resolved_scene) {
                if (!valid_scene_name(cmd.scene_name)) {
                    throw MalformedCommand("invalid scene name \"" + cmd.scene_name + "\"");
                }
                const auto dir = config_.scene_dir.empty() ? scene::default_scene_dir() : config_.scene_dir;
                try {
                    cmd.resolved_scene = scene::load_scene(dir / (cmd.scene_name + ".json"));
                } catch (const Error& e) {
                    throw MalformedCommand("cannot load scene \"" + cmd.scene_name + "\": " + e.what());
                }
            }
            break;
        default: break;
    }
    last_seq_ = cmd.seq;
    pending_.push_back(std::move(cmd));
}

void Session::apply(const Command& cmd) {
    if (recorder_) {
        recorder_->command(tick_, cmd);
    }
    const double now = static_cast<double>(tick_) * dt();
    switch (cmd.type) {
        case Command::Type::SetFrequency: frequency_ = cmd.value; break;
        case Command::Type::SetHeading: actuator_.heading = cmd.value; break;
        case Command::Type::StartRotation: rotating_ = true; break;
        case Command::Type::StopRotation: rotating_ = false; break;
        case Command::Type::TriggerFus: {
            thermics::FusConfig fus;
            fus.duration = cmd.value;
            fus.absorbed_fraction = thermal_params_.absorbed_fraction;
            fus_ = fus;
            fus_started_ = now;
            break;
        }
        case Command::Type::Reset: restart(scene_); break;
        case Command::Type::LoadScene: restart(*cmd.resolved_scene); break;
    }
    last_applied_ = cmd.seq;
}

std::optional<Snapshot> Session::tick() {
    event_.clear();
    for (const auto& cmd : pending_) {
        apply(cmd);
    }
    pending_.clear();

    const double h = dt();
    actuator_.rotation_frequency = rotating_ ? frequency_ : 0.0;
    try {
        robot_ = locomotion::step(robot_, actuator_, scene_, robot_spec_, scene_.locomotion_params, h,
                                  config_.seed);
    } catch (const OutOfWorkspace&) {
        rotating_ = false;
        robot_.t += h;
        event_ = "halted: workspace boundary";
    } catch (const OffCenterlineEnds&) {
        rotating_ = false;
        robot_.t += h;
        event_ = "halted: end of lumen";
    }
    actuator_ = magnetics::advance(actuator_, h);

    const double now = static_cast<double>(tick_) * h;
    heat_ = thermics::heat_step(heat_, fus_, now - fus_started_, h);
    payload_.cap = thermics::cap_update(payload_.cap, heat_.temperature_c, h);
    payload_ = thermics::release_step(payload_, payload_.cap.breached(), h);

    const auto before = tick_ * static_cast<std::uint64_t>(config_.snapshot_rate) /
                        static_cast<std::uint64_t>(config_.tick_rate);
    ++tick_;
    const auto after = tick_ * static_cast<std::uint64_t>(config_.snapshot_rate) /
                       static_cast<std::uint64_t>(config_.tick_rate);
    if (after == before) {
        return std::nullopt;
    }
    auto snap = current();
    if (recorder_) {
        recorder_->snapshot(snap);
    }
    return snap;
}

Snapshot Session::current() const {
    Snapshot s;
    const double now = static_cast<double>(tick_) * dt();
    s.t = now;
    s.position = robot_.position;
    s.orientation = robot_.orientation;
    s.phase = robot_.tumble_phase;
    s.synchronized = robot_.synchronized;
    s.arc_length = robot_.arc_length;
    s.temperature_c = heat_.temperature_c;
    s.released = payload_.released_fraction();
    s.frequency = frequency_;
    s.heading = actuator_.heading;
    s.rotating = rotating_;
    s.fus_active = fus_ && fus_->absorbed_power(now - fus_started_) > 0.0;
    s.ack = last_applied_;
    s.tick = tick_;
    s.scene = scene_.name;
    s.event = event_;
    return s;
}

SessionRecorder::SessionRecorder(std::ostream& out) : out_(out) {}

void SessionRecorder::header(const SessionConfig& config) {
    ordered_json j;
    j["type"] = "header";
    j["version"] = 1;
    j["design"] = std::string(robot::to_string(config.design));
    j["tick_rate"] = config.tick_rate;
    j["snapshot_rate"] = config.snapshot_rate;
    j["seed"] = config.seed;
    j["field"] = config.field;
    j["scene_name"] = config.scene.name;
    j["scene"] = ordered_json::parse(scene::serialize(config.scene));
    out_ << j.dump() << '\n';
    if (!out_) throw IoError("cannot write session log");
}

void SessionRecorder::command(std::uint64_t tick, const Command& cmd) {
    ordered_json j;
    j["type"] = "cmd";
    j["tick"] = tick;
    const ordered_json body = command_object(cmd);
    for (const auto& [k, v] : body.items()) {
        j[k] = v;
    }
    out_ << j.dump() << '\n';
    if (!out_) throw IoError("cannot write session log");
}

void SessionRecorder::snapshot(const Snapshot& s) {
    out_ << R"({"type":"snap","snapshot":)" << to_json(s) << "}\n";
    if (!out_) throw IoError("cannot write session log");
}

void SessionRecorder::end(const Session& session) {
    out_ << R"({"type":"end","tick":)" << session.ticks() << R"(,"final":)"
         << to_json(session.current()) << "}\n";
    out_.flush();
    if (!out_) throw IoError("cannot write session log");
}

ReplayResult replay(std::istream& log) {
    std::string line;
    std::size_t line_no = 0;
    std::optional<SessionConfig> config;
    std::map<std::uint64_t, std::vector<std::pair<std::size_t, Command>>> commands;
    std::vector<std::pair<std::size_t, std::string>> recorded;
    std::optional<std::uint64_t> end_tick;
    std::uint64_t last_tick = 0;
    ReplayResult result;

    while (std::getline(log, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (end_tick) throw ReplayError(line_no, "content after end marker");
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const json::parse_error& e) {
            throw ReplayError(line_no, std::string("invalid JSON: ") + e.what());
        }
        try {
            const auto type = j.at("type").get<std::string>();
            if (!config) {
                if (type != "header") throw ReplayError(line_no, "first record must be the header");
                if (j.at("version").get<int>() != 1) throw ReplayError(line_no, "unsupported version");
                SessionConfig c;
                c.scene = scene::parse_scene(j.at("scene").dump(), j.value("scene_name", std::string()));
                c.design = robot::parse_design_kind(j.at("design").get<std::string>());
                c.tick_rate = j.at("tick_rate").get<int>();
                c.snapshot_rate = j.at("snapshot_rate").get<int>();
                c.seed = j.at("seed").get<std::uint64_t>();
                c.field = j.at("field").get<double>();
                c.validate();
                config = c;
            } else if (type == "cmd") {
                const auto tick = j.at("tick").get<std::uint64_t>();
                if (tick < last_tick) throw ReplayError(line_no, "command ticks go backwards");
                last_tick = tick;
                commands[tick].emplace_back(line_no, command_from(json::parse(line)));
            } else if (type == "snap") {
                const auto& s = j.at("snapshot");
                last_tick = std::max(last_tick, s.at("tick").get<std::uint64_t>());
                recorded.emplace_back(line_no, s.dump());
            } else if (type == "end") {
                end_tick = j.at("tick").get<std::uint64_t>();
                result.final_recorded = snapshot_from(json::parse(j.at("final").dump()));
            } else {
                throw ReplayError(line_no, "unknown record type \"" + type + "\"");
            }
        } catch (const ReplayError&) {
            throw;
        } catch (const json::exception& e) {
            throw ReplayError(line_no, e.what());
        } catch (const Error& e) {
            throw ReplayError(line_no, e.what());
        }
    }
    if (!config) {
        throw ReplayError(line_no + 1, "missing header");
    }

    Session session(*config);
    std::uint64_t stop = end_tick.value_or(0);
    if (!end_tick) {
        if (!commands.empty()) stop = std::max(stop, commands.rbegin()->first + 1);
        stop = std::max(stop, last_tick);
    }
    for (std::uint64_t t = 0; t < stop; ++t) {
        if (const auto it = commands.find(t); it != commands.end()) {
            for (auto& [ln, cmd] : it->second) {
                try {
                    session.submit(cmd);
                } catch (const MalformedCommand& e) {
                    throw ReplayError(ln, e.what());
                }
                ++result.commands;
            }
        }
        if (auto snap = session.tick()) {
            const auto idx = result.snapshots.size();
            if (idx >= recorded.size() || recorded[idx].second != to_json(*snap)) {
                ++result.mismatches;
            }
            result.snapshots.push_back(*snap);
        }
    }
    if (result.snapshots.size() < recorded.size()) {
        result.mismatches += recorded.size() - result.snapshots.size();
    }
    result.ticks = session.ticks();
    result.final_replayed = session.current();
    if (result.final_recorded) {
        result.final_pose_identical =
            to_json(*result.final_recorded) == to_json(result.final_replayed);
    }
    return result;
}

ReplayResult replay_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open replay log " + path.string());
    }
    return replay(in);
}

}  // namespace mutum::teleop
