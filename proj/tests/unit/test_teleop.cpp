#include "mutum/errors.hpp"
#include "mutum/teleop.hpp"

#include <gtest/gtest.h>

#include <sstream>
#include <vector>

using namespace mutum;
using namespace mutum::teleop;

namespace {

scene::Scene fixture(const std::string& name) {
    return scene::load_scene(scene::default_scene_dir() / (name + ".json"));
}

SessionConfig phantom_config() {
    SessionConfig c;
    c.scene = fixture("phantom_rat");
    c.seed = 5;
    return c;
}

Command cmd(Command::Type type, std::int64_t seq, double value = 0.0) {
    Command c;
    c.type = type;
    c.seq = seq;
    c.value = value;
    return c;
}

// Runs a scripted 10 s session with a recorder attached and returns the log.
std::string record_session() {
    std::ostringstream log;
    SessionRecorder rec(log);
    const auto cfg = phantom_config();
    Session s(cfg);
    rec.header(cfg);
    s.set_recorder(&rec);
    s.submit(cmd(Command::Type::SetFrequency, 1, 3.0));
    s.submit(cmd(Command::Type::StartRotation, 2));
    for (int i = 0; i < 1000; ++i) {
        if (i == 250) s.submit(cmd(Command::Type::TriggerFus, 3, 60.0));
        if (i == 400) s.submit(cmd(Command::Type::SetHeading, 4, 3.14159));
        if (i == 600) s.submit(cmd(Command::Type::SetFrequency, 5, 5.0));
        if (i == 800) s.submit(cmd(Command::Type::StopRotation, 6));
        s.tick();
    }
    rec.end(s);
    return log.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST(Command, RoundTripsThroughWire) {
    const char* wire[] = {
        R"({"seq":1,"cmd":"set_frequency","hz":3.0})",
        R"({"seq":2,"cmd":"set_heading","rad":1.5})",
        R"({"seq":3,"cmd":"start_rotation"})",
        R"({"seq":4,"cmd":"stop_rotation"})",
        R"({"seq":5,"cmd":"trigger_fus","duration_s":180.0})",
        R"({"seq":6,"cmd":"reset"})",
        R"({"seq":7,"cmd":"load_scene","name":"invivo_rat"})",
    };
    for (const char* w : wire) {
        const auto c = parse_command(w);
        const auto again = parse_command(to_json(c));
        EXPECT_EQ(again.type, c.type) << w;
        EXPECT_EQ(again.seq, c.seq);
        EXPECT_EQ(again.value, c.value);
        EXPECT_EQ(again.scene_name, c.scene_name);
    }
    EXPECT_DOUBLE_EQ(parse_command(wire[0]).value, 3.0);
}

TEST(Command, MalformedRejected) {
    for (const char* bad : {
             "not json",
             "[1,2]",
             R"({"cmd":"reset"})",
             R"({"seq":"1","cmd":"reset"})",
             R"({"seq":1})",
             R"({"seq":1,"cmd":"warp"})",
             R"({"seq":1,"cmd":"set_frequency"})",
             R"({"seq":1,"cmd":"set_frequency","hz":"fast"})",
             R"({"seq":1,"cmd":"load_scene"})",
         }) {
        EXPECT_THROW(parse_command(bad), MalformedCommand) << bad;
    }
}

TEST(Command, SessionRangeChecks) {
    Session s(phantom_config());
    EXPECT_THROW(s.submit(cmd(Command::Type::SetFrequency, 1, 6.0)), MalformedCommand);
    EXPECT_THROW(s.submit(cmd(Command::Type::SetFrequency, 1, -1.0)), MalformedCommand);
    EXPECT_THROW(s.submit(cmd(Command::Type::TriggerFus, 1, 0.0)), MalformedCommand);
    EXPECT_THROW(s.submit(cmd(Command::Type::TriggerFus, 1, 601.0)), MalformedCommand);
    auto load = cmd(Command::Type::LoadScene, 1);
    load.scene_name = "../etc/passwd";
    EXPECT_THROW(s.submit(load), MalformedCommand);
    load.scene_name = "no_such_scene";
    EXPECT_THROW(s.submit(load), MalformedCommand);
    s.submit(cmd(Command::Type::SetFrequency, 5, 2.0));
    EXPECT_THROW(s.submit(cmd(Command::Type::StartRotation, 5)), MalformedCommand);
    EXPECT_THROW(s.submit(cmd(Command::Type::StartRotation, 4)), MalformedCommand);
}

TEST(Session, ConfigValidation) {
    auto c = phantom_config();
    c.tick_rate = 50;
    EXPECT_THROW(Session{c}, ValidationError);
    c = phantom_config();
    c.snapshot_rate = 200;
    EXPECT_THROW(Session{c}, ValidationError);
}

TEST(Session, ThirtySnapshotsPerSecond) {
    Session s(phantom_config());
    int count = 0;
    for (int i = 0; i < 1000; ++i) {
        if (s.tick()) ++count;
    }
    EXPECT_EQ(count, 300);
}

TEST(Session, StationaryWithZeroFrequency) {
    Session s(phantom_config());
    const auto start = s.current().position;
    s.submit(cmd(Command::Type::StartRotation, 1));
    for (int i = 0; i < 300; ++i) s.tick();
    EXPECT_EQ(s.current().position, start);
    EXPECT_TRUE(s.current().rotating);
}

TEST(Session, AdvancesAlongLumen) {
    Session s(phantom_config());
    const double arc0 = s.current().arc_length;
    s.submit(cmd(Command::Type::SetFrequency, 1, 3.0));
    s.submit(cmd(Command::Type::StartRotation, 2));
    for (int i = 0; i < 200; ++i) s.tick();
    const double expected = 0.6 * 8.8e-3 * 3.0 * 2.0;
    EXPECT_NEAR(s.current().arc_length - arc0, expected, 0.05 * expected);
    EXPECT_EQ(s.current().ack, 2);
    EXPECT_EQ(s.current().frequency, 3.0);
}

TEST(Session, FusOpensCapAboveBodyTemperature) {
    Session s(phantom_config());
    s.submit(cmd(Command::Type::TriggerFus, 1, 180.0));
    double release_temp = 0.0;
    for (int i = 0; i < 18000 && release_temp == 0.0; ++i) {
        s.tick();
        if (s.current().released > 0.0) release_temp = s.current().temperature_c;
    }
    EXPECT_GT(release_temp, 37.0);
    EXPECT_TRUE(s.current().fus_active);
}

TEST(Session, ResetAndLoadScene) {
    Session s(phantom_config());
    s.submit(cmd(Command::Type::SetFrequency, 1, 4.0));
    s.submit(cmd(Command::Type::StartRotation, 2));
    for (int i = 0; i < 100; ++i) s.tick();
    const auto start = Session(phantom_config()).current().position;
    EXPECT_NE(s.current().position, start);
    s.submit(cmd(Command::Type::Reset, 3));
    s.tick();
    EXPECT_FALSE(s.current().rotating);
    EXPECT_EQ(s.current().frequency, 0.0);
    auto load = cmd(Command::Type::LoadScene, 4);
    load.scene_name = "invivo_rat";
    s.submit(load);
    s.tick();
    EXPECT_EQ(s.current().scene, "invivo_rat");
    EXPECT_NEAR(s.current().temperature_c, 37.0, 1e-12);
}

TEST(Session, HaltsAtLumenEnd) {
    Session s(phantom_config());
    s.submit(cmd(Command::Type::SetFrequency, 1, 5.0));
    s.submit(cmd(Command::Type::StartRotation, 2));
    bool halted = false;
    for (int i = 0; i < 3000 && !halted; ++i) {
        s.tick();
        halted = s.current().event.rfind("halted", 0) == 0;
    }
    EXPECT_TRUE(halted);
    EXPECT_FALSE(s.current().rotating);
}

TEST(Snapshot, RoundTripsThroughWire) {
    Session s(phantom_config());
    s.submit(cmd(Command::Type::SetFrequency, 1, 2.0));
    s.submit(cmd(Command::Type::StartRotation, 2));
    for (int i = 0; i < 57; ++i) s.tick();
    const auto snap = s.current();
    EXPECT_EQ(parse_snapshot(to_json(snap)), snap);
    EXPECT_THROW(parse_snapshot("{"), ParseError);
}

TEST(Replay, ReproducesRecordedSession) {
    const auto log = record_session();
    std::istringstream in(log);
    const auto r = replay(in);
    EXPECT_EQ(r.ticks, 1000u);
    EXPECT_EQ(r.commands, 6u);
    EXPECT_EQ(r.snapshots.size(), 300u);
    EXPECT_EQ(r.mismatches, 0u);
    ASSERT_TRUE(r.final_recorded.has_value());
    EXPECT_TRUE(r.final_pose_identical);
    EXPECT_EQ(r.final_replayed.position, r.final_recorded->position);
}

TEST(Replay, HeaderOnlyLog) {
    const auto lines = lines_of(record_session());
    std::istringstream in(lines.front() + "\n");
    const auto r = replay(in);
    EXPECT_EQ(r.ticks, 0u);
    EXPECT_EQ(r.commands, 0u);
    EXPECT_FALSE(r.final_recorded.has_value());
}

TEST(Replay, CorruptLineIsReported) {
    auto lines = lines_of(record_session());
    ASSERT_GT(lines.size(), 10u);
    lines[6] = "{\"type\":\"snap\",\"snapshot\":{\"t\":";
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    std::istringstream in(text);
    try {
        replay(in);
        FAIL() << "expected ReplayError";
    } catch (const ReplayError& e) {
        EXPECT_EQ(e.line(), 7u);
    }
    std::istringstream no_header("{\"type\":\"cmd\",\"tick\":0}\n");
    EXPECT_THROW(replay(no_header), ReplayError);
    EXPECT_THROW(replay_file("/nonexistent/session.jsonl"), Error);
}

TEST(Replay, DetectsTamperedSnapshot) {
    auto lines = lines_of(record_session());
    for (auto& l : lines) {
        if (l.find("\"type\":\"snap\"") != std::string::npos) {
            const auto at = l.find("\"temp_c\":");
            ASSERT_NE(at, std::string::npos);
            l.insert(at + 9, "1");
            break;
        }
    }
    std::string text;
    for (const auto& l : lines) text += l + "\n";
    std::istringstream in(text);
    EXPECT_EQ(replay(in).mismatches, 1u);
}
