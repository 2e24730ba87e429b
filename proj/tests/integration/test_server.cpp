#include "mutum/errors.hpp"
#include "mutum/server.hpp"

#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>

using namespace mutum;
using namespace mutum::teleop;
using nlohmann::json;

namespace {

Command cmd(Command::Type type, std::int64_t seq, double value = 0.0) {
    Command c;
    c.type = type;
    c.seq = seq;
    c.value = value;
    return c;
}

// Reads frames until one of type "error" arrives.
json next_error(TeleopClient& c) {
    for (int i = 0; i < 500; ++i) {
        const auto j = json::parse(c.read());
        if (j.value("type", "") == "error") return j;
    }
    return {};
}

class ServerTest : public ::testing::Test {
protected:
    void SetUp() override {
        log_path_ = std::filesystem::temp_directory_path() / "mutum_server_test.jsonl";
        std::filesystem::remove(log_path_);
        ServerConfig cfg;
        cfg.port = 0;
        cfg.session.scene = scene::load_scene(scene::default_scene_dir() / "phantom_rat.json");
        cfg.record_path = log_path_;
        server_ = std::make_unique<TeleopServer>(cfg);
        server_->start();
    }

    void TearDown() override {
        if (server_) server_->stop();
    }

    std::filesystem::path log_path_;
    std::unique_ptr<TeleopServer> server_;
};

}  // namespace

TEST_F(ServerTest, ControllerDrivesObserverWatches) {
    TeleopClient controller("127.0.0.1", server_->port());
    TeleopClient observer("127.0.0.1", server_->port());
    EXPECT_EQ(controller.role(), "controller");
    EXPECT_EQ(observer.role(), "observer");

    controller.send(cmd(Command::Type::SetFrequency, 1, 3.0));
    controller.send(cmd(Command::Type::StartRotation, 2));
    Snapshot s;
    for (int i = 0; i < 300 && s.ack < 2; ++i) s = controller.read_snapshot();
    ASSERT_EQ(s.ack, 2);
    EXPECT_TRUE(s.rotating);
    EXPECT_EQ(s.frequency, 3.0);
    EXPECT_EQ(s.scene, "phantom_rat");

    const auto o1 = observer.read_snapshot();
    const auto o2 = observer.read_snapshot();
    EXPECT_GT(o2.tick, o1.tick);

    observer.send(cmd(Command::Type::StopRotation, 10));
    EXPECT_EQ(next_error(observer).value("seq", -1), 10);
}

TEST_F(ServerTest, MalformedCommandsGetErrorFrames) {
    TeleopClient c("127.0.0.1", server_->port());
    c.send_text("definitely not json");
    EXPECT_FALSE(next_error(c).value("error", "").empty());
    c.send_text(R"({"seq":3,"cmd":"set_frequency","hz":9})");
    EXPECT_EQ(next_error(c).value("seq", -1), 3);
    c.send(cmd(Command::Type::SetFrequency, 4, 2.0));
    c.send(cmd(Command::Type::SetFrequency, 4, 2.5));
    EXPECT_EQ(next_error(c).value("seq", -1), 4);
}

TEST_F(ServerTest, HttpStateAndScenes) {
    TeleopClient c("127.0.0.1", server_->port());
    c.read_snapshot();
    const auto state = parse_snapshot(http_get("127.0.0.1", server_->port(), "/state"));
    EXPECT_EQ(state.scene, "phantom_rat");
    EXPECT_GT(state.tick, 0u);

    const auto scenes = json::parse(http_get("127.0.0.1", server_->port(), "/scenes"));
    ASSERT_TRUE(scenes.is_array());
    EXPECT_NE(std::find(scenes.begin(), scenes.end(), "invivo_rat"), scenes.end());
    EXPECT_THROW(http_get("127.0.0.1", server_->port(), "/nope"), IoError);
}

TEST_F(ServerTest, LoadSceneOverTheWire) {
    TeleopClient c("127.0.0.1", server_->port());
    c.send_text(R"({"seq":1,"cmd":"load_scene","name":"invivo_rat"})");
    Snapshot s;
    for (int i = 0; i < 300 && s.ack < 1; ++i) s = c.read_snapshot();
    EXPECT_EQ(s.scene, "invivo_rat");
}

TEST_F(ServerTest, StopClosesClientsAndLogReplays) {
    TeleopClient c("127.0.0.1", server_->port());
    c.send(cmd(Command::Type::SetFrequency, 1, 2.0));
    c.send(cmd(Command::Type::StartRotation, 2));
    for (int i = 0; i < 20; ++i) c.read_snapshot();
    server_->stop();
    EXPECT_THROW(
        {
            for (int i = 0; i < 1000; ++i) c.read();
        },
        SessionTerminated);
    server_.reset();

    const auto r = replay_file(log_path_);
    EXPECT_GE(r.commands, 2u);
    EXPECT_EQ(r.mismatches, 0u);
    EXPECT_TRUE(r.final_pose_identical);
}
