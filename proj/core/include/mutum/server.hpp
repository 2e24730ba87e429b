#pragma once

#include "mutum/teleop.hpp"

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

namespace mutum::teleop {

struct ServerConfig {
    std::string address = "127.0.0.1";
    /// 0 picks a free port; read it back with `TeleopServer::port()`.
    unsigned short port = 8765;
    SessionConfig session;
    /// Session log written while serving; empty disables recording.
    std::filesystem::path record_path;
    /// Outbound frames buffered per client before new snapshots are dropped.
    std::size_t queue_limit = 16;
};

/// WebSocket `/session` plus HTTP `GET /state` and `GET /scenes`.
///
/// One io thread runs every transport handler; one simulation thread owns the
/// `Session` and ticks it in real time. Commands flow to the simulation
/// thread through a locked inbox, snapshots flow back as posted handlers. The
/// first WebSocket client to connect is the controller; later clients observe.
class TeleopServer {
public:
    explicit TeleopServer(ServerConfig config);
    ~TeleopServer();

    TeleopServer(const TeleopServer&) = delete;
    TeleopServer& operator=(const TeleopServer&) = delete;

    /// Binds and starts both threads. Throws IoError when the port is taken.
    void start();
    /// Stops both threads and closes the session log.
    void stop();
    /// Blocks until `stop` is called from another thread or a signal.
    void wait();

    unsigned short port() const;
    std::string latest_snapshot_json() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Minimal blocking WebSocket client for scripts and tests.
class TeleopClient {
public:
    TeleopClient(const std::string& host, unsigned short port);
    ~TeleopClient();

    TeleopClient(const TeleopClient&) = delete;
    TeleopClient& operator=(const TeleopClient&) = delete;

    void send(const Command& cmd);
    void send_text(const std::string& text);
    /// Next text frame. Throws SessionTerminated once the server closes.
    std::string read();
    /// Skips non-snapshot frames (hello, errors) and returns the next snapshot.
    Snapshot read_snapshot();
    /// Role announced by the server on connect: "controller" or "observer".
    const std::string& role() const { return role_; }
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string role_;
};

/// Plain HTTP GET returning the response body. Throws IoError on failure or
/// a non-200 status.
std::string http_get(const std::string& host, unsigned short port, const std::string& target,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

}  // namespace mutum::teleop
