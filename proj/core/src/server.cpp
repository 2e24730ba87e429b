#include "mutum/server.hpp"

#include "mutum/errors.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

namespace mutum::teleop {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

std::string error_message(std::int64_t seq, const std::string& what) {
    json j{{"type", "error"}, {"error", what}};
    if (seq >= 0) j["seq"] = seq;
    return j.dump();
}

std::int64_t seq_hint(const std::string& text) {
    try {
        const auto j = json::parse(text);
        if (j.is_object() && j.contains("seq") && j.at("seq").is_number_integer()) {
            return j.at("seq").get<std::int64_t>();
        }
    } catch (const json::exception&) {
    }
    return -1;
}

}  // namespace

struct TeleopServer::Impl {
    class WsSession;
    class HttpSession;

    struct Inbound {
        std::uint64_t client;
        Command cmd;
    };

    explicit Impl(ServerConfig c) : config(std::move(c)), session(config.session) {}

    ServerConfig config;
    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;
    std::thread sim_thread;
    std::atomic<bool> running{false};
    std::mutex stop_mutex;
    std::condition_variable stop_cv;
    bool stopped = true;

    // Simulation thread only.
    Session session;
    std::ofstream log;
    std::unique_ptr<SessionRecorder> recorder;

    std::mutex inbox_mutex;
    std::vector<Inbound> inbox;

    mutable std::mutex latest_mutex;
    std::string latest;

    // io thread only.
    std::set<std::shared_ptr<WsSession>> clients;
    std::uint64_t next_client = 1;
    std::uint64_t controller = 0;

    void accept();
    void broadcast(const Snapshot& s);
    void reply(std::uint64_t client, const std::string& text);
    void sim_loop();
};

class TeleopServer::Impl::WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(Impl& server, tcp::socket socket, std::uint64_t id)
        : server_(server), ws_(std::move(socket)), id_(id) {}

    std::uint64_t id() const { return id_; }

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
            self->on_accept(ec);
        });
    }

    // Queues a frame; false when the queue is full and the frame was dropped.
    bool enqueue(std::string text) {
        if (queue_.size() >= server_.config.queue_limit) {
            return false;
        }
        queue_.push_back(std::make_shared<std::string>(std::move(text)));
        if (queue_.size() == 1) {
            write_next();
        }
        return true;
    }

    void send_snapshot(Snapshot s) {
        if (queue_.size() >= server_.config.queue_limit) {
            ++dropped_;
            return;
        }
        s.dropped = dropped_;
        dropped_ = 0;
        enqueue(to_json(s));
    }

    void close() {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        if (server_.controller == 0) {
            server_.controller = id_;
        }
        server_.clients.insert(shared_from_this());
        const bool ctl = server_.controller == id_;
        enqueue(json{{"type", "hello"}, {"role", ctl ? "controller" : "observer"}}.dump());
        read_next();
    }

    void read_next() {
        ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
            self->on_read(ec);
        });
    }

    void on_read(beast::error_code ec) {
        if (ec) {
            drop();
            return;
        }
        const std::string text = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        if (server_.controller != id_) {
            enqueue(error_message(seq_hint(text), "observer sessions cannot issue commands"));
        } else {
            try {
                Command cmd = parse_command(text);
                std::lock_guard lock(server_.inbox_mutex);
                server_.inbox.push_back({id_, std::move(cmd)});
            } catch (const MalformedCommand& e) {
                enqueue(error_message(seq_hint(text), e.what()));
            }
        }
        read_next();
    }

    void write_next() {
        ws_.text(true);
        ws_.async_write(net::buffer(*queue_.front()),
                        [self = shared_from_this()](beast::error_code ec, std::size_t) {
                            self->on_write(ec);
                        });
    }

    void on_write(beast::error_code ec) {
        if (ec) {
            drop();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) {
            write_next();
        }
    }

    void drop() {
        if (server_.controller == id_) {
            server_.controller = 0;
        }
        server_.clients.erase(shared_from_this());
    }

    Impl& server_;
    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<std::string>> queue_;
    std::uint64_t id_;
    std::uint64_t dropped_ = 0;
};

class TeleopServer::Impl::HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(Impl& server, tcp::socket socket) : server_(server), stream_(std::move(socket)) {}

    void run() {
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_,
                         [self = shared_from_this()](beast::error_code ec, std::size_t) {
                             self->on_read(ec);
                         });
    }

private:
    void on_read(beast::error_code ec) {
        if (ec) return;
        if (websocket::is_upgrade(req_)) {
            if (req_.target() == "/session") {
                stream_.expires_never();
                auto ws = std::make_shared<WsSession>(server_, stream_.release_socket(),
                                                      server_.next_client++);
                ws->run(std::move(req_));
                return;
            }
            respond(http::status::not_found, R"({"error":"unknown websocket path"})");
            return;
        }
        if (req_.method() != http::verb::get) {
            respond(http::status::method_not_allowed, R"({"error":"GET only"})");
        } else if (req_.target() == "/state") {
            std::lock_guard lock(server_.latest_mutex);
            respond(http::status::ok, server_.latest);
        } else if (req_.target() == "/scenes") {
            const auto dir = server_.config.session.scene_dir.empty()
                                 ? scene::default_scene_dir()
                                 : server_.config.session.scene_dir;
            json names = json::array();
            try {
                for (const auto& n : scene::list_scenes(dir)) names.push_back(n);
            } catch (const Error&) {
            }
            respond(http::status::ok, names.dump());
        } else {
            respond(http::status::not_found, R"({"error":"not found"})");
        }
    }

    void respond(http::status status, std::string body) {
        auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
        res->set(http::field::content_type, "application/json");
        res->set(http::field::access_control_allow_origin, "*");
        res->keep_alive(false);
        res->body() = std::move(body);
        res->prepare_payload();
        http::async_write(stream_, *res,
                          [self = shared_from_this(), res](beast::error_code, std::size_t) {
                              beast::error_code ec;
                              self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          });
    }

    Impl& server_;
    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

void TeleopServer::Impl::accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
        if (!ec) {
            std::make_shared<HttpSession>(*this, std::move(socket))->run();
        }
        if (acceptor.is_open()) {
            accept();
        }
    });
}

void TeleopServer::Impl::broadcast(const Snapshot& s) {
    // Copy: a failed write may erase from `clients` during iteration.
    const auto targets = clients;
    for (const auto& c : targets) {
        c->send_snapshot(s);
    }
}

void TeleopServer::Impl::reply(std::uint64_t client, const std::string& text) {
    for (const auto& c : clients) {
        if (c->id() == client) {
            c->enqueue(text);
        }
    }
}

void TeleopServer::Impl::sim_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(session.dt()));
    auto next = clock::now();
    while (running.load()) {
        next += period;
        std::vector<Inbound> batch;
        {
            std::lock_guard lock(inbox_mutex);
            batch.swap(inbox);
        }
        for (auto& in : batch) {
            const auto seq = in.cmd.seq;
            try {
                session.submit(std::move(in.cmd));
            } catch (const MalformedCommand& e) {
                net::post(ioc, [this, client = in.client, msg = error_message(seq, e.what())] {
                    reply(client, msg);
                });
            }
        }
        if (auto snap = session.tick()) {
            {
                std::lock_guard lock(latest_mutex);
                latest = to_json(*snap);
            }
            net::post(ioc, [this, s = *snap] { broadcast(s); });
        }
        const auto now = clock::now();
        if (now > next + 10 * period) {
            // Far behind (debugger, suspended host): resume pacing from now
            // instead of bursting through the backlog.
            next = now;
        }
        std::this_thread::sleep_until(next);
    }
    if (recorder) {
        recorder->end(session);
        log.close();
    }
}

TeleopServer::TeleopServer(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

TeleopServer::~TeleopServer() {
    stop();
}

void TeleopServer::start() {
    auto& s = *impl_;
    if (s.running.load()) return;
    beast::error_code ec;
    const auto address = net::ip::make_address(s.config.address, ec);
    if (ec) throw IoError("bad listen address " + s.config.address);
    const tcp::endpoint ep{address, s.config.port};
    s.acceptor.open(ep.protocol(), ec);
    if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) s.acceptor.bind(ep, ec);
    if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
    if (ec) throw IoError("cannot listen on " + s.config.address + ":" +
                          std::to_string(s.config.port) + ": " + ec.message());

    if (!s.config.record_path.empty()) {
        s.log.open(s.config.record_path, std::ios::binary | std::ios::trunc);
        if (!s.log) throw IoError("cannot write session log " + s.config.record_path.string());
        s.recorder = std::make_unique<SessionRecorder>(s.log);
        s.recorder->header(s.config.session);
        s.session.set_recorder(s.recorder.get());
    }
    s.latest = to_json(s.session.current());
    s.running = true;
    {
        std::lock_guard lock(s.stop_mutex);
        s.stopped = false;
    }
    s.accept();
    s.io_thread = std::thread([&s] { s.ioc.run(); });
    s.sim_thread = std::thread([&s] { s.sim_loop(); });
}

void TeleopServer::stop() {
    auto& s = *impl_;
    if (!s.running.exchange(false)) return;
    if (s.sim_thread.joinable()) s.sim_thread.join();
    std::promise<void> closed;
    net::post(s.ioc, [&s, &closed] {
        beast::error_code ec;
        s.acceptor.close(ec);
        for (const auto& c : s.clients) c->close();
        s.clients.clear();
        closed.set_value();
    });
    closed.get_future().wait_for(std::chrono::seconds(2));
    s.ioc.stop();
    if (s.io_thread.joinable()) s.io_thread.join();
    {
        std::lock_guard lock(s.stop_mutex);
        s.stopped = true;
    }
    s.stop_cv.notify_all();
}

void TeleopServer::wait() {
    auto& s = *impl_;
    std::unique_lock lock(s.stop_mutex);
    s.stop_cv.wait(lock, [&s] { return s.stopped; });
}

unsigned short TeleopServer::port() const {
    beast::error_code ec;
    const auto ep = impl_->acceptor.local_endpoint(ec);
    return ec ? impl_->config.port : ep.port();
}

std::string TeleopServer::latest_snapshot_json() const {
    std::lock_guard lock(impl_->latest_mutex);
    return impl_->latest;
}

struct TeleopClient::Impl {
    net::io_context ioc;
    websocket::stream<tcp::socket> ws{ioc};
    beast::flat_buffer buffer;
};

TeleopClient::TeleopClient(const std::string& host, unsigned short port)
    : impl_(std::make_unique<Impl>()) {
    try {
        tcp::resolver resolver(impl_->ioc);
        const auto results = resolver.resolve(host, std::to_string(port));
        net::connect(impl_->ws.next_layer(), results.begin(), results.end());
        impl_->ws.handshake(host, "/session");
    } catch (const boost::system::system_error& e) {
        throw IoError(std::string("cannot connect: ") + e.what());
    }
    const auto hello = json::parse(read());
    role_ = hello.value("role", std::string());
}

TeleopClient::~TeleopClient() {
    try {
        close();
    } catch (...) {
    }
}

void TeleopClient::send(const Command& cmd) {
    send_text(to_json(cmd));
}

void TeleopClient::send_text(const std::string& text) {
    beast::error_code ec;
    impl_->ws.text(true);
    impl_->ws.write(net::buffer(text), ec);
    if (ec) throw SessionTerminated("send failed: " + ec.message());
}

std::string TeleopClient::read() {
    beast::error_code ec;
    impl_->ws.read(impl_->buffer, ec);
    if (ec) throw SessionTerminated("transport closed: " + ec.message());
    std::string out = beast::buffers_to_string(impl_->buffer.data());
    impl_->buffer.consume(impl_->buffer.size());
    return out;
}

Snapshot TeleopClient::read_snapshot() {
    for (;;) {
        const std::string text = read();
        if (text.find("\"type\"") == std::string::npos) {
            return parse_snapshot(text);
        }
    }
}

void TeleopClient::close() {
    if (impl_ && impl_->ws.is_open()) {
        beast::error_code ec;
        impl_->ws.close(websocket::close_code::normal, ec);
    }
}

std::string http_get(const std::string& host, unsigned short port, const std::string& target,
                     std::chrono::milliseconds timeout) {
    try {
        net::io_context ioc;
        beast::tcp_stream stream(ioc);
        stream.expires_after(timeout);
        tcp::resolver resolver(ioc);
        stream.connect(resolver.resolve(host, std::to_string(port)));
        http::request<http::empty_body> req{http::verb::get, target, 11};
        req.set(http::field::host, host);
        http::write(stream, req);
        beast::flat_buffer buffer;
        http::response<http::string_body> res;
        http::read(stream, buffer, res);
        beast::error_code ec;
        stream.socket().shutdown(tcp::socket::shutdown_both, ec);
        if (res.result() != http::status::ok) {
            throw IoError("GET " + target + " returned " + std::to_string(res.result_int()));
        }
        return res.body();
    } catch (const boost::system::system_error& e) {
        throw IoError("GET " + target + " failed: " + e.what());
    }
}

}  // namespace mutum::teleop
