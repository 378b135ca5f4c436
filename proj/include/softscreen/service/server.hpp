// HTTP + WebSocket front end for a teleoperation Session.
//
//   GET  /health   service and protocol version
//   GET  /lumen    lumen geometry for the side view
//   GET  /ws       WebSocket: state frames out, command frames in
//   POST /command  one command frame, answered with its ack
//   POST /stop     flush the trace and shut down
//
// All sockets live on one io_context thread. The stepping thread is the
// only writer of simulation state; it hands finished frames to the io
// thread, which keeps at most one unsent state frame per client.
#pragma once

#include "softscreen/service/session.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/version.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

namespace softscreen::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    double rate_hz = kDefaultRate_Hz;
    double time_scale = 1.0;  // simulated seconds per wall-clock second
    std::filesystem::path static_dir;
    bool handle_signals = true;
};

/// Called once, on the stepping thread, with the final trace. Returns a
/// description of what was written.
using FlushFn = std::function<json(const navigation::SimTrace&)>;

class Server;

namespace detail {

inline std::string mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    return "application/octet-stream";
}

class WsClient : public std::enable_shared_from_this<WsClient> {
public:
    WsClient(tcp::socket&& socket, Server& server) : ws_(std::move(socket)), server_(server) {}

    void start(http::request<http::string_body> req);
    void send_state(std::shared_ptr<const std::string> msg);
    void send_control(std::shared_ptr<const std::string> msg);
    void close();

private:
    void read();
    void pump();

    websocket::stream<beast::tcp_stream> ws_;
    Server& server_;
    beast::flat_buffer buffer_;
    std::deque<std::shared_ptr<const std::string>> control_;
    std::shared_ptr<const std::string> state_;
    bool writing_ = false;
    bool closing_ = false;
};

class HttpClient : public std::enable_shared_from_this<HttpClient> {
public:
    HttpClient(tcp::socket&& socket, Server& server) : stream_(std::move(socket)), server_(server) {}
    void start() { read(); }

private:
    void read();
    void respond(http::response<http::string_body> res);

    beast::tcp_stream stream_;
    Server& server_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

}  // namespace detail

class Server {
public:
    Server(Session& session, ServerOptions opts, FlushFn flush = {})
        : session_(session), opts_(std::move(opts)), flush_(std::move(flush)), acceptor_(ioc_) {
        require_positive(opts_.rate_hz, "rate_hz");
        require_positive(opts_.time_scale, "time_scale");
        const auto addr = net::ip::make_address(opts_.address);
        tcp::endpoint ep(addr, opts_.port);
        beast::error_code ec;
        acceptor_.open(ep.protocol(), ec);
        if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
        if (!ec) acceptor_.bind(ep, ec);
        if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
        if (ec) throw Error(fmt::format("cannot bind {}:{}: {}", opts_.address, opts_.port, ec.message()));
    }

    ~Server() {
        request_stop("shutdown");
        if (stepper_.joinable()) stepper_.join();
    }

    unsigned short port() const { return acceptor_.local_endpoint().port(); }
    Session& session() { return session_; }
    const ServerOptions& options() const { return opts_; }

    /// Serves until stopped; returns the flush description.
    json run() {
        accept();
        net::signal_set signals(ioc_);
        if (opts_.handle_signals) {
            signals.add(SIGINT);
            signals.add(SIGTERM);
            signals.async_wait([this](beast::error_code ec, int) {
                if (!ec) request_stop("signal");
            });
        }
        stepper_ = std::thread([this] { step_loop(); });
        ioc_.run();
        if (stepper_.joinable()) stepper_.join();
        std::lock_guard lock(stop_mu_);
        return flushed_;
    }

    /// Asks the stepping thread to finish; safe from any thread.
    void request_stop(const std::string& reason) {
        {
            std::lock_guard lock(stop_mu_);
            if (stop_reason_.empty()) stop_reason_ = reason;
        }
        stop_cv_.notify_all();
    }

    /// Blocks until the trace has been flushed.
    json wait_flushed() {
        std::unique_lock lock(stop_mu_);
        stop_cv_.wait(lock, [this] { return flush_done_; });
        return flushed_;
    }

    // io-thread only
    void add_client(const std::shared_ptr<detail::WsClient>& c) {
        clients_.insert(c);
        if (last_frame_) c->send_state(last_frame_);
        if (end_frame_) c->send_control(end_frame_);
    }
    void remove_client(const std::shared_ptr<detail::WsClient>& c) { clients_.erase(c); }

    std::string handle_command_text(const std::string& text) {
        try {
            return ack_json(session_.submit(parse_command(text))).dump();
        } catch (const MalformedFrame& e) {
            return error_json(e.what()).dump();
        }
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req) {
        const auto reply = [&](http::status st, const std::string& body, const std::string& type = "application/json") {
            http::response<http::string_body> res{st, req.version()};
            res.set(http::field::server, "softscreen");
            res.set(http::field::content_type, type);
            res.set(http::field::access_control_allow_origin, "*");
            res.keep_alive(req.keep_alive());
            res.body() = body;
            res.prepare_payload();
            return res;
        };
        const std::string target(req.target());
        if (req.method() == http::verb::get && target == "/health")
            return reply(http::status::ok, health_json(session_.scenario().name).dump());
        if (req.method() == http::verb::get && target == "/lumen")
            return reply(http::status::ok, lumen_.dump());
        if (req.method() == http::verb::post && target == "/command") {
            const auto out = handle_command_text(req.body());
            const bool ok = json::parse(out).at("type") == "ack";
            return reply(ok ? http::status::ok : http::status::bad_request, out);
        }
        if (req.method() == http::verb::post && target == "/stop") {
            request_stop("stopped");
            return reply(http::status::ok, json{{"type", "stopped"}, {"flushed", wait_flushed()}}.dump());
        }
        if (req.method() == http::verb::get && !opts_.static_dir.empty()) {
            auto rel = target.substr(0, target.find('?'));
            if (rel == "/") rel = "/index.html";
            const auto p = (opts_.static_dir / rel.substr(1)).lexically_normal();
            const auto root = opts_.static_dir.lexically_normal();
            const bool inside = p.string().rfind(root.string(), 0) == 0 && rel.find("..") == std::string::npos;
            if (inside && std::filesystem::is_regular_file(p)) {
                std::ifstream in(p, std::ios::binary);
                std::ostringstream ss;
                ss << in.rdbuf();
                return reply(http::status::ok, ss.str(), detail::mime_type(p));
            }
        }
        return reply(http::status::not_found, error_json("no route for " + target).dump());
    }

private:
    void accept() {
        acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec) return;  // acceptor closed
            std::make_shared<detail::HttpClient>(std::move(socket), *this)->start();
            accept();
        });
    }

    void broadcast_state(std::string msg) {
        auto p = std::make_shared<const std::string>(std::move(msg));
        net::post(ioc_, [this, p] {
            last_frame_ = p;
            for (const auto& c : clients_) c->send_state(p);
        });
    }

    void broadcast_end(std::string msg) {
        auto p = std::make_shared<const std::string>(std::move(msg));
        net::post(ioc_, [this, p] {
            end_frame_ = p;
            for (const auto& c : clients_) c->send_control(p);
        });
    }

    void step_loop() {
        using clock = std::chrono::steady_clock;
        const double dt = session_.scenario().config.dt_s;
        const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / opts_.rate_hz));
        auto last = clock::now();
        auto next = last + period;
        double budget = 0.0;
        bool ended = false;
        std::string reason;
        for (;;) {
            {
                std::unique_lock lock(stop_mu_);
                stop_cv_.wait_until(lock, next, [this] { return !stop_reason_.empty(); });
                if (!stop_reason_.empty()) {
                    reason = stop_reason_;
                    break;
                }
            }
            const auto now = clock::now();
            next += period;
            if (next < now) next = now + period;  // fell behind: drop frames, never burst
            session_.drain();
            if (session_.paused() || ended) {
                budget = 0.0;
            } else {
                budget += std::chrono::duration<double>(now - last).count() * opts_.time_scale;
            }
            last = now;
            while (budget >= dt - 1e-12 && session_.step_once()) budget -= dt;
            if (!ended) broadcast_state(state_json(session_.snapshot()).dump());
            if (!ended) {
                if (const auto why = session_.finished()) {
                    ended = true;
                    broadcast_end(end_json(session_.next_seq(), *why).dump());
                    do_flush();
                }
            }
        }
        if (!ended) broadcast_end(end_json(session_.next_seq(), reason).dump());
        do_flush();
        net::post(ioc_, [this] {
            beast::error_code ec;
            acceptor_.close(ec);
            for (const auto& c : clients_) c->close();
            // give the closing handshakes a moment, then stop the loop
            auto t = std::make_shared<net::steady_timer>(ioc_, std::chrono::milliseconds(300));
            t->async_wait([this, t](beast::error_code) { ioc_.stop(); });
        });
    }

    void do_flush() {
        std::lock_guard lock(stop_mu_);
        if (flush_done_) return;
        try {
            flushed_ = flush_ ? flush_(session_.trace()) : json::object();
        } catch (const std::exception& e) {
            flushed_ = error_json(e.what());
        }
        flush_done_ = true;
        stop_cv_.notify_all();
    }

    Session& session_;
    ServerOptions opts_;
    FlushFn flush_;
    net::io_context ioc_{1};
    tcp::acceptor acceptor_;
    json lumen_ = lumen_json(*session_.scenario().lumen);
    std::thread stepper_;

    std::set<std::shared_ptr<detail::WsClient>> clients_;
    std::shared_ptr<const std::string> last_frame_;
    std::shared_ptr<const std::string> end_frame_;

    std::mutex stop_mu_;
    std::condition_variable stop_cv_;
    std::string stop_reason_;
    bool flush_done_ = false;
    json flushed_;
};

namespace detail {

inline void HttpClient::read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (websocket::is_upgrade(self->req_)) {
            if (self->req_.target() != "/ws") {
                self->respond(self->server_.handle(self->req_));
                return;
            }
            beast::get_lowest_layer(self->stream_).expires_never();
            auto ws = std::make_shared<WsClient>(self->stream_.release_socket(), self->server_);
            ws->start(std::move(self->req_));
            return;
        }
        // /stop blocks until the stepper has flushed, so it runs off the io thread
        if (self->req_.target() == "/stop") {
            std::thread([self] {
                auto res = self->server_.handle(self->req_);
                net::post(self->stream_.get_executor(), [self, res = std::move(res)]() mutable {
                    self->respond(std::move(res));
                });
            }).detach();
            return;
        }
        self->respond(self->server_.handle(self->req_));
    });
}

inline void HttpClient::respond(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
        if (ec) return;
        if (!sp->keep_alive()) {
            beast::error_code ignored;
            self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
            return;
        }
        self->read();
    });
}

inline void WsClient::start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
        if (ec) return;
        net::post(self->ws_.get_executor(), [self] {
            self->server_.add_client(self);
            self->read();
        });
    });
}

inline void WsClient::read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
        if (ec) {
            net::post(self->ws_.get_executor(), [self] { self->server_.remove_client(self); });
            return;
        }
        const auto text = beast::buffers_to_string(self->buffer_.data());
        self->buffer_.consume(self->buffer_.size());
        self->send_control(std::make_shared<const std::string>(self->server_.handle_command_text(text)));
        self->read();
    });
}

inline void WsClient::send_state(std::shared_ptr<const std::string> msg) {
    state_ = std::move(msg);  // latest wins: an unsent older frame is dropped
    pump();
}

inline void WsClient::send_control(std::shared_ptr<const std::string> msg) {
    control_.push_back(std::move(msg));
    pump();
}

inline void WsClient::pump() {
    if (writing_ || closing_) return;
    std::shared_ptr<const std::string> msg;
    if (!control_.empty()) {
        msg = control_.front();
        control_.pop_front();
    } else if (state_) {
        msg = std::move(state_);
        state_.reset();
    } else {
        return;
    }
    writing_ = true;
    ws_.async_write(net::buffer(*msg), [self = shared_from_this(), msg](beast::error_code ec, std::size_t) {
        self->writing_ = false;
        if (ec) return;
        self->pump();
    });
}

inline void WsClient::close() {
    if (closing_) return;
    // let queued control frames (the end marker) go out first
    if (writing_ || !control_.empty()) {
        auto t = std::make_shared<net::steady_timer>(ws_.get_executor(), std::chrono::milliseconds(20));
        t->async_wait([self = shared_from_this(), t](beast::error_code) { self->close(); });
        return;
    }
    closing_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
}

}  // namespace detail

}  // namespace softscreen::service
