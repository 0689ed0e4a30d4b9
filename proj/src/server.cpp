#include "muca/server.hpp"

#include "muca/config.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

namespace muca {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

// +-----------------------------------+
// |           Wire protocol           |
// +-----------------------------------+

namespace {

constexpr std::array<std::pair<WireType, std::string_view>, 7> kWireNames = {{
    {WireType::Login, "login"},
    {WireType::LoginOk, "login_ok"},
    {WireType::LoginDenied, "login_denied"},
    {WireType::UserMessage, "user_message"},
    {WireType::BotMessage, "bot_message"},
    {WireType::System, "system"},
    {WireType::Roster, "roster"},
}};

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

std::string_view to_string(WireType t) {
    for (const auto& [k, name] : kWireNames) {
        if (k == t) return name;
    }
    return "system";
}

std::optional<WireType> parse_wire_type(std::string_view s) {
    for (const auto& [k, name] : kWireNames) {
        if (name == s) return k;
    }
    return std::nullopt;
}

std::string encode(const WireMessage& m) {
    return json{{"type", std::string(to_string(m.type))},
                {"sender", m.sender},
                {"text", m.text},
                {"id", m.id},
                {"ts", m.ts}}
        .dump();
}

WireMessage decode(std::string_view frame) {
    json j;
    try {
        j = json::parse(frame);
    } catch (const json::parse_error&) {
        throw ParameterError("frame is not valid JSON");
    }
    if (!j.is_object()) throw ParameterError("frame must be a JSON object");
    WireMessage m;
    try {
        const auto type = j.at("type").get<std::string>();
        const auto t = parse_wire_type(type);
        if (!t) throw ParameterError("unknown message type '" + type + "'");
        m.type = *t;
        m.sender = j.value("sender", std::string());
        m.text = j.value("text", std::string());
        m.id = j.value("id", std::int64_t{0});
        m.ts = j.value("ts", std::int64_t{0});
    } catch (const json::exception& e) {
        throw ParameterError(std::string("malformed frame: ") + e.what());
    }
    return m;
}

// +-----------------------------------+
// |              Server               |
// +-----------------------------------+

namespace {

class WsSession;

struct Job {
    std::int64_t upto_id = 0;
    bool ping = false;
};

}  // namespace

struct ChatServer::Impl {
    Impl(SessionEngine& e, ServerOptions o) : engine(e), options(std::move(o)) {}

    // Everything below that is not marked runs on the I/O thread only.
    void on_open(const std::shared_ptr<WsSession>& s);
    void on_close(WsSession* s);
    void on_frame(WsSession* s, const std::string& frame);
    void handle_login(WsSession* s, const std::string& raw_name);
    void handle_user_message(WsSession* s, const std::string& text);
    void broadcast(const WireMessage& m);
    void broadcast_roster();
    void announce(const std::string& text);
    http::response<http::string_body> handle_http(const http::request<http::string_body>& req) const;
    void do_accept();
    void shutdown_network();

    // Worker thread.
    void enqueue(Job job);
    void worker_loop();

    SessionEngine& engine;
    ServerOptions options;

    net::io_context ioc{1};
    tcp::acceptor acceptor{ioc};
    std::thread io_thread;
    std::thread worker;
    std::atomic<unsigned short> bound_port{0};
    std::atomic<bool> running{false};

    std::map<WsSession*, std::shared_ptr<WsSession>> sessions;
    std::map<WsSession*, std::string> names;

    std::mutex queue_mu;
    std::condition_variable queue_cv;
    std::deque<Job> jobs;
    bool stopping = false;
    std::atomic<std::size_t> cycles{0};

    std::mutex wait_mu;
    std::condition_variable wait_cv;
    bool stop_requested = false;
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket&& socket, ChatServer::Impl& server) : ws_(std::move(socket)), server_(server) {}

    void run(http::request<http::string_body> req) {
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

    void send(std::string frame) {
        outbox_.push_back(std::move(frame));
        if (outbox_.size() == 1) do_write();
    }

    void close() {
        if (closing_) return;
        closing_ = true;
        ws_.async_close(websocket::close_code::going_away, [self = shared_from_this()](beast::error_code) {});
    }

    // Only once the io thread has stopped.
    void drop() {
        beast::error_code ec;
        beast::get_lowest_layer(ws_).socket().close(ec);
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        server_.on_open(shared_from_this());
        do_read();
    }

    void do_read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            server_.on_close(this);
            return;
        }
        const auto frame = beast::buffers_to_string(buffer_.data());
        buffer_.consume(buffer_.size());
        server_.on_frame(this, frame);
        do_read();
    }

    void do_write() {
        ws_.text(true);
        ws_.async_write(net::buffer(outbox_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            server_.on_close(this);
            return;
        }
        outbox_.pop_front();
        if (!outbox_.empty()) do_write();
    }

    websocket::stream<beast::tcp_stream> ws_;
    beast::flat_buffer buffer_;
    std::deque<std::string> outbox_;
    ChatServer::Impl& server_;
    bool closing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket&& socket, ChatServer::Impl& server) : stream_(std::move(socket)), server_(server) {}

    void run() { do_read(); }

private:
    void do_read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec == http::error::end_of_stream) {
            stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
            return;
        }
        if (ec) return;
        const auto target = std::string(req_.target().substr(0, req_.target().find('?')));
        if (websocket::is_upgrade(req_) && target == "/ws") {
            stream_.expires_never();
            std::make_shared<WsSession>(stream_.release_socket(), server_)->run(std::move(req_));
            return;
        }
        auto res = std::make_shared<http::response<http::string_body>>(server_.handle_http(req_));
        http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (res->need_eof()) {
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                return;
            }
            self->do_read();
        });
    }

    beast::tcp_stream stream_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
    ChatServer::Impl& server_;
};

WireMessage from_utterance(const Utterance& u) {
    WireType t = WireType::UserMessage;
    if (u.kind == UtteranceKind::Bot) t = WireType::BotMessage;
    if (u.kind == UtteranceKind::System) t = WireType::System;
    return {t, u.sender, u.text, u.id, u.timestamp_ms};
}

}  // namespace

void ChatServer::Impl::on_open(const std::shared_ptr<WsSession>& s) { sessions[s.get()] = s; }

void ChatServer::Impl::on_close(WsSession* s) {
    const auto it = sessions.find(s);
    if (it == sessions.end()) return;
    const auto keep = it->second;
    sessions.erase(it);
    if (const auto n = names.find(s); n != names.end()) {
        const auto name = n->second;
        names.erase(n);
        announce(name + " left the chat");
        broadcast_roster();
    }
}

void ChatServer::Impl::on_frame(WsSession* s, const std::string& frame) {
    const auto reply = [&](WireType t, std::string text) {
        s->send(encode({t, engine.config().bot_name, std::move(text), 0, now_ms()}));
    };
    WireMessage m;
    try {
        m = decode(frame);
    } catch (const ParameterError& e) {
        reply(WireType::System, std::string("dropped frame: ") + e.what());
        return;
    }
    switch (m.type) {
        case WireType::Login: handle_login(s, m.text.empty() ? m.sender : m.text); break;
        case WireType::UserMessage: handle_user_message(s, m.text); break;
        default: reply(WireType::System, "dropped frame: clients may only send login and user_message"); break;
    }
}

void ChatServer::Impl::handle_login(WsSession* s, const std::string& raw_name) {
    const auto& config = engine.config();
    const auto name = trim(raw_name);
    const auto deny = [&](const char* reason) {
        s->send(encode({WireType::LoginDenied, config.bot_name, reason, 0, now_ms()}));
    };
    if (names.contains(s) || name.empty() || to_lower(name) == to_lower(config.bot_name) ||
        to_lower(name) == "system") {
        deny("invalid");
        return;
    }
    for (const auto& [_, n] : names) {
        if (n == name) {
            deny("duplicate");
            return;
        }
    }
    names[s] = name;
    s->send(encode({WireType::LoginOk, config.bot_name, name, 0, now_ms()}));
    announce(name + " joined the chat");
    broadcast_roster();
}

void ChatServer::Impl::handle_user_message(WsSession* s, const std::string& text) {
    const auto n = names.find(s);
    if (n == names.end()) {
        s->send(encode({WireType::System, engine.config().bot_name, "dropped message: log in first", 0, now_ms()}));
        return;
    }
    if (trim(text).empty()) return;
    const auto in = engine.ingest_human(n->second, text);
    broadcast(from_utterance(in.utterance));
    if (in.ping || in.cycle_due) enqueue({in.utterance.id, in.ping});
}

void ChatServer::Impl::broadcast(const WireMessage& m) {
    const auto frame = encode(m);
    for (const auto& [_, s] : sessions) s->send(frame);
}

void ChatServer::Impl::broadcast_roster() {
    std::vector<std::string> humans;
    for (const auto& [_, n] : names) humans.push_back(n);
    std::sort(humans.begin(), humans.end());
    engine.set_roster(humans);
    std::string text = engine.config().bot_name;
    for (const auto& n : humans) text += "\n" + n;
    broadcast({WireType::Roster, engine.config().bot_name, text, 0, now_ms()});
}

void ChatServer::Impl::announce(const std::string& text) {
    broadcast(from_utterance(engine.append("system", UtteranceKind::System, text)));
}

http::response<http::string_body> ChatServer::Impl::handle_http(const http::request<http::string_body>& req) const {
    http::response<http::string_body> res;
    res.version(req.version());
    res.keep_alive(req.keep_alive());
    res.set(http::field::content_type, "application/json");
    res.set(http::field::access_control_allow_origin, "*");
    const auto target = std::string(req.target().substr(0, req.target().find('?')));
    if (req.method() != http::verb::get) {
        res.result(http::status::method_not_allowed);
        res.body() = R"({"error":"method not allowed"})";
    } else if (target == "/healthz") {
        res.result(http::status::ok);
        res.body() = R"({"status":"ok"})";
    } else if (target == "/session") {
        res.result(http::status::ok);
        res.body() = ChatServer::session_snapshot_of(engine).dump();
    } else {
        res.result(http::status::not_found);
        res.body() = R"({"error":"not found"})";
    }
    res.prepare_payload();
    return res;
}

void ChatServer::Impl::do_accept() {
    acceptor.async_accept(ioc, [this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec != net::error::operation_aborted) std::cerr << "muca: accept failed: " << ec.message() << '\n';
            if (!acceptor.is_open()) return;
        } else {
            std::make_shared<HttpSession>(std::move(socket), *this)->run();
        }
        do_accept();
    });
}

void ChatServer::Impl::shutdown_network() {
    beast::error_code ec;
    acceptor.close(ec);
    for (const auto& [_, s] : sessions) s->close();
}

void ChatServer::Impl::enqueue(Job job) {
    {
        std::lock_guard lock(queue_mu);
        jobs.push_back(job);
    }
    queue_cv.notify_one();
}

void ChatServer::Impl::worker_loop() {
    for (;;) {
        Job job;
        {
            std::unique_lock lock(queue_mu);
            queue_cv.wait(lock, [&] { return stopping || !jobs.empty(); });
            if (stopping) return;
            job = jobs.front();
            jobs.pop_front();
        }
        try {
            const auto rec = engine.run_cycle(job.upto_id, job.ping);
            for (const auto& w : rec.warnings) std::cerr << "muca: cycle " << rec.cycle << ": " << w << '\n';
            if (!rec.decision.response.empty()) {
                // Sequenced on the I/O thread so ids and broadcast order agree.
                net::post(ioc, [this, text = rec.decision.response] {
                    broadcast(from_utterance(engine.append(engine.config().bot_name, UtteranceKind::Bot, text)));
                });
            }
        } catch (const std::exception& e) {
            std::cerr << "muca: pipeline cycle failed: " << e.what() << '\n';
        }
        ++cycles;
    }
}

json ChatServer::session_snapshot_of(const SessionEngine& engine) {
    const auto& c = engine.config();
    json subs = json::array();
    for (const auto& s : engine.subtopics()) subs.push_back({{"index", s.index}, {"title", s.title}});
    json roster = json::array({c.bot_name});
    for (const auto& n : engine.roster()) roster.push_back(n);
    return {{"bot_name", c.bot_name},
            {"bot_keyword", c.bot_keyword},
            {"topic", c.inputs.topic},
            {"subtopics", subs},
            {"roster", roster},
            {"config", to_json(c)}};
}

ChatServer::ChatServer(SessionEngine& engine, ServerOptions options)
    : impl_(std::make_unique<Impl>(engine, std::move(options))) {}

ChatServer::~ChatServer() { stop(); }

void ChatServer::start() {
    if (impl_->running.exchange(true)) throw Error("server already running");
    auto& i = *impl_;
    const tcp::endpoint ep(net::ip::make_address(i.options.address), i.options.port);
    try {
        i.acceptor.open(ep.protocol());
        i.acceptor.set_option(net::socket_base::reuse_address(true));
        i.acceptor.bind(ep);
        i.acceptor.listen(net::socket_base::max_listen_connections);
    } catch (const boost::system::system_error& e) {
        i.running = false;
        throw Error("cannot listen on " + i.options.address + ":" + std::to_string(i.options.port) + ": " + e.what());
    }
    i.bound_port = i.acceptor.local_endpoint().port();
    i.do_accept();
    i.io_thread = std::thread([&i] { i.ioc.run(); });
    i.worker = std::thread([&i] { i.worker_loop(); });
}

void ChatServer::stop() {
    auto& i = *impl_;
    if (!i.running.exchange(false)) return;
    {
        std::lock_guard lock(i.queue_mu);
        i.stopping = true;
    }
    i.queue_cv.notify_all();
    if (i.worker.joinable()) i.worker.join();
    net::post(i.ioc, [&i] { i.shutdown_network(); });
    // Give close handshakes a moment before tearing the loop down.
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    i.ioc.stop();
    if (i.io_thread.joinable()) i.io_thread.join();
    for (const auto& [_, s] : i.sessions) s->drop();
    i.sessions.clear();
    i.names.clear();
    {
        std::lock_guard lock(i.wait_mu);
        i.stop_requested = true;
    }
    i.wait_cv.notify_all();
}

void ChatServer::wait() {
    auto& i = *impl_;
    net::signal_set signals(i.ioc, SIGINT, SIGTERM);
    signals.async_wait([&i](beast::error_code ec, int) {
        if (ec) return;
        std::lock_guard lock(i.wait_mu);
        i.stop_requested = true;
        i.wait_cv.notify_all();
    });
    {
        std::unique_lock lock(i.wait_mu);
        i.wait_cv.wait(lock, [&] { return i.stop_requested; });
    }
    stop();
}

unsigned short ChatServer::port() const { return impl_->bound_port; }

json ChatServer::session_snapshot() const { return session_snapshot_of(impl_->engine); }

std::size_t ChatServer::cycles_completed() const { return impl_->cycles; }

}  // namespace muca
