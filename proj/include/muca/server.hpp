#pragma once

#include "muca/session.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace muca {

enum class WireType { Login, LoginOk, LoginDenied, UserMessage, BotMessage, System, Roster };

std::string_view to_string(WireType t);
std::optional<WireType> parse_wire_type(std::string_view s);

/// One WebSocket frame. Serialized with exactly these five fields.
struct WireMessage {
    WireType type = WireType::System;
    std::string sender;
    std::string text;
    std::int64_t id = 0;
    std::int64_t ts = 0;

    bool operator==(const WireMessage&) const = default;
};

std::string encode(const WireMessage& m);
/// Unknown fields are ignored; missing ones take defaults. Throws
/// ParameterError on malformed frames or unknown types.
WireMessage decode(std::string_view frame);

struct ServerOptions {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
};

/// WebSocket chat backend on one port: /ws for chat, GET /healthz and
/// GET /session over plain HTTP. Network I/O, transcript appends and
/// broadcasts happen on a single I/O thread, so every client sees messages
/// in id order; pipeline cycles run FIFO on a worker thread and their
/// replies are sequenced back onto the I/O thread.
class ChatServer {
public:
    ChatServer(SessionEngine& engine, ServerOptions options);
    ~ChatServer();

    ChatServer(const ChatServer&) = delete;
    ChatServer& operator=(const ChatServer&) = delete;

    /// Binds and starts the I/O and worker threads. The engine must be
    /// started.
    void start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal.
    void wait();

    unsigned short port() const;
    nlohmann::json session_snapshot() const;
    std::size_t cycles_completed() const;

    /// The GET /session body: bot identity, keyword, sub-topics, roster and
    /// the effective configuration.
    static nlohmann::json session_snapshot_of(const SessionEngine& engine);

    struct Impl;  // opaque; defined in the implementation file

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace muca
