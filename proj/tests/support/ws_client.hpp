#pragma once

// Blocking WebSocket / HTTP client for exercising the chat server in tests.

#include "muca/server.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <functional>
#include <string>
#include <vector>

namespace oracle {

class WsClient {
public:
    explicit WsClient(unsigned short port) : ws_(ioc_) {
        namespace net = boost::asio;
        net::ip::tcp::resolver resolver(ioc_);
        net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1:" + std::to_string(port), "/ws");
    }

    ~WsClient() {
        boost::beast::error_code ec;
        ws_.close(boost::beast::websocket::close_code::normal, ec);
    }

    void send(const muca::WireMessage& m) { ws_.write(boost::asio::buffer(muca::encode(m))); }

    void login(const std::string& name) { send({muca::WireType::Login, name, name, 0, 0}); }
    void say(const std::string& text) { send({muca::WireType::UserMessage, "", text, 0, 0}); }

    muca::WireMessage recv() {
        boost::beast::flat_buffer buf;
        ws_.read(buf);
        auto m = muca::decode(boost::beast::buffers_to_string(buf.data()));
        seen.push_back(m);
        return m;
    }

    /// Reads until `pred` holds for a frame and returns that frame.
    muca::WireMessage recv_until(const std::function<bool(const muca::WireMessage&)>& pred) {
        for (;;) {
            auto m = recv();
            if (pred(m)) return m;
        }
    }

    std::vector<muca::WireMessage> seen;

private:
    boost::asio::io_context ioc_;
    boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

inline HttpReply http_request(unsigned short port, boost::beast::http::verb verb, const std::string& target) {
    namespace net = boost::asio;
    namespace http = boost::beast::http;
    net::io_context ioc;
    net::ip::tcp::socket sock(ioc);
    net::ip::tcp::resolver resolver(ioc);
    net::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::string_body> req{verb, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(sock, req);
    boost::beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(sock, buf, res);
    boost::beast::error_code ec;
    sock.shutdown(net::ip::tcp::socket::shutdown_both, ec);
    return {static_cast<int>(res.result_int()), res.body()};
}

inline HttpReply http_get(unsigned short port, const std::string& target) {
    return http_request(port, boost::beast::http::verb::get, target);
}

}  // namespace oracle
