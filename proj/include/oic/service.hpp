#pragma once

#include "oic/simulate.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace oic {

namespace wire {

/// Largest accepted message body.
inline constexpr std::size_t kMaxMessageBytes = 16u << 20;

/// u32 little-endian length followed by the payload.
std::vector<std::uint8_t> frame(std::string_view payload);

/// Incremental parser of length-prefixed messages.
class FrameDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Next complete message, if any. Throws FormatError on an oversized length.
    std::optional<std::string> next();

private:
    std::vector<std::uint8_t> buffer_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);

/// Sec-WebSocket-Accept for a client key.
std::string websocket_accept_key(std::string_view client_key);

enum class WsOpcode : std::uint8_t { Continuation = 0, Text = 1, Binary = 2, Close = 8, Ping = 9, Pong = 10 };

struct WsFrame {
    bool fin = true;
    WsOpcode opcode = WsOpcode::Text;
    std::string payload;
};

/// Unmasked frame as sent by a server; `mask` (client side) masks the payload.
std::vector<std::uint8_t> ws_frame(std::string_view payload, WsOpcode opcode = WsOpcode::Text,
                                   std::optional<std::uint32_t> mask = std::nullopt);

/// Incremental parser of WebSocket frames (masked or not).
class WsDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);
    /// Throws FormatError on reserved bits or oversized frames.
    std::optional<WsFrame> next();

private:
    std::vector<std::uint8_t> buffer_;
};

}  // namespace wire

struct ServiceOptions {
    SessionOptions session;
};

/// Transport-independent request handler. Every message is a JSON object with
/// a "type" of "open", "request", "close" or "info" ("request" when absent).
/// A request carries session_id, longitude and latitude in radians, and
/// optionally fov (radians, one number or [h, v]), vp_dims [w, h] and, on the
/// first request of a session, compare (a tile layout served alongside).
/// Errors come back as {"type": "error", ...}; the session is left untouched.
class SessionService {
public:
    SessionService(PreparedImage prep, ServiceOptions options);

    std::string handle(std::string_view message);

    [[nodiscard]] std::size_t session_count() const;

private:
    struct Entry {
        std::mutex mutex;
        std::unique_ptr<Session> session;
        std::unique_ptr<TileCoding> tiles;
        std::unique_ptr<TileSession> tile_session;
        std::size_t requests = 0;
    };

    std::shared_ptr<Entry> find_or_create(const std::string& id, bool* created);

    PreparedImage prep_;
    ServiceOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t next_id_ = 1;
};

/// TCP front end: each connection speaks length-prefixed JSON, or WebSocket
/// text frames when it opens with an HTTP upgrade. One thread per connection.
class TcpServer {
public:
    /// `bind` is "host:port"; port 0 picks a free port. Throws Error.
    TcpServer(SessionService& service, const std::string& bind);
    ~TcpServer();
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    [[nodiscard]] std::uint16_t port() const { return port_; }
    /// Accepts connections until stop().
    void run();
    void stop();

private:
    void serve_connection(int fd);

    SessionService& service_;
    int listen_fd_ = -1;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
    std::mutex conn_mutex_;
    std::vector<int> connections_;
    std::vector<std::thread> workers_;
};

}  // namespace oic
