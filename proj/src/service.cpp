#include "oic/service.hpp"

#include "oic/error.hpp"
#include "oic/placement.hpp"

#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>

namespace oic {

using nlohmann::json;

namespace wire {

std::vector<std::uint8_t> frame(std::string_view payload)
{
    if (payload.size() > kMaxMessageBytes) {
        throw InvalidArgument("message too large to frame");
    }
    std::vector<std::uint8_t> out(4 + payload.size());
    const auto len = static_cast<std::uint32_t>(payload.size());
    for (int i = 0; i < 4; ++i) {
        out[i] = static_cast<std::uint8_t>(len >> (8 * i));
    }
    std::memcpy(out.data() + 4, payload.data(), payload.size());
    return out;
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes)
{
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<std::string> FrameDecoder::next()
{
    if (buffer_.size() < 4) {
        return std::nullopt;
    }
    std::uint32_t len = 0;
    for (int i = 0; i < 4; ++i) {
        len |= static_cast<std::uint32_t>(buffer_[i]) << (8 * i);
    }
    if (len > kMaxMessageBytes) {
        throw FormatError("message length " + std::to_string(len) + " exceeds the limit");
    }
    if (buffer_.size() < 4 + static_cast<std::size_t>(len)) {
        return std::nullopt;
    }
    std::string msg(reinterpret_cast<const char*>(buffer_.data()) + 4, len);
    buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + len);
    return msg;
}

std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                        static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::string websocket_accept_key(std::string_view client_key)
{
    static constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
    std::string joined(client_key);
    joined += kGuid;
    unsigned char digest[SHA_DIGEST_LENGTH];
    SHA1(reinterpret_cast<const unsigned char*>(joined.data()), joined.size(), digest);
    return base64_encode(std::span<const std::uint8_t>(digest, SHA_DIGEST_LENGTH));
}

std::vector<std::uint8_t> ws_frame(std::string_view payload, WsOpcode opcode, std::optional<std::uint32_t> mask)
{
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(0x80 | static_cast<std::uint8_t>(opcode)));
    const std::uint8_t mask_bit = mask ? 0x80 : 0;
    const std::uint64_t len = payload.size();
    if (len < 126) {
        out.push_back(static_cast<std::uint8_t>(mask_bit | len));
    } else if (len <= 0xFFFF) {
        out.push_back(mask_bit | 126);
        out.push_back(static_cast<std::uint8_t>(len >> 8));
        out.push_back(static_cast<std::uint8_t>(len));
    } else {
        out.push_back(mask_bit | 127);
        for (int i = 7; i >= 0; --i) {
            out.push_back(static_cast<std::uint8_t>(len >> (8 * i)));
        }
    }
    std::uint8_t key[4] = {0, 0, 0, 0};
    if (mask) {
        for (int i = 0; i < 4; ++i) {
            key[i] = static_cast<std::uint8_t>(*mask >> (24 - 8 * i));
            out.push_back(key[i]);
        }
    }
    for (std::size_t i = 0; i < payload.size(); ++i) {
        out.push_back(static_cast<std::uint8_t>(payload[i]) ^ key[i % 4]);
    }
    return out;
}

void WsDecoder::feed(std::span<const std::uint8_t> bytes)
{
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<WsFrame> WsDecoder::next()
{
    if (buffer_.size() < 2) {
        return std::nullopt;
    }
    const std::uint8_t b0 = buffer_[0];
    const std::uint8_t b1 = buffer_[1];
    if (b0 & 0x70) {
        throw FormatError("websocket frame uses reserved bits");
    }
    std::size_t pos = 2;
    std::uint64_t len = b1 & 0x7F;
    if (len == 126) {
        if (buffer_.size() < 4) {
            return std::nullopt;
        }
        len = (static_cast<std::uint64_t>(buffer_[2]) << 8) | buffer_[3];
        pos = 4;
    } else if (len == 127) {
        if (buffer_.size() < 10) {
            return std::nullopt;
        }
        len = 0;
        for (int i = 0; i < 8; ++i) {
            len = (len << 8) | buffer_[2 + i];
        }
        pos = 10;
    }
    if (len > kMaxMessageBytes) {
        throw FormatError("websocket frame exceeds the message limit");
    }
    const bool masked = (b1 & 0x80) != 0;
    std::uint8_t key[4] = {0, 0, 0, 0};
    if (masked) {
        if (buffer_.size() < pos + 4) {
            return std::nullopt;
        }
        std::memcpy(key, buffer_.data() + pos, 4);
        pos += 4;
    }
    if (buffer_.size() < pos + len) {
        return std::nullopt;
    }
    WsFrame f;
    f.fin = (b0 & 0x80) != 0;
    f.opcode = static_cast<WsOpcode>(b0 & 0x0F);
    f.payload.resize(static_cast<std::size_t>(len));
    for (std::size_t i = 0; i < len; ++i) {
        f.payload[i] = static_cast<char>(buffer_[pos + i] ^ key[i % 4]);
    }
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos + len));
    return f;
}

}  // namespace wire

// --- request handling ---------------------------------------------------------

namespace {

struct RequestError : Error {
    RequestError(std::string code, const std::string& message) : Error(message), code(std::move(code)) {}
    std::string code;
};

json error_message(const std::string& code, const std::string& message, const json& session_id)
{
    json out = {{"type", "error"}, {"code", code}, {"message", message}};
    if (!session_id.is_null()) {
        out["session_id"] = session_id;
    }
    return out;
}

double number_field(const json& msg, const char* key)
{
    const auto it = msg.find(key);
    if (it == msg.end() || !it->is_number()) {
        throw RequestError("bad_request", std::string("field '") + key + "' must be a number");
    }
    return it->get<double>();
}

ViewportSpec spec_from(const json& msg, const ViewportSpec& base)
{
    const double lon = number_field(msg, "longitude");
    const double lat = number_field(msg, "latitude");
    if (!(lon >= -kPi && lon <= kPi) || !(lat >= -kPi / 2 && lat <= kPi / 2)) {
        throw RequestError("bad_request", "longitude must lie in [-pi, pi] and latitude in [-pi/2, pi/2]");
    }
    ViewportSpec spec = base.looking_at(Direction::normalized(lon, lat));
    if (const auto it = msg.find("fov"); it != msg.end()) {
        if (it->is_number()) {
            spec.fov_h = spec.fov_v = it->get<double>();
        } else if (it->is_array() && it->size() == 2 && (*it)[0].is_number() && (*it)[1].is_number()) {
            spec.fov_h = (*it)[0].get<double>();
            spec.fov_v = (*it)[1].get<double>();
        } else {
            throw RequestError("bad_request", "fov must be a number or [h, v] in radians");
        }
    }
    if (const auto it = msg.find("vp_dims"); it != msg.end()) {
        if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number_integer() || !(*it)[1].is_number_integer()) {
            throw RequestError("bad_request", "vp_dims must be [width, height]");
        }
        spec.vp_width = (*it)[0].get<int>();
        spec.vp_height = (*it)[1].get<int>();
        if (spec.vp_width > 4096 || spec.vp_height > 4096) {
            throw RequestError("bad_request", "vp_dims larger than 4096");
        }
    }
    try {
        spec.validate();
    } catch (const InvalidArgument& e) {
        throw RequestError("bad_request", e.what());
    }
    return spec;
}

json number_or_null(const std::optional<double>& v)
{
    if (!v || !std::isfinite(*v)) {
        return nullptr;
    }
    return *v;
}

}  // namespace

SessionService::SessionService(PreparedImage prep, ServiceOptions options)
    : prep_(std::move(prep)), options_(options)
{
    if (!prep_.enc) {
        throw InvalidArgument("service needs an encoded image");
    }
    options_.session.viewport.validate();
}

std::size_t SessionService::session_count() const
{
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

std::shared_ptr<SessionService::Entry> SessionService::find_or_create(const std::string& id, bool* created)
{
    std::lock_guard lock(mutex_);
    auto& slot = sessions_[id];
    *created = slot == nullptr;
    if (!slot) {
        slot = std::make_shared<Entry>();
        slot->session = std::make_unique<Session>(prep_.enc, options_.session, prep_.reference);
    }
    return slot;
}

std::string SessionService::handle(std::string_view message)
{
    json msg;
    try {
        msg = json::parse(message);
    } catch (const json::parse_error& e) {
        return error_message("bad_json", e.what(), nullptr).dump();
    }
    if (!msg.is_object()) {
        return error_message("bad_request", "message must be a JSON object", nullptr).dump();
    }
    const json sid = msg.contains("session_id") ? msg["session_id"] : json(nullptr);
    try {
        const std::string type = msg.value("type", std::string("request"));
        const EncodedImage& enc = *prep_.enc;
        if (type == "info") {
            return json{{"type", "info"},
                        {"width", enc.width},
                        {"height", enc.height},
                        {"block_size", enc.grid.block_size()},
                        {"rows", enc.grid.rows()},
                        {"cols", enc.grid.cols()},
                        {"qp", enc.qp},
                        {"mode", enc.mode == RateMode::Practical ? "practical" : "theoretical"},
                        {"order", std::string(order_name(options_.session.order))},
                        {"access_blocks", enc.access.blocks},
                        {"storage_bytes", storage_bytes(enc)}}
                .dump();
        }
        if (type == "open") {
            std::string id;
            if (sid.is_string()) {
                id = sid.get<std::string>();
            } else {
                std::lock_guard lock(mutex_);
                do {
                    id = "s" + std::to_string(next_id_++);
                } while (sessions_.count(id) != 0);
            }
            bool created = false;
            find_or_create(id, &created);
            return json{{"type", "opened"}, {"session_id", id}, {"created", created}}.dump();
        }
        if (!sid.is_string() || sid.get<std::string>().empty()) {
            throw RequestError("bad_request", "session_id must be a non-empty string");
        }
        const std::string id = sid.get<std::string>();
        if (type == "close") {
            std::lock_guard lock(mutex_);
            const bool existed = sessions_.erase(id) > 0;
            return json{{"type", "closed"}, {"session_id", id}, {"existed", existed}}.dump();
        }
        if (type != "request") {
            throw RequestError("bad_request", "unknown message type '" + type + "'");
        }

        const ViewportSpec spec = spec_from(msg, options_.session.viewport);
        // Validated before the session exists so that a bad message creates nothing.
        std::optional<TileLayout> compare;
        if (const auto it = msg.find("compare"); it != msg.end()) {
            if (!it->is_string()) {
                throw RequestError("bad_request", "compare must be a tile layout tag");
            }
            if (!prep_.rates) {
                throw RequestError("unavailable", "baseline comparison needs the source image on the server");
            }
            try {
                compare = parse_layout(it->get<std::string>(), enc.grid);
            } catch (const InvalidArgument& e) {
                throw RequestError("bad_request", e.what());
            }
        }
        bool created = false;
        const auto entry = find_or_create(id, &created);
        std::lock_guard lock(entry->mutex);
        if (compare && entry->requests == 0 && !entry->tiles) {
            auto coding = std::make_unique<TileCoding>(tile_encode(*prep_.rates, *compare));
            entry->tile_session = std::make_unique<TileSession>(*coding);
            entry->tiles = std::move(coding);
        }

        const RequestResult r = entry->session->request(spec);
        json blocks = json::array();
        for (const SentBlock& b : r.blocks) {
            blocks.push_back({{"block_id", b.block},
                              {"context_id", index_of(b.ctx)},
                              {"context", std::string(context_name(b.ctx))},
                              {"bits", b.bits}});
        }
        json out = {{"type", "response"},
                    {"session_id", id},
                    {"request_idx", entry->requests},
                    {"blocks", std::move(blocks)},
                    {"decoded_count", std::count(entry->session->decoded().begin(),
                                                 entry->session->decoded().end(), std::uint8_t{1})},
                    {"viewport",
                     {{"format", "png"},
                      {"width", r.viewport.width()},
                      {"height", r.viewport.height()},
                      {"data", wire::base64_encode(encode_png(r.viewport))}}},
                    {"metrics",
                     {{"request_bits", r.request_bits},
                      {"accumulated_bits", r.accumulated_bits},
                      {"usefulness", r.usefulness},
                      {"psnr_db", number_or_null(r.psnr_db)},
                      {"identical", r.psnr_db && std::isinf(*r.psnr_db)}}}};
        if (entry->tile_session) {
            const Footprint fp = viewport_coverage(spec, enc.width, enc.height, enc.grid.block_size());
            const auto t = entry->tile_session->request(fp.blocks);
            out["baseline"] = {{"tag", entry->tiles->layout.tag},
                               {"request_bits", t.request_bits},
                               {"accumulated_bits", t.accumulated_bits},
                               {"usefulness", usefulness(fp.displayed_pixels, t.decoded_px)}};
        }
        ++entry->requests;
        return out.dump();
    } catch (const RequestError& e) {
        return error_message(e.code, e.what(), sid).dump();
    } catch (const DecodingFailure& e) {
        return error_message("decoding_failure", e.what(), sid).dump();
    } catch (const Error& e) {
        return error_message("internal", e.what(), sid).dump();
    }
}

// --- TCP front end ------------------------------------------------------------

namespace {

bool send_all(int fd, std::span<const std::uint8_t> bytes)
{
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n <= 0) {
            return false;
        }
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

bool send_text(int fd, std::string_view text)
{
    return send_all(fd, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

/// Value of an HTTP header (case-insensitive name), trimmed.
std::optional<std::string> header_value(std::string_view head, std::string_view name)
{
    const std::string lname = lower(name);
    std::size_t pos = head.find("\r\n");
    while (pos != std::string_view::npos && pos + 2 < head.size()) {
        const std::size_t start = pos + 2;
        const std::size_t end = head.find("\r\n", start);
        const std::string_view line = head.substr(start, end == std::string_view::npos ? end : end - start);
        const auto colon = line.find(':');
        if (colon != std::string_view::npos && lower(line.substr(0, colon)) == lname) {
            std::string_view v = line.substr(colon + 1);
            while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) {
                v.remove_prefix(1);
            }
            while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) {
                v.remove_suffix(1);
            }
            return std::string(v);
        }
        pos = end;
    }
    return std::nullopt;
}

}  // namespace

TcpServer::TcpServer(SessionService& service, const std::string& bind) : service_(service)
{
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) {
        throw InvalidArgument("bind address must be host:port");
    }
    const std::string host = bind.substr(0, colon);
    const std::string port = bind.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), port.c_str(), &hints, &res); rc != 0) {
        throw Error("cannot resolve " + bind + ": " + gai_strerror(rc));
    }
    listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (listen_fd_ < 0) {
        ::freeaddrinfo(res);
        throw Error(std::string("socket: ") + std::strerror(errno));
    }
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    const int rc = ::bind(listen_fd_, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0 || ::listen(listen_fd_, 16) != 0) {
        const std::string why = std::strerror(errno);
        ::close(listen_fd_);
        throw Error("cannot listen on " + bind + ": " + why);
    }
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer()
{
    stop();
    for (auto& t : workers_) {
        if (t.joinable()) {
            t.join();
        }
    }
    if (listen_fd_ >= 0) {
        ::close(listen_fd_);
    }
}

void TcpServer::stop()
{
    stopping_ = true;
    std::lock_guard lock(conn_mutex_);
    for (const int fd : connections_) {
        ::shutdown(fd, SHUT_RDWR);
    }
}

void TcpServer::run()
{
    while (!stopping_) {
        pollfd p{listen_fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, 100);
        if (ready <= 0) {
            continue;
        }
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            continue;
        }
        std::lock_guard lock(conn_mutex_);
        if (stopping_) {
            ::close(fd);
            break;
        }
        connections_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TcpServer::serve_connection(int fd)
{
    std::uint8_t buf[65536];
    std::vector<std::uint8_t> pending;
    auto receive = [&]() -> bool {
        const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
        if (n <= 0) {
            return false;
        }
        pending.insert(pending.end(), buf, buf + n);
        return true;
    };
    try {
        while (pending.size() < 4) {
            if (!receive()) {
                throw Error("closed");
            }
        }
        if (std::memcmp(pending.data(), "GET ", 4) == 0) {
            std::string head(pending.begin(), pending.end());
            while (head.find("\r\n\r\n") == std::string::npos) {
                if (head.size() > 16384 || !receive()) {
                    throw Error("bad handshake");
                }
                head.assign(pending.begin(), pending.end());
            }
            const std::size_t body = head.find("\r\n\r\n") + 4;
            const auto key = header_value(head.substr(0, body), "Sec-WebSocket-Key");
            const auto upgrade = header_value(head.substr(0, body), "Upgrade");
            if (!key || !upgrade || lower(*upgrade) != "websocket") {
                send_text(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
                throw Error("not a websocket upgrade");
            }
            send_text(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                          "Sec-WebSocket-Accept: " +
                              wire::websocket_accept_key(*key) + "\r\n\r\n");
            wire::WsDecoder dec;
            dec.feed(std::span(pending).subspan(body));
            std::string message;
            while (true) {
                while (auto f = dec.next()) {
                    switch (f->opcode) {
                    case wire::WsOpcode::Close: send_all(fd, wire::ws_frame("", wire::WsOpcode::Close)); throw Error("closed");
                    case wire::WsOpcode::Ping: send_all(fd, wire::ws_frame(f->payload, wire::WsOpcode::Pong)); break;
                    case wire::WsOpcode::Pong: break;
                    default:
                        message += f->payload;
                        if (message.size() > wire::kMaxMessageBytes) {
                            throw Error("message too large");
                        }
                        if (f->fin) {
                            if (!send_all(fd, wire::ws_frame(service_.handle(message)))) {
                                throw Error("closed");
                            }
                            message.clear();
                        }
                    }
                }
                const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
                if (n <= 0) {
                    break;
                }
                dec.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
            }
        } else {
            wire::FrameDecoder dec;
            dec.feed(pending);
            while (true) {
                while (auto m = dec.next()) {
                    if (!send_all(fd, wire::frame(service_.handle(*m)))) {
                        throw Error("closed");
                    }
                }
                const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
                if (n <= 0) {
                    break;
                }
                dec.feed(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
            }
        }
    } catch (const Error&) {
        // The peer went away or spoke an invalid protocol; drop the connection.
    }
    {
        std::lock_guard lock(conn_mutex_);
        connections_.erase(std::remove(connections_.begin(), connections_.end(), fd), connections_.end());
    }
    ::close(fd);
}

}  // namespace oic
