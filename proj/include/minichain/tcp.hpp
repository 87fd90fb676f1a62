#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <minichain/message.hpp>
#include <minichain/network.hpp>
#include <minichain/node.hpp>

namespace minichain {

namespace tcp {

using Clock = std::chrono::steady_clock;

/// Owns a socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    ~Socket() { reset(); }
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept
    {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;

    int fd() const { return fd_; }
    explicit operator bool() const { return fd_ >= 0; }

    void reset()
    {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline int remaining_ms(Clock::time_point deadline)
{
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left > 0 ? static_cast<int>(left) : 0;
}

inline bool wait_for(int fd, short events, Clock::time_point deadline)
{
    for (;;) {
        pollfd p{fd, events, 0};
        int r = ::poll(&p, 1, remaining_ms(deadline));
        if (r > 0) return true;
        if (r == 0) return false;
        if (errno != EINTR) return false;
    }
}

inline bool send_all(int fd, std::span<const std::uint8_t> data, Clock::time_point deadline)
{
    std::size_t sent = 0;
    while (sent < data.size()) {
        if (!wait_for(fd, POLLOUT, deadline)) return false;
        ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n < 0 && (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK)) continue;
        if (n <= 0) return false;
        sent += static_cast<std::size_t>(n);
    }
    return true;
}

inline bool recv_exact(int fd, std::uint8_t* out, std::size_t len, Clock::time_point deadline)
{
    std::size_t got = 0;
    while (got < len) {
        if (!wait_for(fd, POLLIN, deadline)) return false;
        ssize_t n = ::recv(fd, out + got, len - got, 0);
        if (n < 0 && (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK)) continue;
        if (n <= 0) return false;
        got += static_cast<std::size_t>(n);
    }
    return true;
}

/// Reads one whole frame. Throws DecodeError on an oversize length; nullopt on I/O failure.
inline std::optional<Bytes> recv_frame(int fd, Clock::time_point deadline)
{
    Bytes frame(frame_header_size);
    if (!recv_exact(fd, frame.data(), frame_header_size, deadline)) return std::nullopt;
    std::uint32_t n = read_frame_length(frame);
    frame.resize(frame_header_size + n);
    if (!recv_exact(fd, frame.data() + frame_header_size, n, deadline)) return std::nullopt;
    return frame;
}

inline void set_nonblocking(int fd)
{
    int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

struct AddrInfoDeleter {
    void operator()(addrinfo* p) const { ::freeaddrinfo(p); }
};

inline std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const std::string& host, std::uint16_t port, bool passive)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res) return nullptr;
    return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

inline Socket connect_to(const std::string& host, std::uint16_t port, Clock::time_point deadline)
{
    auto addr = resolve(host, port, false);
    if (!addr) return {};
    Socket s(::socket(addr->ai_family, addr->ai_socktype, addr->ai_protocol));
    if (!s) return {};
    set_nonblocking(s.fd());
    if (::connect(s.fd(), addr->ai_addr, addr->ai_addrlen) != 0) {
        if (errno != EINPROGRESS) return {};
        if (!wait_for(s.fd(), POLLOUT, deadline)) return {};
        int err = 0;
        socklen_t len = sizeof(err);
        if (::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) return {};
    }
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return s;
}

/// One request, one reply, then the connection closes.
inline std::optional<Bytes> round_trip(const std::string& host, std::uint16_t port, std::span<const std::uint8_t> frame,
                                       std::chrono::milliseconds timeout)
{
    auto deadline = Clock::now() + timeout;
    Socket s = connect_to(host, port, deadline);
    if (!s) return std::nullopt;
    if (!send_all(s.fd(), frame, deadline)) return std::nullopt;
    try {
        return recv_frame(s.fd(), deadline);
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

/// A listening socket served by one accept thread, one connection at a time.
class Listener {
public:
    Listener(const NodeIdentity& self, FrameHandler handler, std::chrono::milliseconds io_timeout)
        : handler_(std::move(handler)), io_timeout_(io_timeout)
    {
        auto addr = resolve(self.host, self.port, true);
        if (!addr) throw std::runtime_error("cannot resolve listen address " + endpoint_key(self));
        socket_ = Socket(::socket(addr->ai_family, addr->ai_socktype, addr->ai_protocol));
        if (!socket_) throw std::runtime_error("socket() failed");
        int one = 1;
        ::setsockopt(socket_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(socket_.fd(), addr->ai_addr, addr->ai_addrlen) != 0)
            throw std::runtime_error("bind " + endpoint_key(self) + " failed: " + std::strerror(errno));
        if (::listen(socket_.fd(), 64) != 0) throw std::runtime_error("listen failed: " + std::string(std::strerror(errno)));
        set_nonblocking(socket_.fd());
        thread_ = std::thread([this] { run(); });
    }

    ~Listener()
    {
        running_ = false;
        if (thread_.joinable()) thread_.join();
    }

    Listener(const Listener&) = delete;
    Listener& operator=(const Listener&) = delete;

private:
    void run()
    {
        while (running_) {
            pollfd p{socket_.fd(), POLLIN, 0};
            if (::poll(&p, 1, 100) <= 0) continue;
            Socket conn(::accept(socket_.fd(), nullptr, nullptr));
            if (!conn) continue;
            set_nonblocking(conn.fd());
            serve(conn);
        }
    }

    void serve(const Socket& conn)
    {
        auto deadline = Clock::now() + io_timeout_;
        try {
            auto frame = recv_frame(conn.fd(), deadline);
            if (!frame) return;
            Bytes reply = handler_(*frame);
            send_all(conn.fd(), reply, deadline);
        } catch (const DecodeError&) {
            // Malformed request: close without a reply.
        } catch (const std::exception&) {
        }
    }

    Socket socket_;
    FrameHandler handler_;
    std::chrono::milliseconds io_timeout_;
    std::atomic<bool> running_ = true;
    std::thread thread_;
};

} // namespace tcp

/// TCP transport: one short-lived connection per request, 2 s timeout by default.
class TcpNetwork final : public Network {
public:
    explicit TcpNetwork(std::chrono::milliseconds timeout = std::chrono::seconds(2)) : timeout_(timeout) {}

    std::optional<Bytes> request(const NodeIdentity& peer, std::span<const std::uint8_t> frame) override
    {
        return tcp::round_trip(peer.host, peer.port, frame, timeout_);
    }

    void listen(const NodeIdentity& self, FrameHandler handler) override
    {
        auto listener = std::make_unique<tcp::Listener>(self, std::move(handler), timeout_);
        std::lock_guard lock(mutex_);
        listeners_[endpoint_key(self)] = std::move(listener);
    }

    void unlisten(const NodeIdentity& self) override
    {
        std::unique_ptr<tcp::Listener> victim;
        {
            std::lock_guard lock(mutex_);
            auto it = listeners_.find(endpoint_key(self));
            if (it == listeners_.end()) return;
            victim = std::move(it->second);
            listeners_.erase(it);
        }
    }

private:
    std::chrono::milliseconds timeout_;
    std::mutex mutex_;
    std::map<std::string, std::unique_ptr<tcp::Listener>> listeners_;
};

/// Frame handler for the local control socket of a standalone node.
inline FrameHandler control_handler(Node& node)
{
    return [&node](std::span<const std::uint8_t> frame) -> Bytes {
        ControlMessage msg = decode_control(frame);
        if (const auto* submit = std::get_if<SubmitTxRequest>(&msg)) {
            try {
                return encode(ControlMessage{SubmitTxReply{node.submit_transaction(submit->receiver, submit->value, submit->data)}});
            } catch (const std::invalid_argument& e) {
                throw DecodeError(e.what());
            }
        }
        if (std::holds_alternative<DumpStatusRequest>(msg)) return encode(ControlMessage{node.status()});
        throw DecodeError("control message is not a request");
    };
}

/// Client side of the control socket.
inline std::optional<ControlMessage> control_request(const std::string& host, std::uint16_t port, const ControlMessage& msg,
                                                     std::chrono::milliseconds timeout = std::chrono::seconds(2))
{
    auto raw = tcp::round_trip(host, port, encode(msg), timeout);
    if (!raw) return std::nullopt;
    try {
        return decode_control(*raw);
    } catch (const DecodeError&) {
        return std::nullopt;
    }
}

struct RealtimeOptions {
    std::chrono::milliseconds production_poll{50};
    std::chrono::milliseconds chain_interval{2000};
    std::chrono::milliseconds mempool_interval{2000};
    std::chrono::milliseconds mempool_offset{1000};
};

/// Drives a Node against the wall clock: production task plus the two pingers, each on its own
/// thread. The pingers run only between start() and stop().
class RealtimeNode {
public:
    explicit RealtimeNode(Node& node, RealtimeOptions options = {}) : node_(node), options_(options) {}
    ~RealtimeNode() { stop(); }

    RealtimeNode(const RealtimeNode&) = delete;
    RealtimeNode& operator=(const RealtimeNode&) = delete;

    /// Binds the listener (throws on failure) and starts the tasks.
    void start()
    {
        if (running_) return;
        node_.start_tcp();
        running_ = true;
        threads_.emplace_back([this] { loop(std::chrono::milliseconds(0), options_.production_poll, [this] { node_.production_step(); }); });
        threads_.emplace_back([this] { loop(std::chrono::milliseconds(0), options_.chain_interval, [this] { node_.chain_pinger_tick(); }); });
        threads_.emplace_back([this] { loop(options_.mempool_offset, options_.mempool_interval, [this] { node_.mempool_pinger_tick(); }); });
    }

    void stop()
    {
        {
            std::lock_guard lock(mutex_);
            if (!running_) return;
            running_ = false;
        }
        wake_.notify_all();
        for (auto& t : threads_) t.join();
        threads_.clear();
        node_.stop_tcp();
    }

    bool running() const { return running_; }

private:
    void loop(std::chrono::milliseconds offset, std::chrono::milliseconds interval, const std::function<void()>& task)
    {
        auto next = std::chrono::steady_clock::now() + offset;
        std::unique_lock lock(mutex_);
        while (running_) {
            if (wake_.wait_until(lock, next, [this] { return !running_; })) break;
            lock.unlock();
            task();
            lock.lock();
            next += interval;
            auto now = std::chrono::steady_clock::now();
            if (next < now) next = now;
        }
    }

    Node& node_;
    RealtimeOptions options_;
    std::mutex mutex_;
    std::condition_variable wake_;
    std::atomic<bool> running_ = false;
    std::vector<std::thread> threads_;
};

} // namespace minichain
