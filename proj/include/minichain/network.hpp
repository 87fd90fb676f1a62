#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <minichain/enode.hpp>
#include <minichain/message.hpp>

namespace minichain {

/// Serves one framed request, returning the framed reply. Throws DecodeError on a bad frame,
/// which closes the connection without a reply.
using FrameHandler = std::function<Bytes(std::span<const std::uint8_t>)>;

inline std::string endpoint_key(const NodeIdentity& ident)
{
    return ident.host + ":" + std::to_string(ident.port);
}

/// Request/reply transport plus listener registration. One request and one reply per exchange.
class Network {
public:
    virtual ~Network() = default;

    /// nullopt when the peer is unreachable, times out, or drops the connection.
    virtual std::optional<Bytes> request(const NodeIdentity& peer, std::span<const std::uint8_t> frame) = 0;

    /// Throws std::runtime_error when the address is already taken.
    virtual void listen(const NodeIdentity& self, FrameHandler handler) = 0;
    virtual void unlisten(const NodeIdentity& self) = 0;
};

/// Deterministic in-process transport. Requests are served synchronously by the registered
/// handler through the same encode/decode path as TCP.
class SimNetwork final : public Network {
public:
    std::optional<Bytes> request(const NodeIdentity& peer, std::span<const std::uint8_t> frame) override
    {
        auto it = handlers_.find(endpoint_key(peer));
        if (it == handlers_.end()) return std::nullopt;
        try {
            return it->second(frame);
        } catch (const DecodeError&) {
            return std::nullopt;
        }
    }

    void listen(const NodeIdentity& self, FrameHandler handler) override
    {
        auto [it, inserted] = handlers_.emplace(endpoint_key(self), std::move(handler));
        if (!inserted) throw std::runtime_error("address already in use: " + endpoint_key(self));
    }

    void unlisten(const NodeIdentity& self) override { handlers_.erase(endpoint_key(self)); }

    bool listening(const NodeIdentity& ident) const { return handlers_.count(endpoint_key(ident)) > 0; }

private:
    std::map<std::string, FrameHandler> handlers_;
};

} // namespace minichain
