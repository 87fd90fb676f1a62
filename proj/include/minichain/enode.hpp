#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace minichain {

using NodeId = std::uint64_t;

struct NodeIdentity {
    NodeId id = 0;
    std::string host;
    std::uint16_t port = 0;

    friend bool operator==(const NodeIdentity&, const NodeIdentity&) = default;
};

class EnodeError : public std::invalid_argument {
public:
    EnodeError(std::string component, const std::string& what)
        : std::invalid_argument("malformed enode (" + component + "): " + what), component_(std::move(component)) {}

    /// One of "scheme", "id", "host", "port".
    const std::string& component() const { return component_; }

private:
    std::string component_;
};

namespace detail {

// Decimal without sign or redundant leading zeros, so formatting reproduces the input.
inline bool parse_decimal(std::string_view s, std::uint64_t& out)
{
    if (s.empty() || (s.size() > 1 && s[0] == '0')) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size();
}

inline bool valid_host_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '_';
}

} // namespace detail

/// Parses `enode://<id>@<host>:<port>`.
inline NodeIdentity parse_enode(std::string_view text)
{
    constexpr std::string_view scheme = "enode://";
    if (!text.starts_with(scheme)) throw EnodeError("scheme", "expected prefix 'enode://'");
    text.remove_prefix(scheme.size());

    auto at = text.find('@');
    if (at == std::string_view::npos) throw EnodeError("id", "missing '@'");
    NodeIdentity ident;
    if (!detail::parse_decimal(text.substr(0, at), ident.id)) throw EnodeError("id", "non-numeric id '" + std::string(text.substr(0, at)) + "'");

    auto rest = text.substr(at + 1);
    auto colon = rest.rfind(':');
    if (colon == std::string_view::npos) throw EnodeError("port", "missing ':'");
    auto host = rest.substr(0, colon);
    if (host.empty()) throw EnodeError("host", "empty host");
    for (char c : host)
        if (!detail::valid_host_char(c)) throw EnodeError("host", "invalid character in host '" + std::string(host) + "'");
    ident.host = std::string(host);

    std::uint64_t port = 0;
    if (!detail::parse_decimal(rest.substr(colon + 1), port) || port == 0 || port > 65535)
        throw EnodeError("port", "port must be a decimal in 1..65535, got '" + std::string(rest.substr(colon + 1)) + "'");
    ident.port = static_cast<std::uint16_t>(port);
    return ident;
}

inline std::string format_enode(const NodeIdentity& ident)
{
    return "enode://" + std::to_string(ident.id) + "@" + ident.host + ":" + std::to_string(ident.port);
}

} // namespace minichain
