#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace minichain {

/// A 32-byte SHA-256 digest. Textual form is 64 lowercase hex characters.
class Hash {
public:
    static constexpr std::size_t size = 32;
    using bytes_type = std::array<std::uint8_t, size>;

    constexpr Hash() = default;
    constexpr explicit Hash(const bytes_type& bytes) : bytes_(bytes) {}

    const bytes_type& bytes() const { return bytes_; }
    bytes_type& bytes() { return bytes_; }

    bool is_zero() const
    {
        for (auto b : bytes_)
            if (b != 0) return false;
        return true;
    }

    std::string hex() const
    {
        static constexpr char digits[] = "0123456789abcdef";
        std::string out(size * 2, '0');
        for (std::size_t i = 0; i < size; ++i) {
            out[2 * i] = digits[bytes_[i] >> 4];
            out[2 * i + 1] = digits[bytes_[i] & 0x0f];
        }
        return out;
    }

    /// Accepts exactly 64 hex characters (either case); throws std::invalid_argument otherwise.
    static Hash from_hex(std::string_view text)
    {
        if (text.size() != size * 2)
            throw std::invalid_argument("hash must be 64 hex characters, got " + std::to_string(text.size()));
        auto nibble = [&](char c) -> std::uint8_t {
            if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
            throw std::invalid_argument("invalid hex character in hash");
        };
        Hash h;
        for (std::size_t i = 0; i < size; ++i)
            h.bytes_[i] = static_cast<std::uint8_t>((nibble(text[2 * i]) << 4) | nibble(text[2 * i + 1]));
        return h;
    }

    friend auto operator<=>(const Hash&, const Hash&) = default;

private:
    bytes_type bytes_{};
};

inline Hash sha256(std::span<const std::uint8_t> data)
{
    Hash out;
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.bytes().data(), &len, EVP_sha256(), nullptr) != 1 || len != Hash::size)
        throw std::runtime_error("EVP_Digest(sha256) failed");
    return out;
}

inline Hash sha256(std::string_view text)
{
    return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

struct HashHasher {
    std::size_t operator()(const Hash& h) const noexcept
    {
        // Digest bytes are already uniformly distributed.
        std::size_t v = 0;
        for (std::size_t i = 0; i < sizeof(v); ++i)
            v = (v << 8) | h.bytes()[i];
        return v;
    }
};

} // namespace minichain
