#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <minichain/enode.hpp>
#include <minichain/hash.hpp>
#include <minichain/state.hpp>

namespace minichain {

using Timestamp = std::uint64_t;

struct Transaction {
    NodeId sender = 0;
    NodeId receiver = 0;
    Amount value = 0;
    std::string data;
    Timestamp timestamp = 0;
    Hash id;
    std::uint64_t nonce = 0;

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

inline bool is_valid_utf8(std::string_view s)
{
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) { ++i; continue; }
        if ((c & 0xe0) == 0xc0) { extra = 1; cp = c & 0x1f; }
        else if ((c & 0xf0) == 0xe0) { extra = 2; cp = c & 0x0f; }
        else if ((c & 0xf8) == 0xf0) { extra = 3; cp = c & 0x07; }
        else return false;
        if (i + extra >= s.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        static constexpr std::uint32_t min_cp[] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[extra] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return false;
        i += extra + 1;
    }
    return true;
}

/// Hash preimage: `sender=<d>|receiver=<d>|value=<d>|data=<raw utf-8>|timestamp=<d>|nonce=<d>`.
/// The fields after `data` are fixed-count integers, so the line parses uniquely from both ends
/// and `data` needs no escaping.
inline std::string transaction_preimage(const Transaction& tx)
{
    std::string out;
    out.reserve(96 + tx.data.size());
    out += "sender=" + std::to_string(tx.sender);
    out += "|receiver=" + std::to_string(tx.receiver);
    out += "|value=" + std::to_string(tx.value);
    out += "|data=";
    out += tx.data;
    out += "|timestamp=" + std::to_string(tx.timestamp);
    out += "|nonce=" + std::to_string(tx.nonce);
    return out;
}

/// Ignores `tx.id`.
inline Hash compute_transaction_id(const Transaction& tx)
{
    return sha256(transaction_preimage(tx));
}

inline Transaction make_transaction(NodeId sender, NodeId receiver, Amount value, std::string data, Timestamp timestamp,
                                    std::uint64_t nonce)
{
    if (!is_valid_utf8(data)) throw std::invalid_argument("transaction data must be valid UTF-8");
    Transaction tx{sender, receiver, value, std::move(data), timestamp, Hash{}, nonce};
    tx.id = compute_transaction_id(tx);
    return tx;
}

} // namespace minichain
