#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <minichain/hash.hpp>
#include <minichain/state.hpp>
#include <minichain/transaction.hpp>

namespace minichain {

using Difficulty = std::uint64_t;

struct Block {
    std::uint64_t height = 0;
    Hash parent_hash;
    std::vector<Transaction> data;
    Timestamp timestamp = 0;
    NodeId miner_id = 0;
    Difficulty difficulty = 0;
    Difficulty total_difficulty = 0;
    Hash transactions_root;
    WorldState state;
    std::uint64_t nonce = 0;
    Hash hash;

    friend bool operator==(const Block&, const Block&) = default;
};

/// SHA-256 over the in-order concatenation of the raw 32-byte ids; the empty list hashes the empty string.
inline Hash compute_transactions_root(std::span<const Transaction> txs)
{
    std::vector<std::uint8_t> buf;
    buf.reserve(txs.size() * Hash::size);
    for (const auto& tx : txs) buf.insert(buf.end(), tx.id.bytes().begin(), tx.id.bytes().end());
    return sha256(std::span<const std::uint8_t>(buf));
}

/// Header preimage, fixed key order:
/// height|parent_hash|timestamp|miner_id|difficulty|total_difficulty|transactions_root|state_digest|nonce
inline std::string block_preimage(const Block& b, const Hash& state_dig)
{
    std::string out;
    out.reserve(320);
    out += "height=" + std::to_string(b.height);
    out += "|parent_hash=" + b.parent_hash.hex();
    out += "|timestamp=" + std::to_string(b.timestamp);
    out += "|miner_id=" + std::to_string(b.miner_id);
    out += "|difficulty=" + std::to_string(b.difficulty);
    out += "|total_difficulty=" + std::to_string(b.total_difficulty);
    out += "|transactions_root=" + b.transactions_root.hex();
    out += "|state_digest=" + state_dig.hex();
    out += "|nonce=" + std::to_string(b.nonce);
    return out;
}

/// Use this overload in hot loops where the state digest is already known.
inline Hash compute_block_hash(const Block& b, const Hash& state_dig)
{
    return sha256(block_preimage(b, state_dig));
}

inline Hash compute_block_hash(const Block& b)
{
    return compute_block_hash(b, state_digest(b.state));
}

/// Height 0, zero parent, zero miner, difficulty 0, timestamp 0, nonce 0.
inline Block make_genesis(WorldState initial)
{
    Block g;
    g.state = std::move(initial);
    g.transactions_root = compute_transactions_root({});
    g.hash = compute_block_hash(g);
    return g;
}

} // namespace minichain
