#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include <minichain/block.hpp>
#include <minichain/state.hpp>
#include <minichain/transaction.hpp>

namespace minichain {

// Sync protocol.
struct ChainStatusRequest {
    friend bool operator==(const ChainStatusRequest&, const ChainStatusRequest&) = default;
};
struct ChainStatusReply {
    Hash tip_hash;
    Difficulty total_difficulty = 0;
    friend bool operator==(const ChainStatusReply&, const ChainStatusReply&) = default;
};
struct BlockRequest {
    static constexpr std::size_t max_hashes = 5;
    /// Newest first.
    std::vector<Hash> known_hashes;
    friend bool operator==(const BlockRequest&, const BlockRequest&) = default;
};
struct BlockReply {
    /// nullopt is the "none" answer: no requested hash is on the responder's chain.
    std::optional<Hash> common;
    std::vector<Block> partial;
    friend bool operator==(const BlockReply&, const BlockReply&) = default;
};
struct MempoolRequest {
    friend bool operator==(const MempoolRequest&, const MempoolRequest&) = default;
};
struct MempoolReply {
    std::vector<Transaction> transactions;
    friend bool operator==(const MempoolReply&, const MempoolReply&) = default;
};

// Local control socket of a standalone node.
struct SubmitTxRequest {
    NodeId receiver = 0;
    Amount value = 0;
    std::string data;
    friend bool operator==(const SubmitTxRequest&, const SubmitTxRequest&) = default;
};
struct SubmitTxReply {
    Transaction transaction;
    friend bool operator==(const SubmitTxReply&, const SubmitTxReply&) = default;
};
struct DumpStatusRequest {
    friend bool operator==(const DumpStatusRequest&, const DumpStatusRequest&) = default;
};
struct StatusDump {
    NodeId id = 0;
    std::uint64_t height = 0;
    Hash tip_hash;
    Difficulty total_difficulty = 0;
    std::uint64_t mempool_size = 0;
    bool mining = false;
    std::vector<std::string> peers;
    friend bool operator==(const StatusDump&, const StatusDump&) = default;
};

using Message = std::variant<ChainStatusRequest, ChainStatusReply, BlockRequest, BlockReply, MempoolRequest, MempoolReply>;
using ControlMessage = std::variant<SubmitTxRequest, SubmitTxReply, DumpStatusRequest, StatusDump>;

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t max_frame_body = 64u * 1024u * 1024u;
inline constexpr std::size_t frame_header_size = 4;

using Bytes = std::vector<std::uint8_t>;

// ---------------------------------------------------------------------------
// Framing: uint32 big-endian body length, then the UTF-8 body.

inline Bytes make_frame(std::string_view body)
{
    if (body.size() > max_frame_body) throw std::length_error("frame body exceeds 64 MiB");
    auto n = static_cast<std::uint32_t>(body.size());
    Bytes out;
    out.reserve(frame_header_size + body.size());
    out.push_back(static_cast<std::uint8_t>(n >> 24));
    out.push_back(static_cast<std::uint8_t>(n >> 16));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n));
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

inline std::uint32_t read_frame_length(std::span<const std::uint8_t> header)
{
    if (header.size() < frame_header_size) throw DecodeError("truncated frame header");
    std::uint32_t n = (std::uint32_t(header[0]) << 24) | (std::uint32_t(header[1]) << 16) | (std::uint32_t(header[2]) << 8) |
                      std::uint32_t(header[3]);
    if (n > max_frame_body) throw DecodeError("oversize frame: " + std::to_string(n) + " bytes");
    return n;
}

/// Body of exactly one complete frame.
inline std::string_view frame_body(std::span<const std::uint8_t> frame)
{
    std::uint32_t n = read_frame_length(frame);
    if (frame.size() - frame_header_size < n) throw DecodeError("truncated frame body");
    if (frame.size() - frame_header_size > n) throw DecodeError("trailing bytes after frame body");
    return {reinterpret_cast<const char*>(frame.data() + frame_header_size), n};
}

// ---------------------------------------------------------------------------
// Document schema.

namespace wire {

using nlohmann::json;

inline void expect_keys(const json& j, std::initializer_list<const char*> keys, const char* what)
{
    if (!j.is_object()) throw DecodeError(std::string(what) + " must be an object");
    if (j.size() != keys.size()) throw DecodeError(std::string(what) + " has unexpected keys");
    for (const char* k : keys)
        if (!j.contains(k)) throw DecodeError(std::string(what) + " is missing '" + k + "'");
}

inline std::uint64_t get_u64(const json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number_unsigned()) throw DecodeError(std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_string()) throw DecodeError(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

/// Zero-padded to the width of the largest uint64, so a status reply has one size for any chain.
inline constexpr std::size_t fixed_width_digits = 20;

inline std::string to_fixed_decimal(std::uint64_t v)
{
    std::string digits = std::to_string(v);
    return std::string(fixed_width_digits - digits.size(), '0') + digits;
}

inline std::uint64_t from_fixed_decimal(const json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_string()) throw DecodeError(std::string("'") + key + "' must be a fixed-width decimal string");
    const auto& s = v.get_ref<const std::string&>();
    if (s.size() != fixed_width_digits || s.find_first_not_of("0123456789") != std::string::npos)
        throw DecodeError(std::string("'") + key + "' must hold exactly 20 decimal digits");
    unsigned __int128 n = 0;
    for (char c : s) n = n * 10 + static_cast<unsigned>(c - '0');
    if (n > std::numeric_limits<std::uint64_t>::max()) throw DecodeError(std::string("'") + key + "' is out of range");
    return static_cast<std::uint64_t>(n);
}

inline Hash to_hash(const json& v)
{
    if (!v.is_string()) throw DecodeError("hash must be a string");
    const auto& s = v.get_ref<const std::string&>();
    for (char c : s)
        if (c >= 'A' && c <= 'F') throw DecodeError("hash must be lowercase hex");
    try {
        return Hash::from_hex(s);
    } catch (const std::invalid_argument& e) {
        throw DecodeError(e.what());
    }
}

inline json to_json(const Transaction& tx)
{
    return {{"sender", tx.sender}, {"receiver", tx.receiver}, {"value", tx.value}, {"data", tx.data},
            {"timestamp", tx.timestamp}, {"id", tx.id.hex()}, {"nonce", tx.nonce}};
}

inline Transaction transaction_from_json(const json& j)
{
    expect_keys(j, {"sender", "receiver", "value", "data", "timestamp", "id", "nonce"}, "transaction");
    Transaction tx;
    tx.sender = get_u64(j, "sender");
    tx.receiver = get_u64(j, "receiver");
    tx.value = get_u64(j, "value");
    tx.data = get_string(j, "data");
    tx.timestamp = get_u64(j, "timestamp");
    tx.id = to_hash(j.at("id"));
    tx.nonce = get_u64(j, "nonce");
    return tx;
}

inline json to_json(const Block& b)
{
    auto txs = json::array();
    for (const auto& tx : b.data) txs.push_back(to_json(tx));
    return {{"height", b.height},
            {"parent_hash", b.parent_hash.hex()},
            {"data", std::move(txs)},
            {"timestamp", b.timestamp},
            {"miner_id", b.miner_id},
            {"difficulty", b.difficulty},
            {"total_difficulty", b.total_difficulty},
            {"transactions_root", b.transactions_root.hex()},
            {"state", state_to_json(b.state)},
            {"nonce", b.nonce},
            {"hash", b.hash.hex()}};
}

inline Block block_from_json(const json& j)
{
    expect_keys(j,
                {"height", "parent_hash", "data", "timestamp", "miner_id", "difficulty", "total_difficulty",
                 "transactions_root", "state", "nonce", "hash"},
                "block");
    Block b;
    b.height = get_u64(j, "height");
    b.parent_hash = to_hash(j.at("parent_hash"));
    const auto& txs = j.at("data");
    if (!txs.is_array()) throw DecodeError("block data must be a list");
    for (const auto& t : txs) b.data.push_back(transaction_from_json(t));
    b.timestamp = get_u64(j, "timestamp");
    b.miner_id = get_u64(j, "miner_id");
    b.difficulty = get_u64(j, "difficulty");
    b.total_difficulty = get_u64(j, "total_difficulty");
    b.transactions_root = to_hash(j.at("transactions_root"));
    try {
        b.state = state_from_json(j.at("state"));
    } catch (const std::invalid_argument& e) {
        throw DecodeError(e.what());
    }
    b.nonce = get_u64(j, "nonce");
    b.hash = to_hash(j.at("hash"));
    return b;
}

inline json envelope(const char* type, json payload)
{
    return {{"type", type}, {"payload", std::move(payload)}};
}

inline json to_json(const ChainStatusRequest&) { return envelope("status_req", json::object()); }
inline json to_json(const ChainStatusReply& m)
{
    return envelope("status_rep", {{"tip_hash", m.tip_hash.hex()}, {"total_difficulty", to_fixed_decimal(m.total_difficulty)}});
}
inline json to_json(const BlockRequest& m)
{
    if (m.known_hashes.size() > BlockRequest::max_hashes) throw std::invalid_argument("block request carries more than 5 hashes");
    auto hashes = json::array();
    for (const auto& h : m.known_hashes) hashes.push_back(h.hex());
    return envelope("block_req", {{"known_hashes", std::move(hashes)}});
}
inline json to_json(const BlockReply& m)
{
    if (!m.common) return envelope("block_rep", {{"common", nullptr}});
    auto blocks = json::array();
    for (const auto& b : m.partial) blocks.push_back(to_json(b));
    return envelope("block_rep", {{"common", m.common->hex()}, {"partial", std::move(blocks)}});
}
inline json to_json(const MempoolRequest&) { return envelope("mempool_req", json::object()); }
inline json to_json(const MempoolReply& m)
{
    auto txs = json::array();
    for (const auto& tx : m.transactions) txs.push_back(to_json(tx));
    return envelope("mempool_rep", {{"transactions", std::move(txs)}});
}

inline json to_json(const SubmitTxRequest& m)
{
    return envelope("submit_tx", {{"receiver", m.receiver}, {"value", m.value}, {"data", m.data}});
}
inline json to_json(const SubmitTxReply& m) { return envelope("submit_rep", {{"transaction", to_json(m.transaction)}}); }
inline json to_json(const DumpStatusRequest&) { return envelope("dump_status", json::object()); }
inline json to_json(const StatusDump& m)
{
    return envelope("status_dump", {{"id", m.id},
                                    {"height", m.height},
                                    {"tip_hash", m.tip_hash.hex()},
                                    {"total_difficulty", m.total_difficulty},
                                    {"mempool_size", m.mempool_size},
                                    {"mining", m.mining},
                                    {"peers", m.peers}});
}

inline std::pair<std::string, json> parse_envelope(std::string_view body)
{
    auto doc = json::parse(body, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw DecodeError("body is not a well-formed UTF-8 document");
    expect_keys(doc, {"type", "payload"}, "message");
    auto type = get_string(doc, "type");
    return {std::move(type), std::move(doc.at("payload"))};
}

inline std::vector<Transaction> transactions_from_json(const json& j)
{
    if (!j.is_array()) throw DecodeError("transactions must be a list");
    std::vector<Transaction> out;
    for (const auto& t : j) out.push_back(transaction_from_json(t));
    return out;
}

} // namespace wire

inline std::string encode_body(const Message& msg)
{
    return std::visit([](const auto& m) { return wire::to_json(m).dump(); }, msg);
}

inline std::string encode_body(const ControlMessage& msg)
{
    return std::visit([](const auto& m) { return wire::to_json(m).dump(); }, msg);
}

inline Bytes encode(const Message& msg) { return make_frame(encode_body(msg)); }
inline Bytes encode(const ControlMessage& msg) { return make_frame(encode_body(msg)); }

inline Message decode_body(std::string_view body)
{
    using wire::expect_keys;
    auto [type, p] = wire::parse_envelope(body);
    try {
        if (type == "status_req") {
            expect_keys(p, {}, "status_req payload");
            return ChainStatusRequest{};
        }
        if (type == "status_rep") {
            expect_keys(p, {"tip_hash", "total_difficulty"}, "status_rep payload");
            return ChainStatusReply{wire::to_hash(p.at("tip_hash")), wire::from_fixed_decimal(p, "total_difficulty")};
        }
        if (type == "block_req") {
            expect_keys(p, {"known_hashes"}, "block_req payload");
            const auto& hs = p.at("known_hashes");
            if (!hs.is_array()) throw DecodeError("known_hashes must be a list");
            if (hs.size() > BlockRequest::max_hashes) throw DecodeError("block request carries more than 5 hashes");
            BlockRequest req;
            for (const auto& h : hs) req.known_hashes.push_back(wire::to_hash(h));
            return req;
        }
        if (type == "block_rep") {
            if (p.is_object() && p.size() == 1 && p.contains("common") && p.at("common").is_null()) return BlockReply{};
            expect_keys(p, {"common", "partial"}, "block_rep payload");
            BlockReply rep;
            rep.common = wire::to_hash(p.at("common"));
            const auto& blocks = p.at("partial");
            if (!blocks.is_array()) throw DecodeError("partial must be a list");
            for (const auto& b : blocks) rep.partial.push_back(wire::block_from_json(b));
            return rep;
        }
        if (type == "mempool_req") {
            expect_keys(p, {}, "mempool_req payload");
            return MempoolRequest{};
        }
        if (type == "mempool_rep") {
            expect_keys(p, {"transactions"}, "mempool_rep payload");
            return MempoolReply{wire::transactions_from_json(p.at("transactions"))};
        }
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(e.what());
    }
    throw DecodeError("unknown message type '" + type + "'");
}

inline ControlMessage decode_control_body(std::string_view body)
{
    using wire::expect_keys;
    auto [type, p] = wire::parse_envelope(body);
    try {
        if (type == "submit_tx") {
            expect_keys(p, {"receiver", "value", "data"}, "submit_tx payload");
            return SubmitTxRequest{wire::get_u64(p, "receiver"), wire::get_u64(p, "value"), wire::get_string(p, "data")};
        }
        if (type == "submit_rep") {
            expect_keys(p, {"transaction"}, "submit_rep payload");
            return SubmitTxReply{wire::transaction_from_json(p.at("transaction"))};
        }
        if (type == "dump_status") {
            expect_keys(p, {}, "dump_status payload");
            return DumpStatusRequest{};
        }
        if (type == "status_dump") {
            expect_keys(p, {"id", "height", "tip_hash", "total_difficulty", "mempool_size", "mining", "peers"}, "status_dump payload");
            StatusDump d;
            d.id = wire::get_u64(p, "id");
            d.height = wire::get_u64(p, "height");
            d.tip_hash = wire::to_hash(p.at("tip_hash"));
            d.total_difficulty = wire::get_u64(p, "total_difficulty");
            d.mempool_size = wire::get_u64(p, "mempool_size");
            if (!p.at("mining").is_boolean()) throw DecodeError("'mining' must be a boolean");
            d.mining = p.at("mining").get<bool>();
            if (!p.at("peers").is_array()) throw DecodeError("'peers' must be a list");
            for (const auto& e : p.at("peers")) {
                if (!e.is_string()) throw DecodeError("peer entries must be strings");
                d.peers.push_back(e.get<std::string>());
            }
            return d;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(e.what());
    }
    throw DecodeError("unknown control message type '" + type + "'");
}

inline Message decode(std::span<const std::uint8_t> frame) { return decode_body(frame_body(frame)); }
inline ControlMessage decode_control(std::span<const std::uint8_t> frame) { return decode_control_body(frame_body(frame)); }

} // namespace minichain
