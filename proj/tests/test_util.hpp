#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <minichain/minichain.hpp>

namespace minichain::test {

inline Bytes read_fixture(const std::string& name)
{
    std::ifstream in(std::filesystem::path(MINICHAIN_FIXTURE_DIR) / name, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline WorldState funded(std::initializer_list<NodeId> ids, Amount each = 1000)
{
    WorldState s;
    for (auto id : ids) s.balances[id] = each;
    return s;
}

inline PoAConfig poa_config(std::vector<NodeId> signers, Timestamp period = 5, Timestamp delay = 2, bool trust = false)
{
    PoAConfig c;
    c.signers = std::move(signers);
    c.block_period = period;
    c.delay_noturn = delay;
    c.trust = trust;
    return c;
}

inline PoWConfig pow_config(Difficulty d, bool trust = false, std::uint64_t attempts = 8)
{
    PoWConfig c;
    c.mining_difficulty = d;
    c.trust = trust;
    c.attempts_per_step = attempts;
    return c;
}

/// Hand-assembled block extending `parent`, hashed but not sealed against any target.
inline Block child_of(const Block& parent, std::vector<Transaction> txs, Timestamp ts, NodeId miner, Difficulty difficulty,
                      const ContractRegistry& registry = ContractRegistry{})
{
    ProductionContext ctx{miner, parent, txs, ts, registry};
    Block b = build_draft(ctx, difficulty);
    b.hash = compute_block_hash(b);
    return b;
}

/// Honest in-turn PoA blocks on top of `from`, each carrying a few random transfers.
inline std::vector<Block> honest_poa_blocks(const ProofOfAuthority& poa, const Block& from, std::size_t count, std::uint64_t seed,
                                            const ContractRegistry& registry = ContractRegistry{})
{
    std::mt19937_64 rng(seed);
    const auto& cfg = poa.config();
    std::vector<Block> out;
    const Block* prev = &from;
    std::uint64_t nonce = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<Transaction> txs;
        std::size_t n = 1 + rng() % 3;
        for (std::size_t k = 0; k < n; ++k) {
            NodeId s = cfg.signers[rng() % cfg.signers.size()];
            NodeId r = cfg.signers[rng() % cfg.signers.size()];
            txs.push_back(make_transaction(s, r, rng() % 50, "memo" + std::to_string(rng() % 100), prev->timestamp + 1, nonce++));
        }
        std::uint64_t h = prev->height + 1;
        out.push_back(child_of(*prev, std::move(txs), prev->timestamp + cfg.block_period, poa_inturn_signer(h, cfg), cfg.diff_inturn,
                               registry));
        prev = &out.back();
    }
    return out;
}

/// Applies one random corruption to `blocks` and names it. Every mutation leaves the chain
/// invalid under trust=false verification.
inline std::string tamper(std::vector<Block>& blocks, std::mt19937_64& rng)
{
    auto random_hash = [&] { return sha256("tamper" + std::to_string(rng())); };
    auto bump = [&](std::uint64_t v) { return v + 1 + rng() % 5; };
    Block& b = blocks[rng() % blocks.size()];
    Block* with_txs = &b;
    for (auto& x : blocks)
        if (!x.data.empty() && (with_txs->data.empty() || rng() % 3 == 0)) with_txs = &x;

    switch (rng() % 16) {
    case 0: b.height = bump(b.height); return "height";
    case 1: b.parent_hash = random_hash(); return "parent_hash";
    case 2: b.timestamp = bump(b.timestamp); return "timestamp";
    case 3: b.miner_id = bump(b.miner_id); return "miner_id";
    case 4: b.difficulty = bump(b.difficulty); return "difficulty";
    case 5: b.total_difficulty = bump(b.total_difficulty); return "total_difficulty";
    case 6: b.transactions_root = random_hash(); return "transactions_root";
    case 7: b.state.balances[rng() % 4] += 1 + rng() % 7; return "state";
    case 8: b.nonce = bump(b.nonce); return "nonce";
    case 9: b.hash = random_hash(); return "hash";
    case 10: with_txs->data.front().value = bump(with_txs->data.front().value); return "tx.value";
    case 11: with_txs->data.back().data += static_cast<char>('a' + rng() % 26); return "tx.data";
    case 12: with_txs->data.pop_back(); return "tx.drop";
    case 13: with_txs->data.push_back(with_txs->data.front()); return "tx.duplicate";
    case 14: {
        // Re-sealed state forgery: header and hash are consistent, only re-execution exposes it.
        b.state.balances[rng() % 4] += 1 + rng() % 7;
        b.hash = compute_block_hash(b);
        return "state+rehash";
    }
    default: {
        auto& tx = with_txs->data.front();
        tx.receiver = bump(tx.receiver);
        tx.id = compute_transaction_id(tx);
        return "tx.receiver+id";
    }
    }
}

/// A few nodes on one in-process bus, stepped together in id order.
struct Cluster {
    std::shared_ptr<const ConsensusProtocol> consensus;
    std::shared_ptr<const ContractRegistry> registry;
    std::shared_ptr<SimNetwork> network = std::make_shared<SimNetwork>();
    std::vector<std::unique_ptr<Node>> nodes;

    Cluster(std::shared_ptr<const ConsensusProtocol> c, std::size_t n, ContractRegistry r = ContractRegistry{}, SyncConfig sync = {})
        : consensus(std::move(c)), registry(std::make_shared<const ContractRegistry>(std::move(r)))
    {
        for (NodeId i = 0; i < n; ++i) {
            nodes.push_back(std::make_unique<Node>(NodeIdentity{i, "127.0.0.1", static_cast<std::uint16_t>(40000 + i)}, consensus,
                                                   registry, std::make_unique<SimulatedClock>(), network, sync));
            nodes.back()->start_tcp();
        }
    }

    Node& operator[](std::size_t i) { return *nodes[i]; }

    void link(std::size_t a, std::size_t b)
    {
        nodes[a]->add_peer(format_enode(nodes[b]->identity()));
        nodes[b]->add_peer(format_enode(nodes[a]->identity()));
    }

    void link_all()
    {
        for (std::size_t a = 0; a < nodes.size(); ++a)
            for (std::size_t b = a + 1; b < nodes.size(); ++b) link(a, b);
    }

    void step(std::size_t k = 1)
    {
        for (std::size_t i = 0; i < k; ++i)
            for (auto& n : nodes) n->step();
    }
};

} // namespace minichain::test
