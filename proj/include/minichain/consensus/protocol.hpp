#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include <minichain/block.hpp>
#include <minichain/contract.hpp>
#include <minichain/state_machine.hpp>

namespace minichain {

/// Everything a block producer may look at during one production step.
struct ProductionContext {
    NodeId self = 0;
    const Block& tip;
    /// Mempool contents in inclusion order.
    std::span<const Transaction> pending;
    Timestamp now = 0;
    const ContractRegistry& registry;
};

/// The block production task. Real-time drivers call step() in a loop; simulations call it once per step.
class BlockProducer {
public:
    virtual ~BlockProducer() = default;
    /// Returns a sealed block extending ctx.tip, or nullopt when nothing is ready yet.
    virtual std::optional<Block> step(const ProductionContext& ctx) = 0;
};

class ConsensusProtocol {
public:
    virtual ~ConsensusProtocol() = default;

    virtual const Block& genesis() const = 0;
    virtual bool trust() const = 0;
    virtual std::string name() const = 0;

    virtual std::unique_ptr<BlockProducer> make_producer(NodeId self) const = 0;

    /// Checks `chain` block by block, starting against `previous` (the block preceding chain[0])
    /// whose post-state is `previous_state`.
    virtual bool verify_chain(std::span<const Block> chain, const Block& previous, const WorldState& previous_state,
                              const ContractRegistry& registry) const = 0;
};

/// Fresh block on top of ctx.tip holding every pending transaction, with post-state, root and
/// difficulty filled in. The hash is left for the caller to seal.
inline Block build_draft(const ProductionContext& ctx, Difficulty difficulty)
{
    Block draft;
    draft.height = ctx.tip.height + 1;
    draft.parent_hash = ctx.tip.hash;
    draft.data.assign(ctx.pending.begin(), ctx.pending.end());
    draft.timestamp = ctx.now;
    draft.miner_id = ctx.self;
    draft.difficulty = difficulty;
    draft.total_difficulty = ctx.tip.total_difficulty + difficulty;
    draft.transactions_root = compute_transactions_root(draft.data);
    draft.state = apply_block(ctx.tip.state, draft, ctx.registry);
    return draft;
}

/// Consensus-independent part of block verification: every transaction id recomputes, the
/// transactions root recomputes, the recorded state matches re-execution (skipped under trust),
/// and the header hash recomputes. On success returns the state digest bound by the header.
inline std::optional<Hash> verify_block_contents(const Block& block, const WorldState& previous_state, bool trust,
                                                 const ContractRegistry& registry)
{
    for (const auto& tx : block.data)
        if (compute_transaction_id(tx) != tx.id) return std::nullopt;
    if (compute_transactions_root(block.data) != block.transactions_root) return std::nullopt;
    if (!trust && apply_block(previous_state, block, registry) != block.state) return std::nullopt;
    Hash dig = state_digest(block.state);
    if (compute_block_hash(block, dig) != block.hash) return std::nullopt;
    return dig;
}

} // namespace minichain

namespace minichain {

/// Contract-store key under which genesis records the consensus parameters, so that nodes
/// configured with different rules end up with different genesis hashes.
inline constexpr const char* consensus_key = "_consensus";

inline Block make_bound_genesis(WorldState initial, const std::string& descriptor)
{
    initial.contract[consensus_key] = descriptor;
    return make_genesis(std::move(initial));
}

} // namespace minichain
