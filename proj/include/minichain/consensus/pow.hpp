#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include <minichain/consensus/protocol.hpp>

namespace minichain {

using boost::multiprecision::cpp_int;

struct PoWConfig {
    Difficulty mining_difficulty = 1;
    bool trust = false;
    /// Nonce attempts per production step; one step is one simulation time unit.
    std::uint64_t attempts_per_step = 8;

    void validate() const
    {
        if (mining_difficulty < 1) throw std::invalid_argument("mining_difficulty must be >= 1");
        if (attempts_per_step < 1) throw std::invalid_argument("attempts_per_step must be >= 1");
    }

    std::string descriptor() const
    {
        return "pow;mining_difficulty=" + std::to_string(mining_difficulty);
    }
};

/// floor(2^256 / difficulty). A hash is valid iff its big-endian integer value is strictly below.
inline cpp_int pow_target(Difficulty difficulty)
{
    if (difficulty < 1) throw std::invalid_argument("mining difficulty must be >= 1");
    return (cpp_int(1) << 256) / difficulty;
}

inline cpp_int hash_to_int(const Hash& h)
{
    cpp_int v;
    boost::multiprecision::import_bits(v, h.bytes().begin(), h.bytes().end());
    return v;
}

inline bool meets_target(const Hash& h, const cpp_int& target)
{
    return hash_to_int(h) < target;
}

/// Rebuilds the draft from the current mempool, clock and tip.
inline Block pow_update_block(const ProductionContext& ctx, const PoWConfig& config)
{
    return build_draft(ctx, config.mining_difficulty);
}

class PoWMiner final : public BlockProducer {
public:
    explicit PoWMiner(PoWConfig config) : config_(config), target_(pow_target(config.mining_difficulty)) {}

    std::optional<Block> step(const ProductionContext& ctx) override
    {
        // A block in the same time unit as its parent could never verify.
        if (ctx.now <= ctx.tip.timestamp) return std::nullopt;

        Block draft = pow_update_block(ctx, config_);
        Hash dig = state_digest(draft.state);
        for (std::uint64_t i = 0; i < config_.attempts_per_step; ++i) {
            draft.nonce = nonce_++;
            ++attempts_;
            Hash h = compute_block_hash(draft, dig);
            if (meets_target(h, target_)) {
                draft.hash = h;
                nonce_ = 0;
                return draft;
            }
        }
        return std::nullopt;
    }

    /// Total hash attempts made by this miner.
    std::uint64_t attempts() const { return attempts_; }

private:
    PoWConfig config_;
    cpp_int target_;
    std::uint64_t nonce_ = 0;
    std::uint64_t attempts_ = 0;
};

class ProofOfWork final : public ConsensusProtocol {
public:
    ProofOfWork(PoWConfig config, WorldState initial)
        : config_((config.validate(), config)), target_(pow_target(config.mining_difficulty)),
          genesis_(make_bound_genesis(std::move(initial), config.descriptor()))
    {
    }

    const Block& genesis() const override { return genesis_; }
    bool trust() const override { return config_.trust; }
    std::string name() const override { return "pow"; }
    const PoWConfig& config() const { return config_; }
    const cpp_int& target() const { return target_; }

    std::unique_ptr<BlockProducer> make_producer(NodeId) const override { return std::make_unique<PoWMiner>(config_); }

    bool verify_chain(std::span<const Block> chain, const Block& previous, const WorldState& previous_state,
                      const ContractRegistry& registry) const override
    {
        const Block* prev = &previous;
        const WorldState* prev_state = &previous_state;
        for (const auto& b : chain) {
            if (b.parent_hash != prev->hash || b.height != prev->height + 1) return false;
            if (b.timestamp <= prev->timestamp) return false;
            if (b.difficulty != config_.mining_difficulty || b.total_difficulty != prev->total_difficulty + b.difficulty)
                return false;
            if (!verify_block_contents(b, *prev_state, config_.trust, registry)) return false;
            if (!meets_target(b.hash, target_)) return false;
            prev = &b;
            prev_state = &b.state;
        }
        return true;
    }

private:
    PoWConfig config_;
    cpp_int target_;
    Block genesis_;
};

} // namespace minichain
