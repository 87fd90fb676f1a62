#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <minichain/consensus/protocol.hpp>

namespace minichain {

struct PoAConfig {
    std::vector<NodeId> signers;
    /// Minimum timestamp gap between consecutive blocks (inclusive).
    Timestamp block_period = 5;
    Difficulty diff_inturn = 2;
    Difficulty diff_noturn = 1;
    /// Extra wait for out-of-turn signers. Fixed, not randomized.
    Timestamp delay_noturn = 2;
    bool trust = false;

    void validate() const
    {
        if (signers.empty()) throw std::invalid_argument("signers must not be empty");
        if (std::set<NodeId>(signers.begin(), signers.end()).size() != signers.size())
            throw std::invalid_argument("signers must not contain duplicates");
        if (block_period < 1) throw std::invalid_argument("block_period must be >= 1");
        if (diff_noturn < 1) throw std::invalid_argument("diff_noturn must be >= 1");
        if (diff_inturn <= diff_noturn) throw std::invalid_argument("diff_inturn must exceed diff_noturn");
    }

    bool is_signer(NodeId id) const { return std::find(signers.begin(), signers.end(), id) != signers.end(); }

    /// Network-wide rules only; trust is a local verification choice and stays out.
    std::string descriptor() const
    {
        std::string s = "poa;signers=";
        for (std::size_t i = 0; i < signers.size(); ++i) s += (i ? "," : "") + std::to_string(signers[i]);
        s += ";block_period=" + std::to_string(block_period);
        s += ";diff_inturn=" + std::to_string(diff_inturn);
        s += ";diff_noturn=" + std::to_string(diff_noturn);
        s += ";delay_noturn=" + std::to_string(delay_noturn);
        return s;
    }
};

/// Round-robin preferred signer for a height.
inline NodeId poa_inturn_signer(std::uint64_t height, const PoAConfig& config)
{
    return config.signers.at(height % config.signers.size());
}

class PoASigner final : public BlockProducer {
public:
    PoASigner(PoAConfig config, NodeId self) : config_(std::move(config)), active_(config_.is_signer(self)) {}

    /// Rebuilt from the tip on every call, so a draft for a height that someone else already
    /// filled is simply never produced.
    std::optional<Block> step(const ProductionContext& ctx) override
    {
        if (!active_) return std::nullopt;
        bool inturn = poa_inturn_signer(ctx.tip.height + 1, config_) == ctx.self;
        Timestamp ready = ctx.tip.timestamp + config_.block_period + (inturn ? 0 : config_.delay_noturn);
        if (ctx.now < ready) return std::nullopt;

        Block b = build_draft(ctx, inturn ? config_.diff_inturn : config_.diff_noturn);
        b.hash = compute_block_hash(b);
        return b;
    }

private:
    PoAConfig config_;
    bool active_;
};

class ProofOfAuthority final : public ConsensusProtocol {
public:
    ProofOfAuthority(PoAConfig config, WorldState initial)
        : config_((config.validate(), std::move(config))),
          genesis_(make_bound_genesis(std::move(initial), config_.descriptor()))
    {
    }

    const Block& genesis() const override { return genesis_; }
    bool trust() const override { return config_.trust; }
    std::string name() const override { return "poa"; }
    const PoAConfig& config() const { return config_; }

    std::unique_ptr<BlockProducer> make_producer(NodeId self) const override
    {
        return std::make_unique<PoASigner>(config_, self);
    }

    bool verify_chain(std::span<const Block> chain, const Block& previous, const WorldState& previous_state,
                      const ContractRegistry& registry) const override
    {
        const Block* prev = &previous;
        const WorldState* prev_state = &previous_state;
        for (const auto& b : chain) {
            if (b.parent_hash != prev->hash || b.height != prev->height + 1) return false;
            if (b.timestamp < prev->timestamp || b.timestamp - prev->timestamp < config_.block_period) return false;
            if (!config_.is_signer(b.miner_id)) return false;
            Difficulty expected = poa_inturn_signer(b.height, config_) == b.miner_id ? config_.diff_inturn : config_.diff_noturn;
            if (b.difficulty != expected || b.total_difficulty != prev->total_difficulty + b.difficulty) return false;
            if (!verify_block_contents(b, *prev_state, config_.trust, registry)) return false;
            prev = &b;
            prev_state = &b.state;
        }
        return true;
    }

private:
    PoAConfig config_;
    Block genesis_;
};

} // namespace minichain
