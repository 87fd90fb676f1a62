#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <minichain/clock.hpp>
#include <minichain/network.hpp>
#include <minichain/node.hpp>
#include <minichain/scenario.hpp>

namespace minichain {

struct NodeReport {
    NodeId id = 0;
    Hash tip_hash;
    std::uint64_t chain_length = 0;
    Difficulty total_difficulty = 0;
    Hash state_digest;
    std::uint64_t mempool_size = 0;
    std::uint64_t blocks_produced = 0;
};

struct IntervalStats {
    std::uint64_t count = 0;
    std::uint64_t min = 0;
    std::uint64_t max = 0;
    /// Mean gap in thousandths of a time unit, floored.
    std::uint64_t mean_milli = 0;
};

struct RunReport {
    std::string consensus;
    std::uint64_t steps = 0;
    std::vector<NodeReport> nodes;
    /// Start of the final stretch during which all tips were equal; absent if they differ at the end.
    std::optional<std::uint64_t> convergence_step;
    std::uint64_t forks = 0;
    IntervalStats block_intervals;
    std::map<std::string, std::uint64_t> messages;
    std::uint64_t transactions_submitted = 0;
    std::uint64_t transactions_included = 0;
    std::uint64_t safety_violations = 0;
};

inline nlohmann::json to_json(const RunReport& r)
{
    using nlohmann::json;
    auto nodes = json::array();
    for (const auto& n : r.nodes)
        nodes.push_back({{"id", n.id},
                         {"tip_hash", n.tip_hash.hex()},
                         {"chain_length", n.chain_length},
                         {"total_difficulty", n.total_difficulty},
                         {"state_digest", n.state_digest.hex()},
                         {"mempool_size", n.mempool_size},
                         {"blocks_produced", n.blocks_produced}});
    return {{"consensus", r.consensus},
            {"steps", r.steps},
            {"nodes", std::move(nodes)},
            {"converged", r.convergence_step.has_value()},
            {"convergence_step", r.convergence_step ? json(*r.convergence_step) : json(nullptr)},
            {"forks", r.forks},
            {"block_intervals",
             {{"count", r.block_intervals.count},
              {"min", r.block_intervals.min},
              {"max", r.block_intervals.max},
              {"mean_milli", r.block_intervals.mean_milli}}},
            {"messages", r.messages},
            {"transactions_submitted", r.transactions_submitted},
            {"transactions_included", r.transactions_included},
            {"safety_violations", r.safety_violations}};
}

/// A stepped network of nodes on one in-process bus.
class Simulation {
public:
    explicit Simulation(Scenario scenario)
        : scenario_((scenario.validate(), std::move(scenario))), consensus_(make_consensus(scenario_)),
          registry_(std::make_shared<const ContractRegistry>(contracts::builtin(scenario_.contract))),
          network_(std::make_shared<SimNetwork>()), workload_(expand_workload(scenario_))
    {
        for (NodeId i = 0; i < scenario_.node_count; ++i) {
            NodeIdentity ident{i, scenario_.host, static_cast<std::uint16_t>(scenario_.base_port + i)};
            auto node = std::make_unique<Node>(ident, consensus_, registry_, std::make_unique<SimulatedClock>(), network_,
                                               scenario_.sync);
            node->start_tcp();
            nodes_.push_back(std::move(node));
        }
        for (auto id : scenario_.miners) nodes_[id]->start_mining();

        if (scenario_.topology == Topology::full) connect_all();
        if (scenario_.topology == Topology::ring && scenario_.node_count > 1)
            for (NodeId i = 0; i < scenario_.node_count; ++i) connect(i, (i + 1) % scenario_.node_count);
        apply_edges();
    }

    const Scenario& scenario() const { return scenario_; }
    std::size_t size() const { return nodes_.size(); }
    Node& node(NodeId id) { return *nodes_.at(id); }
    const Node& node(NodeId id) const { return *nodes_.at(id); }
    std::uint64_t current_step() const { return step_; }
    const ConsensusProtocol& consensus() const { return *consensus_; }
    const ContractRegistry& registry() const { return *registry_; }
    const std::vector<Transaction>& submitted() const { return submitted_; }
    const std::set<std::pair<NodeId, NodeId>>& edges() const { return edges_; }

    /// Peering events due now (removals before additions), then workload, then every node in id order.
    void step()
    {
        ++step_;
        std::vector<const PeerEvent*> due;
        while (next_event_ < scenario_.events.size() && scenario_.events[next_event_].step <= step_)
            due.push_back(&scenario_.events[next_event_++]);
        if (!due.empty()) {
            for (const auto* e : due) {
                if (e->action == PeerEvent::Action::remove) disconnect(e->a, e->b);
                if (e->action == PeerEvent::Action::partition) edges_.clear();
            }
            for (const auto* e : due) {
                if (e->action == PeerEvent::Action::add) connect(e->a, e->b);
                if (e->action == PeerEvent::Action::heal) connect_all();
                if (e->action == PeerEvent::Action::partition)
                    for (const auto& g : e->groups)
                        for (std::size_t i = 0; i < g.size(); ++i)
                            for (std::size_t j = i + 1; j < g.size(); ++j) connect(g[i], g[j]);
            }
            apply_edges();
        }

        while (next_tx_ < workload_.size() && workload_[next_tx_].step <= step_) {
            const auto& w = workload_[next_tx_++];
            submitted_.push_back(nodes_[w.sender]->submit_transaction(w.receiver, w.value, w.data));
        }

        for (auto& n : nodes_) n->step();

        bool equal = all_tips_equal();
        if (equal && !agree_since_) agree_since_ = step_;
        if (!equal) agree_since_.reset();

        if (scenario_.spot_check_interval && step_ % scenario_.spot_check_interval == 0 && !chains_valid())
            ++safety_violations_;
        if (csv_) record_csv();
    }

    void run()
    {
        while (step_ < scenario_.steps) step();
    }

    bool all_tips_equal() const
    {
        Hash first = nodes_.front()->tip_hash();
        return std::all_of(nodes_.begin(), nodes_.end(), [&](const auto& n) { return n->tip_hash() == first; });
    }

    /// Every node's full chain passes consensus verification from genesis.
    bool chains_valid() const
    {
        for (const auto& n : nodes_) {
            auto chain = n->chain();
            if (chain.front().hash != consensus_->genesis().hash) return false;
            std::span<const Block> rest(chain.begin() + 1, chain.end());
            if (!consensus_->verify_chain(rest, chain.front(), chain.front().state, *registry_)) return false;
        }
        return true;
    }

    /// Per-step rows of (step, node, chain_height, tip_hash_prefix, mempool_size).
    void enable_csv()
    {
        csv_ = true;
        csv_rows_ << "step,node,chain_height,tip_hash_prefix,mempool_size\n";
    }
    std::string csv() const { return csv_rows_.str(); }

    RunReport report() const
    {
        RunReport r;
        r.consensus = scenario_.consensus;
        r.steps = step_;
        for (const auto& n : nodes_) {
            Block tip = n->tip();
            auto stats = n->stats();
            r.nodes.push_back({n->id(), tip.hash, tip.height + 1, tip.total_difficulty, state_digest(tip.state), n->mempool_size(),
                               stats.blocks_produced});
            r.forks += stats.forks;
            for (const auto& [type, count] : stats.messages_sent) r.messages[type] += count;
        }
        if (all_tips_equal()) r.convergence_step = agree_since_;

        auto chain = nodes_.front()->chain();
        std::uint64_t sum = 0;
        for (std::size_t i = 2; i < chain.size(); ++i) {
            std::uint64_t gap = chain[i].timestamp - chain[i - 1].timestamp;
            r.block_intervals.min = r.block_intervals.count ? std::min(r.block_intervals.min, gap) : gap;
            r.block_intervals.max = std::max(r.block_intervals.max, gap);
            sum += gap;
            ++r.block_intervals.count;
        }
        if (r.block_intervals.count) r.block_intervals.mean_milli = sum * 1000 / r.block_intervals.count;

        r.transactions_submitted = submitted_.size();
        for (const auto& tx : submitted_)
            if (nodes_.front()->chain_contains_transaction(tx.id)) ++r.transactions_included;
        r.safety_violations = safety_violations_;
        return r;
    }

private:
    void connect(NodeId a, NodeId b)
    {
        if (a != b) edges_.insert({std::min(a, b), std::max(a, b)});
    }
    void disconnect(NodeId a, NodeId b) { edges_.erase({std::min(a, b), std::max(a, b)}); }
    void connect_all()
    {
        for (NodeId i = 0; i < scenario_.node_count; ++i)
            for (NodeId j = i + 1; j < scenario_.node_count; ++j) connect(i, j);
    }

    /// Makes every node's peer set match the edge set.
    void apply_edges()
    {
        for (auto& n : nodes_) {
            for (const auto& p : n->peers()) n->remove_peer(format_enode(p));
        }
        for (const auto& [a, b] : edges_) {
            nodes_[a]->add_peer(format_enode(nodes_[b]->identity()));
            nodes_[b]->add_peer(format_enode(nodes_[a]->identity()));
        }
    }

    void record_csv()
    {
        for (const auto& n : nodes_)
            csv_rows_ << step_ << ',' << n->id() << ',' << n->height() << ',' << n->tip_hash().hex().substr(0, 8) << ','
                      << n->mempool_size() << '\n';
    }

    Scenario scenario_;
    std::shared_ptr<const ConsensusProtocol> consensus_;
    std::shared_ptr<const ContractRegistry> registry_;
    std::shared_ptr<SimNetwork> network_;
    std::vector<TxEvent> workload_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::set<std::pair<NodeId, NodeId>> edges_;

    std::uint64_t step_ = 0;
    std::size_t next_event_ = 0;
    std::size_t next_tx_ = 0;
    std::vector<Transaction> submitted_;
    std::optional<std::uint64_t> agree_since_;
    std::uint64_t safety_violations_ = 0;
    bool csv_ = false;
    std::ostringstream csv_rows_;
};

/// Runs the scenario to completion. Identical scenarios give identical reports.
inline RunReport run_scenario(const Scenario& scenario, std::string* csv = nullptr)
{
    Simulation sim(scenario);
    if (csv) sim.enable_csv();
    sim.run();
    if (csv) *csv = sim.csv();
    return sim.report();
}

} // namespace minichain
