#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <minichain/clock.hpp>
#include <minichain/consensus/protocol.hpp>
#include <minichain/contract.hpp>
#include <minichain/enode.hpp>
#include <minichain/mempool.hpp>
#include <minichain/message.hpp>
#include <minichain/network.hpp>

namespace minichain {

/// Pinger cadence in time units. A pinger ticks at times t with t >= offset and (t - offset) % interval == 0.
struct SyncConfig {
    Timestamp chain_interval = 2;
    Timestamp chain_offset = 0;
    Timestamp mempool_interval = 2;
    Timestamp mempool_offset = 1;
};

struct NodeStats {
    std::uint64_t blocks_produced = 0;
    std::uint64_t forks = 0;
    std::uint64_t syncs_accepted = 0;
    std::uint64_t syncs_rejected = 0;
    std::uint64_t reinjected = 0;
    /// Messages sent by this node (requests and replies), keyed by wire type.
    std::map<std::string, std::uint64_t> messages_sent;
};

inline const char* message_type(const Message& m)
{
    static constexpr const char* names[] = {"status_req", "status_rep", "block_req", "block_rep", "mempool_req", "mempool_rep"};
    return names[m.index()];
}

/// One blockchain participant: local chain, mempool, peers, and the production and sync tasks.
///
/// The same object serves simulations (driven by step()) and real-time deployments (driven by
/// RealtimeNode threads). All public operations take the node mutex for the duration of one
/// protocol action and never hold it across a network request.
class Node {
public:
    Node(NodeIdentity identity, std::shared_ptr<const ConsensusProtocol> consensus,
         std::shared_ptr<const ContractRegistry> registry, std::unique_ptr<ClockSource> clock,
         std::shared_ptr<Network> network, SyncConfig sync = {})
        : identity_(std::move(identity)), consensus_(std::move(consensus)), registry_(std::move(registry)),
          clock_(std::move(clock)), network_(std::move(network)), sync_(sync),
          producer_(consensus_->make_producer(identity_.id))
    {
        append_locked(consensus_->genesis());
    }

    ~Node() { stop_tcp(); }

    Node(const Node&) = delete;
    Node& operator=(const Node&) = delete;

    const NodeIdentity& identity() const { return identity_; }
    NodeId id() const { return identity_.id; }
    const ConsensusProtocol& consensus() const { return *consensus_; }
    const ContractRegistry& registry() const { return *registry_; }

    // -- peering ------------------------------------------------------------

    /// Idempotent. Adding the node's own id is ignored. Throws EnodeError on a malformed enode.
    void add_peer(std::string_view enode)
    {
        auto peer = parse_enode(enode);
        std::lock_guard lock(mutex_);
        if (peer.id == identity_.id) return;
        peers_.insert_or_assign(peer.id, std::move(peer));
    }

    /// Removing an absent peer is a no-op.
    void remove_peer(std::string_view enode)
    {
        auto peer = parse_enode(enode);
        std::lock_guard lock(mutex_);
        peers_.erase(peer.id);
    }

    /// Sorted by node id.
    std::vector<NodeIdentity> peers() const
    {
        std::lock_guard lock(mutex_);
        std::vector<NodeIdentity> out;
        for (const auto& [id, p] : peers_) out.push_back(p);
        return out;
    }

    // -- transactions -------------------------------------------------------

    Transaction submit_transaction(NodeId receiver, Amount value, std::string data)
    {
        std::lock_guard lock(mutex_);
        auto tx = make_transaction(identity_.id, receiver, value, std::move(data), clock_->now(), submitted_);
        ++submitted_;
        mempool_.insert(tx);
        return tx;
    }

    // -- production ---------------------------------------------------------

    void start_mining() { mining_ = true; }
    void stop_mining() { mining_ = false; }
    bool mining() const { return mining_; }

    /// One invocation of the production task. Returns true when a block was appended.
    bool production_step()
    {
        if (!mining_) return false;
        std::lock_guard lock(mutex_);
        auto pending = mempool_.ordered();
        ProductionContext ctx{identity_.id, chain_.back(), pending, clock_->now(), *registry_};
        auto block = producer_->step(ctx);
        if (!block) return false;
        append_locked(std::move(*block));
        ++stats_.blocks_produced;
        return true;
    }

    /// Replaces the production task, e.g. to inspect a miner's counters in tests.
    void set_producer(std::unique_ptr<BlockProducer> producer)
    {
        std::lock_guard lock(mutex_);
        producer_ = std::move(producer);
    }

    // -- chain adoption -----------------------------------------------------

    /// Adopts `partial`, which must extend the local block `common_hash`. Either fully applies
    /// or leaves chain and mempool untouched.
    bool sync_chain(std::span<const Block> partial, const Hash& common_hash)
    {
        std::lock_guard lock(mutex_);
        bool ok = sync_chain_locked(partial, common_hash);
        ++(ok ? stats_.syncs_accepted : stats_.syncs_rejected);
        return ok;
    }

    // -- protocol -----------------------------------------------------------

    Message handle_message(const Message& msg)
    {
        std::lock_guard lock(mutex_);
        return handle_locked(msg);
    }

    /// Decodes one frame, answers it, and returns the encoded reply. Throws DecodeError.
    Bytes handle_frame(std::span<const std::uint8_t> frame)
    {
        Message request = decode(frame);
        std::lock_guard lock(mutex_);
        Message reply = handle_locked(request);
        ++stats_.messages_sent[message_type(reply)];
        return encode(reply);
    }

    void chain_pinger_tick()
    {
        for (const auto& peer : peers()) sync_chain_with(peer);
    }

    void mempool_pinger_tick()
    {
        for (const auto& peer : peers()) {
            auto reply = exchange<MempoolReply>(peer, MempoolRequest{});
            if (!reply) continue;
            std::lock_guard lock(mutex_);
            for (const auto& tx : reply->transactions)
                if (!chain_tx_ids_.count(tx.id) && compute_transaction_id(tx) == tx.id) mempool_.insert(tx);
        }
    }

    // -- lifecycle ----------------------------------------------------------

    /// Registers the listener; pingers only tick while listening. Throws if the address is taken.
    void start_tcp()
    {
        if (listening_) return;
        network_->listen(identity_, [this](std::span<const std::uint8_t> frame) { return handle_frame(frame); });
        listening_ = true;
    }

    void stop_tcp()
    {
        if (!listening_) return;
        network_->unlisten(identity_);
        listening_ = false;
    }

    bool listening() const { return listening_; }

    /// Simulation step: clock, production, chain pinger, mempool pinger. Requests are served
    /// synchronously by the peers during the pinger ticks, so there is no inbound queue to drain.
    void step()
    {
        clock_->step();
        production_step();
        Timestamp t = clock_->now();
        if (listening_ && due(t, sync_.chain_interval, sync_.chain_offset)) chain_pinger_tick();
        if (listening_ && due(t, sync_.mempool_interval, sync_.mempool_offset)) mempool_pinger_tick();
    }

    // -- inspection ---------------------------------------------------------

    Timestamp now() const { return clock_->now(); }
    ClockSource& clock() { return *clock_; }

    std::vector<Block> chain() const
    {
        std::lock_guard lock(mutex_);
        return chain_;
    }

    Block tip() const
    {
        std::lock_guard lock(mutex_);
        return chain_.back();
    }

    Hash tip_hash() const
    {
        std::lock_guard lock(mutex_);
        return chain_.back().hash;
    }

    std::uint64_t height() const
    {
        std::lock_guard lock(mutex_);
        return chain_.back().height;
    }

    Difficulty total_difficulty() const
    {
        std::lock_guard lock(mutex_);
        return chain_.back().total_difficulty;
    }

    Mempool mempool() const
    {
        std::lock_guard lock(mutex_);
        return mempool_;
    }

    std::size_t mempool_size() const
    {
        std::lock_guard lock(mutex_);
        return mempool_.size();
    }

    bool chain_contains_transaction(const Hash& id) const
    {
        std::lock_guard lock(mutex_);
        return chain_tx_ids_.count(id) > 0;
    }

    NodeStats stats() const
    {
        std::lock_guard lock(mutex_);
        return stats_;
    }

    StatusDump status() const
    {
        std::lock_guard lock(mutex_);
        StatusDump d;
        d.id = identity_.id;
        d.height = chain_.back().height;
        d.tip_hash = chain_.back().hash;
        d.total_difficulty = chain_.back().total_difficulty;
        d.mempool_size = mempool_.size();
        d.mining = mining_;
        for (const auto& [id, p] : peers_) d.peers.push_back(format_enode(p));
        return d;
    }

private:
    static bool due(Timestamp t, Timestamp interval, Timestamp offset)
    {
        return interval > 0 && t >= offset && (t - offset) % interval == 0;
    }

    void append_locked(Block block)
    {
        for (const auto& tx : block.data) {
            mempool_.erase(tx.id);
            chain_tx_ids_.insert(tx.id);
        }
        block_index_.emplace(block.hash, chain_.size());
        chain_.push_back(std::move(block));
    }

    Message handle_locked(const Message& msg)
    {
        if (std::holds_alternative<ChainStatusRequest>(msg))
            return ChainStatusReply{chain_.back().hash, chain_.back().total_difficulty};
        if (std::holds_alternative<MempoolRequest>(msg)) return MempoolReply{mempool_.ordered()};
        if (const auto* req = std::get_if<BlockRequest>(&msg)) {
            for (std::size_t i = chain_.size(); i-- > 0;) {
                const auto& h = chain_[i].hash;
                if (std::find(req->known_hashes.begin(), req->known_hashes.end(), h) != req->known_hashes.end())
                    return BlockReply{h, std::vector<Block>(chain_.begin() + static_cast<std::ptrdiff_t>(i) + 1, chain_.end())};
            }
            return BlockReply{};
        }
        throw DecodeError(std::string("'") + message_type(msg) + "' is not a request");
    }

    bool sync_chain_locked(std::span<const Block> partial, const Hash& common_hash)
    {
        if (partial.empty()) return false;
        if (!(chain_.back().total_difficulty < partial.back().total_difficulty)) return false;

        auto it = block_index_.find(common_hash);
        if (it == block_index_.end()) return false;
        std::size_t common = it->second;

        if (!consensus_->verify_chain(partial, chain_[common], chain_[common].state, *registry_)) return false;

        // Replay guard: a transaction may appear only once across the adopted chain.
        std::unordered_set<Hash, HashHasher> incoming;
        for (const auto& b : partial)
            for (const auto& tx : b.data)
                if (!incoming.insert(tx.id).second) return false;
        for (std::size_t i = 1; i <= common; ++i)
            for (const auto& tx : chain_[i].data)
                if (incoming.count(tx.id)) return false;

        // Verified; mutate from here on.
        for (const auto& id : incoming) mempool_.erase(id);

        if (common + 1 < chain_.size()) {
            ++stats_.forks;
            for (std::size_t i = common + 1; i < chain_.size(); ++i) {
                block_index_.erase(chain_[i].hash);
                for (const auto& tx : chain_[i].data) {
                    chain_tx_ids_.erase(tx.id);
                    if (!incoming.count(tx.id) && mempool_.insert(tx)) ++stats_.reinjected;
                }
            }
            chain_.resize(common + 1);
        }
        for (const auto& b : partial) append_locked(b);
        return true;
    }

    template <typename Reply, typename Request>
    std::optional<Reply> exchange(const NodeIdentity& peer, const Request& request)
    {
        Message msg = request;
        {
            std::lock_guard lock(mutex_);
            ++stats_.messages_sent[message_type(msg)];
        }
        auto raw = network_->request(peer, encode(msg));
        if (!raw) return std::nullopt;
        try {
            Message reply = decode(*raw);
            if (auto* r = std::get_if<Reply>(&reply)) return std::move(*r);
        } catch (const DecodeError&) {
        }
        return std::nullopt;
    }

    void sync_chain_with(const NodeIdentity& peer)
    {
        auto status = exchange<ChainStatusReply>(peer, ChainStatusRequest{});
        if (!status) return;
        {
            std::lock_guard lock(mutex_);
            if (status->tip_hash == chain_.back().hash) return;
            if (status->total_difficulty <= chain_.back().total_difficulty) return;
        }

        // Walk back in batches of five until the peer recognises one of our hashes.
        for (std::size_t skip = 0;; skip += BlockRequest::max_hashes) {
            BlockRequest req;
            {
                std::lock_guard lock(mutex_);
                for (std::size_t k = 0; k < BlockRequest::max_hashes && skip + k < chain_.size(); ++k)
                    req.known_hashes.push_back(chain_[chain_.size() - 1 - skip - k].hash);
            }
            // Exhausted our chain without a match: the peer does not share our genesis.
            if (req.known_hashes.empty()) return;
            auto reply = exchange<BlockReply>(peer, req);
            if (!reply) return;
            if (!reply->common) continue;
            sync_chain(reply->partial, *reply->common);
            return;
        }
    }

    NodeIdentity identity_;
    std::shared_ptr<const ConsensusProtocol> consensus_;
    std::shared_ptr<const ContractRegistry> registry_;
    std::unique_ptr<ClockSource> clock_;
    std::shared_ptr<Network> network_;
    SyncConfig sync_;

    mutable std::mutex mutex_;
    std::vector<Block> chain_;
    std::unordered_map<Hash, std::size_t, HashHasher> block_index_;
    std::unordered_set<Hash, HashHasher> chain_tx_ids_;
    Mempool mempool_;
    std::map<NodeId, NodeIdentity> peers_;
    std::unique_ptr<BlockProducer> producer_;
    std::uint64_t submitted_ = 0;
    NodeStats stats_;

    std::atomic<bool> mining_ = false;
    std::atomic<bool> listening_ = false;
};

} // namespace minichain
