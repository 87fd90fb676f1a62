#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace minichain;
using namespace minichain::test;

namespace {

std::shared_ptr<const ProofOfAuthority> four_signers(Timestamp period = 5)
{
    return std::make_shared<ProofOfAuthority>(poa_config({0, 1, 2, 3}, period), funded({0, 1, 2, 3}));
}

std::vector<Block> tail(const std::vector<Block>& chain, std::size_t from) { return {chain.begin() + from, chain.end()}; }

} // namespace

TEST(NodeTest, PeerSetIsIdempotentAndIgnoresSelf)
{
    Cluster c(four_signers(), 1);
    Node& n = c[0];
    n.add_peer("enode://0@127.0.0.1:40000");
    EXPECT_TRUE(n.peers().empty());
    n.add_peer("enode://5@10.0.0.5:1234");
    n.add_peer("enode://5@10.0.0.5:1234");
    n.add_peer("enode://2@10.0.0.2:1");
    ASSERT_EQ(n.peers().size(), 2u);
    EXPECT_EQ(n.peers()[0].id, 2u);
    EXPECT_THROW(n.add_peer("enode://x@h:1"), EnodeError);
    n.remove_peer("enode://5@10.0.0.5:1234");
    EXPECT_EQ(n.peers().size(), 1u);
}

TEST(NodeTest, SubmitUsesClockAndNonceCounter)
{
    Cluster c(four_signers(), 1);
    c.step(3);
    auto a = c[0].submit_transaction(1, 5, "");
    auto b = c[0].submit_transaction(1, 5, "");
    EXPECT_EQ(a.timestamp, 3u);
    EXPECT_EQ(a.nonce, 0u);
    EXPECT_EQ(b.nonce, 1u);
    EXPECT_NE(a.id, b.id);
    EXPECT_EQ(c[0].mempool_size(), 2u);
    EXPECT_THROW(c[0].submit_transaction(1, 0, "\xff"), std::invalid_argument);
}

TEST(NodeTest, SingleSignerProducesEveryPeriod)
{
    auto poa = std::make_shared<ProofOfAuthority>(poa_config({0}, 5), funded({0}));
    Cluster c(poa, 1);
    c[0].start_mining();
    c.step(22);
    auto chain = c[0].chain();
    ASSERT_EQ(chain.size(), 5u);
    for (std::size_t i = 1; i < chain.size(); ++i) EXPECT_EQ(chain[i].timestamp, 5 * i);
    EXPECT_EQ(c[0].stats().blocks_produced, 4u);
}

TEST(NodeTest, MinedTransactionsLeaveMempool)
{
    auto poa = std::make_shared<ProofOfAuthority>(poa_config({0}, 2), funded({0, 1}));
    Cluster c(poa, 1);
    c[0].start_mining();
    auto tx = c[0].submit_transaction(1, 10, "");
    c.step(2);
    EXPECT_TRUE(c[0].chain_contains_transaction(tx.id));
    EXPECT_EQ(c[0].mempool_size(), 0u);
    EXPECT_EQ(c[0].tip().state.balance_of(1), 1010u);
}

TEST(NodeTest, SyncAdoptsOnlyStrictlyHeavierChains)
{
    auto poa = four_signers();
    Cluster c(poa, 1);
    const Block& g = poa->genesis();
    auto blocks = honest_poa_blocks(*poa, g, 3, 1);

    EXPECT_FALSE(c[0].sync_chain({}, g.hash));
    EXPECT_FALSE(c[0].sync_chain(blocks, sha256("unknown")));
    EXPECT_TRUE(c[0].sync_chain(blocks, g.hash));
    EXPECT_EQ(c[0].height(), 3u);
    // Same blocks again: equal total difficulty keeps the local chain.
    EXPECT_FALSE(c[0].sync_chain(tail(blocks, 2), blocks[1].hash));
    EXPECT_EQ(c[0].stats().syncs_accepted, 1u);
    EXPECT_EQ(c[0].stats().syncs_rejected, 3u);
}

TEST(NodeTest, ForkTruncatesAndReinjectsAbandonedTransactions)
{
    auto poa = four_signers();
    Cluster c(poa, 1);
    const Block& g = poa->genesis();

    // Local branch: two out-of-turn blocks carrying one transaction each.
    auto mine = make_transaction(2, 3, 7, "local", 1, 0);
    auto shared = make_transaction(0, 1, 1, "both", 1, 0);
    Block l1 = child_of(g, {mine}, 7, 2, 1);
    Block l2 = child_of(l1, {shared}, 14, 3, 1);
    std::vector<Block> local{l1, l2};
    ASSERT_TRUE(c[0].sync_chain(local, g.hash));
    ASSERT_EQ(c[0].tip().total_difficulty, 2u);

    // Heavier branch that also includes `shared`.
    Block r1 = child_of(g, {shared}, 5, 1, 2);
    Block r2 = child_of(r1, {}, 10, 2, 2);
    std::vector<Block> remote{r1, r2};
    ASSERT_TRUE(c[0].sync_chain(remote, g.hash));

    EXPECT_EQ(c[0].tip_hash(), r2.hash);
    EXPECT_EQ(c[0].chain().size(), 3u);
    EXPECT_EQ(c[0].stats().forks, 1u);
    Mempool pool = c[0].mempool();
    EXPECT_TRUE(pool.contains(mine.id));
    EXPECT_FALSE(pool.contains(shared.id));
    EXPECT_TRUE(c[0].chain_contains_transaction(shared.id));
    EXPECT_FALSE(c[0].chain_contains_transaction(mine.id));
    EXPECT_EQ(c[0].stats().reinjected, 1u);
}

TEST(NodeTest, ReplayedTransactionIsRejected)
{
    auto poa = four_signers();
    Cluster c(poa, 1);
    const Block& g = poa->genesis();
    auto tx = make_transaction(0, 1, 1, "", 1, 0);
    Block b1 = child_of(g, {tx}, 5, 1, 2);
    ASSERT_TRUE(c[0].sync_chain(std::vector<Block>{b1}, g.hash));
    // Valid by consensus rules, but the transfer already executed in b1.
    Block b2 = child_of(b1, {tx}, 10, 2, 2);
    EXPECT_FALSE(c[0].sync_chain(std::vector<Block>{b2}, b1.hash));
    Block dup = child_of(g, {tx, tx}, 5, 1, 2);
    Block dup2 = child_of(dup, {}, 10, 2, 2);
    EXPECT_FALSE(c[0].sync_chain(std::vector<Block>{dup, dup2}, g.hash));
    EXPECT_EQ(c[0].tip_hash(), b1.hash);
}

TEST(NodeTest, RejectedSyncLeavesChainAndMempoolUntouched)
{
    auto poa = four_signers();
    const Block& g = poa->genesis();
    auto heavy = honest_poa_blocks(*poa, g, 8, 4);
    std::mt19937_64 rng(17);
    for (int i = 0; i < 120; ++i) {
        Cluster c(poa, 1);
        // A lighter local fork plus pending transactions.
        ASSERT_TRUE(c[0].sync_chain(std::vector<Block>{child_of(g, {make_transaction(3, 2, 9, "x", 1, 0)}, 7, 3, 1)}, g.hash));
        c[0].submit_transaction(1, 3, "p");
        c[0].submit_transaction(2, 4, "q");
        auto chain_before = c[0].chain();
        auto pool_before = c[0].mempool();

        auto forged = heavy;
        auto what = tamper(forged, rng);
        EXPECT_FALSE(c[0].sync_chain(forged, g.hash)) << what;
        EXPECT_EQ(c[0].chain(), chain_before) << what;
        EXPECT_EQ(c[0].mempool(), pool_before) << what;
        EXPECT_EQ(c[0].stats().forks, 0u);
    }
}

TEST(NodeTest, StepOrderIsClockProductionChainThenMempool)
{
    auto poa = four_signers(1);
    Cluster c(poa, 2);
    c.link(0, 1);
    c[1].start_mining();
    // Step 1 is odd: node 1 produces (in turn at height 1), no chain ping yet, mempool ping fires.
    c.step();
    EXPECT_EQ(c[1].height(), 1u);
    EXPECT_EQ(c[0].height(), 0u);
    EXPECT_EQ(c[0].stats().messages_sent.count("status_req"), 0u);
    EXPECT_EQ(c[0].stats().messages_sent.at("mempool_req"), 1u);
    c.step();
    EXPECT_EQ(c[0].height(), 1u);
    EXPECT_EQ(c[0].stats().messages_sent.at("status_req"), 1u);
}

TEST(NodeTest, IdenticalClustersEvolveIdentically)
{
    auto run = [] {
        auto poa = std::make_shared<ProofOfAuthority>(poa_config({0, 1, 2}, 3), funded({0, 1, 2}));
        Cluster c(poa, 3);
        c.link_all();
        for (auto& n : c.nodes) n->start_mining();
        for (int s = 0; s < 40; ++s) {
            if (s % 4 == 0) c[s % 3].submit_transaction((s + 1) % 3, 5, "");
            c.step();
        }
        std::vector<Hash> tips;
        for (auto& n : c.nodes) tips.push_back(n->tip_hash());
        return std::make_pair(tips, c[0].chain());
    };
    EXPECT_EQ(run(), run());
}
