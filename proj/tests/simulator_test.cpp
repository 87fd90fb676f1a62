#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace minichain;
using namespace minichain::test;

namespace {

Scenario parse(const std::string& text, const std::vector<std::string>& overrides = {})
{
    auto doc = parse_scenario_document(text);
    for (const auto& o : overrides) apply_override(doc, o);
    return scenario_from_toml(doc);
}

std::string field_of(const std::string& text)
{
    try {
        parse(text);
    } catch (const ScenarioError& e) {
        return e.field();
    }
    return "";
}

const char* basic = R"(
seed = 5
nodes = 3
steps = 60
[consensus]
kind = "poa"
signers = [0, 1, 2]
block_period = 3
)";

} // namespace

TEST(ScenarioTest, DefaultsAndOverrides)
{
    auto s = parse(basic);
    EXPECT_EQ(s.node_count, 3u);
    EXPECT_EQ(s.miners, (std::vector<NodeId>{0, 1, 2}));
    EXPECT_EQ(s.genesis.balance_of(2), 1000u);
    EXPECT_EQ(s.poa.delay_noturn, 2u);
    EXPECT_EQ(s.topology, Topology::full);

    auto o = parse(basic, {"steps=10", "consensus.block_period=7", "sync.chain_interval=4", "topology=ring"});
    EXPECT_EQ(o.steps, 10u);
    EXPECT_EQ(o.poa.block_period, 7u);
    EXPECT_EQ(o.sync.chain_interval, 4u);
    EXPECT_EQ(o.topology, Topology::ring);
    EXPECT_THROW(parse(basic, {"nonsense"}), ScenarioError);
    EXPECT_THROW(parse(basic, {"seed.x=1"}), ScenarioError);
}

TEST(ScenarioTest, ValidationNamesTheField)
{
    std::string s = basic;
    EXPECT_EQ(field_of(s + "bogus = 1\n"), "consensus.bogus");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"raft\"\n"), "consensus.kind");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"poa\"\nsigners = [0, 5]\n"), "consensus.signers");
    EXPECT_EQ(field_of("nodes = 0\n[consensus]\nkind = \"pow\"\n"), "nodes");
    EXPECT_EQ(field_of("nodes = 2\ncontract = \"x\"\n[consensus]\nkind = \"pow\"\n"), "contract");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"pow\"\nmining_difficulty = 0\n"), "consensus");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"pow\"\n[[events]]\nstep = 5\naction = \"heal\"\n[[events]]\nstep = 2\naction = \"heal\"\n"),
              "events[1].step");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"pow\"\n[[transactions]]\nsender = 0\nreceiver = 9\n"), "transactions[0].receiver");
    EXPECT_EQ(field_of("nodes = 2\n[consensus]\nkind = \"pow\"\n[[transactions]]\ndata = \"x\"\nfunction = \"f\"\n"), "transactions[0]");
    EXPECT_EQ(field_of("nodes = 2\nsteps = -1\n[consensus]\nkind = \"pow\"\n"), "steps");
    EXPECT_THROW(parse("nodes = [\n"), ScenarioError);
}

TEST(ScenarioTest, WorkloadExpansionIsSeededAndSorted)
{
    auto s = parse(std::string(basic) + "[random_workload]\ncount = 50\nmax_value = 9\nfunction = \"submit\"\nmax_input = 3\n");
    auto a = expand_workload(s);
    auto b = expand_workload(s);
    ASSERT_EQ(a.size(), 50u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].step, b[i].step);
        EXPECT_EQ(a[i].data, b[i].data);
        EXPECT_LE(a[i].value, 9u);
        EXPECT_GE(a[i].step, 1u);
        EXPECT_LE(a[i].step, 60u);
        if (i) EXPECT_LE(a[i - 1].step, a[i].step);
        EXPECT_TRUE(decode_call(a[i].data));
    }
    s.seed = 6;
    auto c = expand_workload(s);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].step != c[i].step || a[i].value != c[i].value;
    EXPECT_TRUE(differs);
}

TEST(ScenarioTest, CommittedScenariosLoad)
{
    for (const char* name : {"poa_4nodes", "pow_4nodes", "partition_heal", "estimate_mean", "counter_pow", "realtime_poa"})
        EXPECT_NO_THROW(load_scenario(std::string(MINICHAIN_SCENARIO_DIR) + "/" + name + ".toml")) << name;
}

TEST(SimulatorTest, SingleSignerCadence)
{
    auto s = parse("nodes = 1\nsteps = 50\n[consensus]\nkind = \"poa\"\nsigners = [0]\nblock_period = 5\n");
    Simulation sim(s);
    sim.run();
    auto chain = sim.node(0).chain();
    ASSERT_EQ(chain.size(), 11u);
    for (std::size_t i = 1; i < chain.size(); ++i) EXPECT_EQ(chain[i].timestamp, 5 * i);
    auto r = sim.report();
    EXPECT_EQ(r.block_intervals.min, 5u);
    EXPECT_EQ(r.block_intervals.max, 5u);
    EXPECT_EQ(r.block_intervals.mean_milli, 5000u);
}

TEST(SimulatorTest, DisconnectedNodesDiverge)
{
    auto s = parse("nodes = 2\nsteps = 40\ntopology = \"schedule\"\n[consensus]\nkind = \"poa\"\nsigners = [0, 1]\nblock_period = 2\n");
    Simulation sim(s);
    sim.run();
    EXPECT_GT(sim.node(0).height(), 0u);
    EXPECT_GT(sim.node(1).height(), 0u);
    EXPECT_FALSE(sim.all_tips_equal());
    EXPECT_FALSE(sim.report().convergence_step);
    EXPECT_TRUE(sim.chains_valid());
    EXPECT_EQ(sim.report().messages.count("status_req"), 0u);
}

TEST(SimulatorTest, ScheduleAppliesRemovalsBeforeAdditions)
{
    auto s = parse(R"(
nodes = 3
steps = 10
topology = "schedule"
[consensus]
kind = "poa"
signers = [0]
[[events]]
step = 2
action = "add"
a = 0
b = 1
[[events]]
step = 4
action = "add"
a = 1
b = 2
[[events]]
step = 4
action = "remove"
a = 1
b = 2
[[events]]
step = 6
action = "partition"
groups = [[0, 2], [1]]
[[events]]
step = 8
action = "heal"
)");
    Simulation sim(s);
    using E = std::set<std::pair<NodeId, NodeId>>;
    sim.step();
    EXPECT_EQ(sim.edges(), E{});
    sim.step();
    EXPECT_EQ(sim.edges(), (E{{0, 1}}));
    sim.step();
    sim.step();
    EXPECT_EQ(sim.edges(), (E{{0, 1}, {1, 2}}));
    EXPECT_EQ(sim.node(1).peers().size(), 2u);
    sim.step();
    sim.step();
    EXPECT_EQ(sim.edges(), (E{{0, 2}}));
    EXPECT_TRUE(sim.node(1).peers().empty());
    sim.step();
    sim.step();
    EXPECT_EQ(sim.edges(), (E{{0, 1}, {0, 2}, {1, 2}}));
}

TEST(SimulatorTest, RingPropagatesAndContractsExecute)
{
    auto s = load_scenario(std::string(MINICHAIN_SCENARIO_DIR) + "/estimate_mean.toml");
    Simulation sim(s);
    sim.run();
    auto r = sim.report();
    EXPECT_TRUE(r.convergence_step);
    EXPECT_EQ(r.safety_violations, 0u);
    EXPECT_TRUE(sim.chains_valid());
    auto state = sim.node(3).tip().state;
    ASSERT_TRUE(state.contract.count("count"));
    EXPECT_EQ(static_cast<std::uint64_t>(std::get<std::int64_t>(state.contract.at("count"))), r.transactions_included);
}

TEST(SimulatorTest, ReportsAreReproducible)
{
    auto s = load_scenario(std::string(MINICHAIN_SCENARIO_DIR) + "/counter_pow.toml");
    std::string csv_a, csv_b;
    auto a = to_json(run_scenario(s, &csv_a)).dump();
    auto b = to_json(run_scenario(s, &csv_b)).dump();
    EXPECT_EQ(a, b);
    EXPECT_EQ(csv_a, csv_b);
    EXPECT_EQ(csv_a.substr(0, csv_a.find('\n')), "step,node,chain_height,tip_hash_prefix,mempool_size");
    EXPECT_EQ(std::count(csv_a.begin(), csv_a.end(), '\n'), 1 + 150 * 3);

    s.seed += 1;
    s.pow.mining_difficulty = 33;
    EXPECT_NE(to_json(run_scenario(s)).dump(), a);
}
