#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml.hpp>

#include <minichain/consensus/poa.hpp>
#include <minichain/consensus/pow.hpp>
#include <minichain/contract.hpp>
#include <minichain/node.hpp>

namespace minichain {

/// Validation failure; field() names the offending key path.
class ScenarioError : public std::invalid_argument {
public:
    ScenarioError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Topology { full, ring, schedule };

struct PeerEvent {
    enum class Action { add, remove, partition, heal };
    std::uint64_t step = 0;
    Action action = Action::add;
    NodeId a = 0;
    NodeId b = 0;
    std::vector<std::vector<NodeId>> groups;
};

struct TxEvent {
    std::uint64_t step = 0;
    NodeId sender = 0;
    NodeId receiver = 0;
    Amount value = 0;
    std::string data;
};

/// Seeded generator of uniformly spread transactions.
struct RandomWorkload {
    std::uint64_t count = 0;
    std::uint64_t first_step = 1;
    std::uint64_t last_step = 0;  // 0 = last scenario step
    Amount max_value = 0;
    std::string function;  // empty = plain transfers
    std::int64_t max_input = 0;
};

struct Scenario {
    std::uint64_t seed = 0;
    std::uint64_t node_count = 1;
    std::uint64_t steps = 100;
    std::string contract = "none";

    std::string consensus = "poa";
    PoWConfig pow;
    PoAConfig poa;
    /// Nodes running their production task. Defaults to every node.
    std::vector<NodeId> miners;

    SyncConfig sync;
    WorldState genesis;

    Topology topology = Topology::full;
    std::vector<PeerEvent> events;
    std::vector<TxEvent> transactions;
    RandomWorkload random;

    /// Verify every chain from genesis every N steps; 0 disables.
    std::uint64_t spot_check_interval = 0;
    std::string host = "127.0.0.1";
    std::uint16_t base_port = 30300;

    void validate() const;
};

// ---------------------------------------------------------------------------

namespace scenario_detail {

inline void check_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> allowed)
{
    for (const auto& [key, _] : t) {
        if (std::find(allowed.begin(), allowed.end(), key.str()) == allowed.end())
            throw ScenarioError(where.empty() ? std::string(key.str()) : where + "." + std::string(key.str()), "unknown key");
    }
}

inline std::string path_of(const std::string& where, std::string_view key)
{
    return where.empty() ? std::string(key) : where + "." + std::string(key);
}

inline std::uint64_t get_uint(const toml::table& t, const std::string& where, std::string_view key, std::uint64_t fallback)
{
    const auto* node = t.get(key);
    if (!node) return fallback;
    auto v = node->value<std::int64_t>();
    if (!node->is_integer() || !v || *v < 0) throw ScenarioError(path_of(where, key), "expected a non-negative integer");
    return static_cast<std::uint64_t>(*v);
}

inline std::int64_t get_int(const toml::table& t, const std::string& where, std::string_view key, std::int64_t fallback)
{
    const auto* node = t.get(key);
    if (!node) return fallback;
    if (!node->is_integer()) throw ScenarioError(path_of(where, key), "expected an integer");
    return *node->value<std::int64_t>();
}

inline bool get_bool(const toml::table& t, const std::string& where, std::string_view key, bool fallback)
{
    const auto* node = t.get(key);
    if (!node) return fallback;
    if (!node->is_boolean()) throw ScenarioError(path_of(where, key), "expected a boolean");
    return *node->value<bool>();
}

inline std::string get_string(const toml::table& t, const std::string& where, std::string_view key, std::string fallback)
{
    const auto* node = t.get(key);
    if (!node) return fallback;
    if (!node->is_string()) throw ScenarioError(path_of(where, key), "expected a string");
    return *node->value<std::string>();
}

inline std::vector<NodeId> id_list(const toml::node& node, const std::string& where)
{
    const auto* arr = node.as_array();
    if (!arr) throw ScenarioError(where, "expected a list of node ids");
    std::vector<NodeId> out;
    for (const auto& e : *arr) {
        auto v = e.value<std::int64_t>();
        if (!e.is_integer() || *v < 0) throw ScenarioError(where, "expected non-negative integers");
        out.push_back(static_cast<NodeId>(*v));
    }
    return out;
}

inline const toml::table* subtable(const toml::table& t, const std::string& where, std::string_view key)
{
    const auto* node = t.get(key);
    if (!node) return nullptr;
    if (!node->is_table()) throw ScenarioError(path_of(where, key), "expected a table");
    return node->as_table();
}

inline Value toml_value(const toml::node& node, const std::string& where)
{
    if (node.is_integer()) return *node.value<std::int64_t>();
    if (node.is_string()) return *node.value<std::string>();
    if (const auto* arr = node.as_array()) {
        std::vector<std::int64_t> list;
        for (const auto& e : *arr) {
            if (!e.is_integer()) throw ScenarioError(where, "lists may hold integers only");
            list.push_back(*e.value<std::int64_t>());
        }
        return list;
    }
    throw ScenarioError(where, "contract values must be integers, strings, or integer lists");
}

inline std::string call_data(const toml::table& t, const std::string& where)
{
    bool has_data = t.contains("data");
    bool has_fn = t.contains("function");
    if (has_data && has_fn) throw ScenarioError(where, "give either 'data' or 'function', not both");
    if (has_data) return get_string(t, where, "data", "");
    if (!has_fn) {
        if (t.contains("inputs")) throw ScenarioError(path_of(where, "inputs"), "'inputs' requires 'function'");
        return "";
    }
    ContractCall call{get_string(t, where, "function", ""), {}};
    if (const auto* in = t.get("inputs")) {
        const auto* arr = in->as_array();
        if (!arr) throw ScenarioError(path_of(where, "inputs"), "expected a list");
        for (const auto& e : *arr) call.inputs.push_back(toml_value(e, path_of(where, "inputs")));
    }
    return encode_call(call);
}

} // namespace scenario_detail

/// Builds a Scenario from a parsed document. Throws ScenarioError.
inline Scenario scenario_from_toml(const toml::table& doc)
{
    using namespace scenario_detail;
    check_keys(doc, "",
               {"seed", "nodes", "steps", "contract", "topology", "spot_check_interval", "host", "base_port", "consensus",
                "sync", "genesis", "events", "transactions", "random_workload"});

    Scenario s;
    s.seed = get_uint(doc, "", "seed", 0);
    s.node_count = get_uint(doc, "", "nodes", 1);
    s.steps = get_uint(doc, "", "steps", 100);
    s.contract = get_string(doc, "", "contract", "none");
    s.spot_check_interval = get_uint(doc, "", "spot_check_interval", 0);
    s.host = get_string(doc, "", "host", s.host);
    auto port = get_uint(doc, "", "base_port", s.base_port);
    if (port == 0 || port > 65535) throw ScenarioError("base_port", "must be in 1..65535");
    s.base_port = static_cast<std::uint16_t>(port);

    auto topo = get_string(doc, "", "topology", "full");
    if (topo == "full") s.topology = Topology::full;
    else if (topo == "ring") s.topology = Topology::ring;
    else if (topo == "schedule") s.topology = Topology::schedule;
    else throw ScenarioError("topology", "expected one of full | ring | schedule");

    const auto* cons = subtable(doc, "", "consensus");
    if (!cons) throw ScenarioError("consensus", "missing [consensus] section");
    s.consensus = get_string(*cons, "consensus", "kind", "");
    if (s.consensus == "pow") {
        check_keys(*cons, "consensus", {"kind", "mining_difficulty", "attempts_per_step", "trust", "miners"});
        s.pow.mining_difficulty = get_uint(*cons, "consensus", "mining_difficulty", 1);
        s.pow.attempts_per_step = get_uint(*cons, "consensus", "attempts_per_step", 8);
        s.pow.trust = get_bool(*cons, "consensus", "trust", false);
    } else if (s.consensus == "poa") {
        check_keys(*cons, "consensus",
                   {"kind", "signers", "block_period", "diff_inturn", "diff_noturn", "delay_noturn", "trust", "miners"});
        if (const auto* signers = cons->get("signers")) s.poa.signers = id_list(*signers, "consensus.signers");
        else throw ScenarioError("consensus.signers", "missing signer list");
        s.poa.block_period = get_uint(*cons, "consensus", "block_period", s.poa.block_period);
        s.poa.diff_inturn = get_uint(*cons, "consensus", "diff_inturn", s.poa.diff_inturn);
        s.poa.diff_noturn = get_uint(*cons, "consensus", "diff_noturn", s.poa.diff_noturn);
        s.poa.delay_noturn = get_uint(*cons, "consensus", "delay_noturn", s.poa.delay_noturn);
        s.poa.trust = get_bool(*cons, "consensus", "trust", false);
    } else {
        throw ScenarioError("consensus.kind", "expected \"pow\" or \"poa\"");
    }
    if (const auto* miners = cons->get("miners")) s.miners = id_list(*miners, "consensus.miners");
    else
        for (NodeId i = 0; i < s.node_count; ++i) s.miners.push_back(i);

    if (const auto* sync = subtable(doc, "", "sync")) {
        check_keys(*sync, "sync", {"chain_interval", "chain_offset", "mempool_interval", "mempool_offset"});
        s.sync.chain_interval = get_uint(*sync, "sync", "chain_interval", s.sync.chain_interval);
        s.sync.chain_offset = get_uint(*sync, "sync", "chain_offset", s.sync.chain_offset);
        s.sync.mempool_interval = get_uint(*sync, "sync", "mempool_interval", s.sync.mempool_interval);
        s.sync.mempool_offset = get_uint(*sync, "sync", "mempool_offset", s.sync.mempool_offset);
    }

    bool balances_given = false;
    if (const auto* gen = subtable(doc, "", "genesis")) {
        check_keys(*gen, "genesis", {"balances", "contract"});
        if (const auto* bal = subtable(*gen, "genesis", "balances")) {
            balances_given = true;
            for (const auto& [key, node] : *bal) {
                std::string where = "genesis.balances." + std::string(key.str());
                std::uint64_t id = 0;
                if (!detail::parse_decimal(key.str(), id)) throw ScenarioError(where, "balance keys must be node ids");
                auto v = node.value<std::int64_t>();
                if (!node.is_integer() || *v < 0) throw ScenarioError(where, "expected a non-negative integer");
                s.genesis.balances[id] = static_cast<Amount>(*v);
            }
        }
        if (const auto* con = subtable(*gen, "genesis", "contract"))
            for (const auto& [key, node] : *con)
                s.genesis.contract[std::string(key.str())] = toml_value(node, "genesis.contract." + std::string(key.str()));
    }
    if (!balances_given)
        for (NodeId i = 0; i < s.node_count; ++i) s.genesis.balances[i] = 1000;

    if (const auto* events = doc.get("events")) {
        const auto* arr = events->as_array();
        if (!arr) throw ScenarioError("events", "expected [[events]] entries");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            std::string where = "events[" + std::to_string(i) + "]";
            const auto* t = (*arr)[i].as_table();
            if (!t) throw ScenarioError(where, "expected a table");
            check_keys(*t, where, {"step", "action", "a", "b", "groups"});
            PeerEvent e;
            e.step = get_uint(*t, where, "step", 0);
            auto action = get_string(*t, where, "action", "");
            if (action == "add" || action == "remove") {
                e.action = action == "add" ? PeerEvent::Action::add : PeerEvent::Action::remove;
                if (!t->contains("a") || !t->contains("b")) throw ScenarioError(where, "add/remove need 'a' and 'b'");
                e.a = get_uint(*t, where, "a", 0);
                e.b = get_uint(*t, where, "b", 0);
            } else if (action == "partition") {
                e.action = PeerEvent::Action::partition;
                const auto* groups = t->get("groups");
                const auto* garr = groups ? groups->as_array() : nullptr;
                if (!garr) throw ScenarioError(where + ".groups", "expected a list of id lists");
                for (const auto& g : *garr) e.groups.push_back(id_list(g, where + ".groups"));
            } else if (action == "heal") {
                e.action = PeerEvent::Action::heal;
            } else {
                throw ScenarioError(where + ".action", "expected add | remove | partition | heal");
            }
            s.events.push_back(std::move(e));
        }
    }

    if (const auto* txs = doc.get("transactions")) {
        const auto* arr = txs->as_array();
        if (!arr) throw ScenarioError("transactions", "expected [[transactions]] entries");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            std::string where = "transactions[" + std::to_string(i) + "]";
            const auto* t = (*arr)[i].as_table();
            if (!t) throw ScenarioError(where, "expected a table");
            check_keys(*t, where, {"step", "sender", "receiver", "value", "data", "function", "inputs"});
            TxEvent tx;
            tx.step = get_uint(*t, where, "step", 1);
            tx.sender = get_uint(*t, where, "sender", 0);
            tx.receiver = get_uint(*t, where, "receiver", 0);
            tx.value = get_uint(*t, where, "value", 0);
            tx.data = call_data(*t, where);
            s.transactions.push_back(std::move(tx));
        }
    }

    if (const auto* rw = subtable(doc, "", "random_workload")) {
        check_keys(*rw, "random_workload", {"count", "first_step", "last_step", "max_value", "function", "max_input"});
        s.random.count = get_uint(*rw, "random_workload", "count", 0);
        s.random.first_step = get_uint(*rw, "random_workload", "first_step", 1);
        s.random.last_step = get_uint(*rw, "random_workload", "last_step", 0);
        s.random.max_value = get_uint(*rw, "random_workload", "max_value", 0);
        s.random.function = get_string(*rw, "random_workload", "function", "");
        s.random.max_input = get_int(*rw, "random_workload", "max_input", 0);
    }

    s.validate();
    return s;
}

inline void Scenario::validate() const
{
    if (node_count < 1) throw ScenarioError("nodes", "must be >= 1");
    if (static_cast<std::uint64_t>(base_port) + node_count - 1 > 65535) throw ScenarioError("base_port", "port range exceeds 65535");
    auto check_id = [&](NodeId id, const std::string& where) {
        if (id >= node_count) throw ScenarioError(where, "node id " + std::to_string(id) + " out of range");
    };
    try {
        contracts::builtin(contract);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("contract", e.what());
    }
    if (consensus == "pow") {
        try {
            pow.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("consensus", e.what());
        }
    } else if (consensus == "poa") {
        try {
            poa.validate();
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("consensus", e.what());
        }
        for (auto id : poa.signers) check_id(id, "consensus.signers");
    } else {
        throw ScenarioError("consensus.kind", "expected \"pow\" or \"poa\"");
    }
    for (auto id : miners) check_id(id, "consensus.miners");

    unsigned __int128 supply = 0;
    for (const auto& [id, amount] : genesis.balances) supply += amount;
    if (supply > std::numeric_limits<Amount>::max()) throw ScenarioError("genesis.balances", "total supply overflows");

    std::uint64_t prev = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        std::string where = "events[" + std::to_string(i) + "]";
        const auto& e = events[i];
        if (e.step < prev) throw ScenarioError(where + ".step", "events must be sorted by step");
        prev = e.step;
        if (e.action == PeerEvent::Action::add || e.action == PeerEvent::Action::remove) {
            check_id(e.a, where + ".a");
            check_id(e.b, where + ".b");
        }
        for (const auto& g : e.groups)
            for (auto id : g) check_id(id, where + ".groups");
    }
    for (std::size_t i = 0; i < transactions.size(); ++i) {
        std::string where = "transactions[" + std::to_string(i) + "]";
        check_id(transactions[i].sender, where + ".sender");
        check_id(transactions[i].receiver, where + ".receiver");
        if (!is_valid_utf8(transactions[i].data)) throw ScenarioError(where + ".data", "must be valid UTF-8");
    }
    if (random.count > 0) {
        std::uint64_t last = random.last_step ? random.last_step : steps;
        if (random.first_step < 1 || random.first_step > last) throw ScenarioError("random_workload.first_step", "must lie in 1..last_step");
        if (random.max_input < 0) throw ScenarioError("random_workload.max_input", "must be >= 0");
    }
}

/// Applies `key.path=value` overrides. Values parse as TOML literals, falling back to bare strings.
inline void apply_override(toml::table& doc, const std::string& assignment)
{
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ScenarioError(assignment, "override must look like key=value");
    std::string path = assignment.substr(0, eq);
    std::string raw = assignment.substr(eq + 1);

    toml::table parsed;
    try {
        parsed = toml::parse("v = " + raw);
    } catch (const toml::parse_error&) {
        parsed = toml::table{{"v", raw}};
    }

    toml::table* cursor = &doc;
    std::size_t start = 0;
    for (;;) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ScenarioError(path, "empty key segment");
        if (dot == std::string::npos) {
            cursor->insert_or_assign(key, *parsed.get("v"));
            return;
        }
        auto* next = cursor->get(key);
        if (!next) {
            cursor->insert(key, toml::table{});
            next = cursor->get(key);
        }
        if (!next->is_table()) throw ScenarioError(path, "'" + key + "' is not a table");
        cursor = next->as_table();
        start = dot + 1;
    }
}

inline toml::table parse_scenario_document(const std::string& text, const std::string& source = "scenario")
{
    try {
        return toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " (line " << e.source().begin.line << ")";
        throw ScenarioError(source, msg.str());
    }
}

inline Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {})
{
    std::ifstream in(path);
    if (!in) throw ScenarioError(path.string(), "cannot open scenario file");
    std::stringstream buf;
    buf << in.rdbuf();
    auto doc = parse_scenario_document(buf.str(), path.string());
    for (const auto& o : overrides) apply_override(doc, o);
    return scenario_from_toml(doc);
}

/// Explicit transactions plus the seeded random ones, ordered by step (stable).
inline std::vector<TxEvent> expand_workload(const Scenario& s)
{
    std::vector<TxEvent> out = s.transactions;
    if (s.random.count > 0) {
        // mt19937_64 output is fully specified; plain modulo keeps the mapping platform-independent.
        std::mt19937_64 rng(s.seed);
        std::uint64_t last = s.random.last_step ? s.random.last_step : s.steps;
        std::uint64_t span = last - s.random.first_step + 1;
        for (std::uint64_t i = 0; i < s.random.count; ++i) {
            TxEvent tx;
            tx.step = s.random.first_step + rng() % span;
            tx.sender = rng() % s.node_count;
            tx.receiver = rng() % s.node_count;
            tx.value = s.random.max_value ? rng() % (s.random.max_value + 1) : 0;
            if (!s.random.function.empty()) {
                auto input = static_cast<std::int64_t>(rng() % (static_cast<std::uint64_t>(s.random.max_input) + 1));
                tx.data = encode_call({s.random.function, {input}});
            }
            out.push_back(std::move(tx));
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const TxEvent& a, const TxEvent& b) { return a.step < b.step; });
    return out;
}

inline std::shared_ptr<const ConsensusProtocol> make_consensus(const Scenario& s)
{
    if (s.consensus == "pow") return std::make_shared<ProofOfWork>(s.pow, s.genesis);
    return std::make_shared<ProofOfAuthority>(s.poa, s.genesis);
}

} // namespace minichain
