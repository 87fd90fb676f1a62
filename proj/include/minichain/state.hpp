#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include <minichain/enode.hpp>
#include <minichain/hash.hpp>

namespace minichain {

using Amount = std::uint64_t;

/// Contract store values. Restricted to these three kinds so the canonical form is total.
using Value = std::variant<std::int64_t, std::string, std::vector<std::int64_t>>;
using ContractStore = std::map<std::string, Value>;

struct WorldState {
    std::map<NodeId, Amount> balances;
    ContractStore contract;

    Amount balance_of(NodeId id) const
    {
        auto it = balances.find(id);
        return it == balances.end() ? 0 : it->second;
    }

    friend bool operator==(const WorldState&, const WorldState&) = default;
};

inline nlohmann::json value_to_json(const Value& v)
{
    return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

/// Throws std::invalid_argument when the document is not an integer, string, or list of integers.
inline Value value_from_json(const nlohmann::json& j)
{
    auto as_int = [](const nlohmann::json& n) -> std::int64_t {
        if (n.is_number_unsigned()) {
            auto u = n.get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
                throw std::invalid_argument("contract integer out of range");
            return static_cast<std::int64_t>(u);
        }
        if (n.is_number_integer()) return n.get<std::int64_t>();
        throw std::invalid_argument("contract value must be an integer, string, or integer list");
    };
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::vector<std::int64_t> list;
        list.reserve(j.size());
        for (const auto& e : j) list.push_back(as_int(e));
        return list;
    }
    return as_int(j);
}

/// Canonical document: {"balances":{"<id>":n,...},"contract":{...}}, keys sorted lexicographically.
inline nlohmann::json state_to_json(const WorldState& s)
{
    auto balances = nlohmann::json::object();
    for (const auto& [id, amount] : s.balances) balances[std::to_string(id)] = amount;
    auto contract = nlohmann::json::object();
    for (const auto& [key, value] : s.contract) contract[key] = value_to_json(value);
    return {{"balances", std::move(balances)}, {"contract", std::move(contract)}};
}

inline WorldState state_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || j.size() != 2 || !j.contains("balances") || !j.contains("contract"))
        throw std::invalid_argument("state must have exactly keys 'balances' and 'contract'");
    const auto& b = j.at("balances");
    const auto& c = j.at("contract");
    if (!b.is_object() || !c.is_object()) throw std::invalid_argument("state maps must be objects");

    WorldState s;
    for (const auto& [key, amount] : b.items()) {
        std::uint64_t id = 0;
        if (!detail::parse_decimal(key, id)) throw std::invalid_argument("balance key must be a decimal node id");
        if (!amount.is_number_unsigned()) throw std::invalid_argument("balance must be a non-negative integer");
        s.balances.emplace(id, amount.get<Amount>());
    }
    for (const auto& [key, value] : c.items()) s.contract.emplace(key, value_from_json(value));
    return s;
}

inline std::string canonical_state(const WorldState& s)
{
    return state_to_json(s).dump();
}

inline Hash state_digest(const WorldState& s)
{
    return sha256(canonical_state(s));
}

} // namespace minichain
