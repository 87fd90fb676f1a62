#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <minichain/state.hpp>

namespace minichain {

/// A call document: {"function": <name>, "inputs": [<value>, ...]} and nothing else.
struct ContractCall {
    std::string function;
    std::vector<Value> inputs;

    friend bool operator==(const ContractCall&, const ContractCall&) = default;
};

inline std::string encode_call(const ContractCall& call)
{
    auto inputs = nlohmann::json::array();
    for (const auto& v : call.inputs) inputs.push_back(value_to_json(v));
    return nlohmann::json{{"function", call.function}, {"inputs", std::move(inputs)}}.dump();
}

/// Anything other than a well-formed call document is opaque data and yields nullopt.
inline std::optional<ContractCall> decode_call(const std::string& data)
{
    auto doc = nlohmann::json::parse(data, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object() || doc.size() != 2) return std::nullopt;
    auto fn = doc.find("function");
    auto in = doc.find("inputs");
    if (fn == doc.end() || in == doc.end() || !fn->is_string() || !in->is_array()) return std::nullopt;

    ContractCall call{fn->get<std::string>(), {}};
    try {
        for (const auto& v : *in) call.inputs.push_back(value_from_json(v));
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
    return call;
}

/// Registered functions must be deterministic in (store, sender, value, inputs).
using ContractFunction = std::function<void(ContractStore& store, NodeId sender, Amount value, std::span<const Value> inputs)>;

class ContractRegistry {
public:
    ContractRegistry() = default;
    explicit ContractRegistry(std::string name) : name_(std::move(name)) {}

    ContractRegistry& add(std::string function, ContractFunction fn)
    {
        functions_.insert_or_assign(std::move(function), std::move(fn));
        return *this;
    }

    const ContractFunction* find(const std::string& function) const
    {
        auto it = functions_.find(function);
        return it == functions_.end() ? nullptr : &it->second;
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return functions_.size(); }

private:
    std::string name_ = "none";
    std::map<std::string, ContractFunction> functions_;
};

namespace contracts {

inline std::int64_t get_int(const ContractStore& store, const std::string& key)
{
    auto it = store.find(key);
    if (it == store.end()) return 0;
    const auto* v = std::get_if<std::int64_t>(&it->second);
    return v ? *v : 0;
}

/// "counter": increment(k) adds k to "n"; read() leaves the store untouched.
inline ContractRegistry counter()
{
    ContractRegistry r("counter");
    r.add("increment", [](ContractStore& store, NodeId, Amount, std::span<const Value> inputs) {
        if (inputs.size() != 1) return;
        const auto* k = std::get_if<std::int64_t>(&inputs[0]);
        if (!k) return;
        std::int64_t n = get_int(store, "n");
        std::int64_t next = 0;
        if (__builtin_add_overflow(n, *k, &next)) return;
        store["n"] = next;
    });
    r.add("read", [](ContractStore&, NodeId, Amount, std::span<const Value>) {});
    return r;
}

/// "estimate-mean": submit(x) folds x into "count", "sum" and the floored running "mean".
inline ContractRegistry estimate_mean()
{
    ContractRegistry r("estimate-mean");
    r.add("submit", [](ContractStore& store, NodeId, Amount, std::span<const Value> inputs) {
        if (inputs.size() != 1) return;
        const auto* x = std::get_if<std::int64_t>(&inputs[0]);
        if (!x) return;
        std::int64_t count = get_int(store, "count") + 1;
        std::int64_t sum = 0;
        if (__builtin_add_overflow(get_int(store, "sum"), *x, &sum)) return;
        std::int64_t mean = sum / count;
        if ((sum % count != 0) && (sum < 0)) --mean;
        store["count"] = count;
        store["sum"] = sum;
        store["mean"] = mean;
    });
    return r;
}

/// Accepts "none", "counter", "estimate-mean".
inline ContractRegistry builtin(const std::string& name)
{
    if (name == "none") return ContractRegistry{};
    if (name == "counter") return counter();
    if (name == "estimate-mean") return estimate_mean();
    throw std::invalid_argument("unknown contract program '" + name + "'");
}

} // namespace contracts
} // namespace minichain
