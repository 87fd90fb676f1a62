#pragma once

#include <minichain/block.hpp>
#include <minichain/contract.hpp>
#include <minichain/state.hpp>
#include <minichain/transaction.hpp>

namespace minichain {

/// In-place transition. An underfunded sender makes the whole transaction a no-op;
/// after a successful transfer an unknown or undecodable call is ignored.
inline void apply_transaction_in_place(WorldState& state, const Transaction& tx, const ContractRegistry& registry)
{
    Amount available = state.balance_of(tx.sender);
    if (available < tx.value) return;

    if (tx.value > 0) state.balances[tx.sender] = available - tx.value;
    state.balances[tx.receiver] += tx.value;

    if (registry.size() == 0 || tx.data.empty()) return;
    auto call = decode_call(tx.data);
    if (!call) return;
    if (const auto* fn = registry.find(call->function)) (*fn)(state.contract, tx.sender, tx.value, call->inputs);
}

inline WorldState apply_transaction(WorldState state, const Transaction& tx, const ContractRegistry& registry)
{
    apply_transaction_in_place(state, tx, registry);
    return state;
}

inline WorldState apply_block(WorldState state, const Block& block, const ContractRegistry& registry)
{
    for (const auto& tx : block.data) apply_transaction_in_place(state, tx, registry);
    return state;
}

} // namespace minichain
