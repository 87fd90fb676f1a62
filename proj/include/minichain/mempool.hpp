#pragma once

#include <algorithm>
#include <map>
#include <vector>

#include <minichain/transaction.hpp>

namespace minichain {

/// Pending transactions keyed by id. Insertion of a present id is a no-op.
class Mempool {
public:
    bool insert(const Transaction& tx) { return entries_.emplace(tx.id, tx).second; }
    bool erase(const Hash& id) { return entries_.erase(id) > 0; }
    bool contains(const Hash& id) const { return entries_.count(id) > 0; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    void clear() { entries_.clear(); }

    /// Block inclusion order: (timestamp, id).
    std::vector<Transaction> ordered() const
    {
        std::vector<Transaction> out;
        out.reserve(entries_.size());
        for (const auto& [id, tx] : entries_) out.push_back(tx);
        std::stable_sort(out.begin(), out.end(), [](const Transaction& a, const Transaction& b) {
            return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
        });
        return out;
    }

    const std::map<Hash, Transaction>& entries() const { return entries_; }

    friend bool operator==(const Mempool&, const Mempool&) = default;

private:
    std::map<Hash, Transaction> entries_;
};

} // namespace minichain
