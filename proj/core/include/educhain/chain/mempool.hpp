#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "educhain/ledger/transaction.hpp"

namespace educhain::chain {

// Pending transactions in arrival order, unique per (sender, nonce).
class Mempool {
public:
    explicit Mempool(std::size_t capacity = 8192) : capacity_(capacity) {}

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t capacity() const noexcept { return capacity_; }
    bool full() const noexcept { return entries_.size() >= capacity_; }
    bool contains(const ledger::AccountId& sender, std::uint64_t nonce) const {
        return keys_.count({sender, nonce}) != 0;
    }
    const std::deque<ledger::Transaction>& entries() const noexcept { return entries_; }

    // False when full or when (sender, nonce) is already pending.
    bool push(ledger::Transaction tx);
    // Puts a batch back at the front (reorg reinjection), evicting the oldest
    // entries beyond capacity.
    void push_front(std::vector<ledger::Transaction> txs);
    // Removes and returns up to n entries from the front.
    std::vector<ledger::Transaction> take(std::size_t n);
    // Drops entries for which `drop` returns true; returns how many.
    std::size_t remove_if(const std::function<bool(const ledger::Transaction&)>& drop);

private:
    std::size_t capacity_;
    std::deque<ledger::Transaction> entries_;
    std::set<std::pair<ledger::AccountId, std::uint64_t>> keys_;
};

}  // namespace educhain::chain
