#include "educhain/chain/mempool.hpp"

namespace educhain::chain {

bool Mempool::push(ledger::Transaction tx) {
    if (full() || !keys_.insert({tx.sender, tx.nonce}).second) return false;
    entries_.push_back(std::move(tx));
    return true;
}

void Mempool::push_front(std::vector<ledger::Transaction> txs) {
    for (auto it = txs.rbegin(); it != txs.rend(); ++it) {
        if (!keys_.insert({it->sender, it->nonce}).second) continue;
        entries_.push_front(std::move(*it));
    }
    while (entries_.size() > capacity_) {
        keys_.erase({entries_.front().sender, entries_.front().nonce});
        entries_.pop_front();
    }
}

std::vector<ledger::Transaction> Mempool::take(std::size_t n) {
    std::vector<ledger::Transaction> out;
    while (!entries_.empty() && out.size() < n) {
        keys_.erase({entries_.front().sender, entries_.front().nonce});
        out.push_back(std::move(entries_.front()));
        entries_.pop_front();
    }
    return out;
}

std::size_t Mempool::remove_if(const std::function<bool(const ledger::Transaction&)>& drop) {
    std::size_t removed = 0;
    for (auto it = entries_.begin(); it != entries_.end();) {
        if (drop(*it)) {
            keys_.erase({it->sender, it->nonce});
            it = entries_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

}  // namespace educhain::chain
