#include "educhain/chain/private_node.hpp"

#include <algorithm>

#include "educhain/chain/replay.hpp"

namespace educhain::chain {

using ledger::Block;
using ledger::Hash256;
using ledger::Violation;
using ledger::ViolationKind;

std::string_view import_status_name(ImportStatus s) noexcept {
    switch (s) {
        case ImportStatus::Applied: return "Applied";
        case ImportStatus::SideBranch: return "SideBranch";
        case ImportStatus::Queued: return "Queued";
        case ImportStatus::Known: return "Known";
        case ImportStatus::Rejected: return "Rejected";
    }
    return "Unknown";
}

PrivateNode::PrivateNode(std::string nodeId, std::string department, ledger::ChainConfig config,
                         ledger::KeyPair nodeKey, NodeOptions options)
    : id_(std::move(nodeId)),
      department_(std::move(department)),
      config_(std::move(config)),
      key_(std::move(nodeKey)),
      options_(options),
      mempool_(options.mempoolCapacity) {
    config_.validate();
    auto genesis = ledger::make_genesis(config_);
    auto hash = genesis.hash();
    state_ = ChainState(config_);
    pending_ = state_;
    blocks_.emplace(hash, Stored{genesis, state_});
    chain_.push_back(std::move(genesis));
    hashes_.push_back(hash);
}

SubmitResult PrivateNode::submit_transaction(const ledger::Transaction& tx) {
    auto hash = tx.hash();
    if (!options_.acceptsUserTransactions)
        return SubmitResult::rejected(Errc::NotAcceptingTransactions, "node " + id_ + " takes no user transactions",
                                      hash);
    if (auto rejection = pending_.check(tx)) return SubmitResult::rejected(rejection->code, rejection->reason, hash);
    if (!mempool_.push(tx))
        return SubmitResult::rejected(Errc::MempoolFull, "mempool holds " + std::to_string(mempool_.size()), hash);
    pending_.apply(tx);
    return SubmitResult::ok(hash);
}

std::optional<Block> PrivateNode::produce_block(std::uint64_t timestamp, std::uint64_t maxAttempts) {
    if (mempool_.empty()) return std::nullopt;
    auto txs = mempool_.take(config_.maxTxPerBlock);

    Block block;
    auto after = state_;
    for (auto& tx : txs) {
        // Pending txs were admitted in order against the tip, so this only
        // filters entries invalidated by a block imported since.
        if (after.check(tx, /*verify_signature=*/false)) continue;
        after.apply(tx);
        block.txs.push_back(std::move(tx));
    }
    if (block.txs.empty()) {
        rebuild_pending();
        return std::nullopt;
    }

    auto included = block.txs;
    try {
        return seal_and_append(std::move(block), std::move(after), timestamp, maxAttempts);
    } catch (...) {
        mempool_.push_front(std::move(included));
        throw;
    }
}

ledger::Block PrivateNode::produce_empty_block(std::uint64_t timestamp, std::uint64_t maxAttempts) {
    return seal_and_append(Block{}, state_, timestamp, maxAttempts);
}

ledger::Block PrivateNode::seal_and_append(Block block, ChainState after, std::uint64_t timestamp,
                                           std::uint64_t maxAttempts) {
    auto& h = block.header;
    h.chainId = config_.chainId;
    h.height = height() + 1;
    h.parentHash = hashes_.back();
    h.txRoot = ledger::compute_tx_root(block.txs);
    h.timestamp = std::max(timestamp, tip().header.timestamp);
    h.target = config_.initialTarget;
    h.minerId = key_.account();
    h = ledger::pow_seal(h, config_.initialTarget, maxAttempts);

    auto hash = block.hash();
    blocks_.emplace(hash, Stored{block, std::move(after)});
    extend_tip(hash);
    rebuild_pending();
    if (broadcaster_) broadcaster_(block);
    drain_orphans(hash);
    return block;
}

ImportResult PrivateNode::import_block(const Block& block) {
    auto result = import_one(block);
    if (result.status == ImportStatus::Applied || result.status == ImportStatus::SideBranch)
        drain_orphans(block.hash());
    return result;
}

ImportResult PrivateNode::import_one(const Block& block) {
    auto hash = block.hash();
    if (blocks_.count(hash)) return {ImportStatus::Known, {}, false};

    auto parent = blocks_.find(block.header.parentHash);
    if (parent == blocks_.end()) {
        if (block.header.height == 0)
            return {ImportStatus::Rejected, {{ViolationKind::BadHeight, std::nullopt, "foreign genesis"}}, false};
        auto& bucket = orphans_[block.header.parentHash];
        if (std::any_of(bucket.begin(), bucket.end(), [&](const Block& b) { return b.hash() == hash; }))
            return {ImportStatus::Known, {}, false};
        if (orphanCount_ >= options_.orphanCapacity)
            return {ImportStatus::Rejected, {{ViolationKind::BadParentLink, std::nullopt, "orphan buffer full"}}, false};
        bucket.push_back(block);
        ++orphanCount_;
        return {ImportStatus::Queued, {}, false};
    }

    auto after = parent->second.stateAfter;
    auto violations = validate_block_against(block, parent->second.block.header, config_, after);
    if (!violations.empty()) return {ImportStatus::Rejected, std::move(violations), false};

    blocks_.emplace(hash, Stored{block, std::move(after)});
    if (block.header.parentHash == hashes_.back()) {
        extend_tip(hash);
        rebuild_pending();
        return {ImportStatus::Applied, {}, false};
    }
    // Longest chain wins; on equal length the first-seen tip stays.
    if (block.header.height > height()) {
        reorg_to(hash);
        return {ImportStatus::Applied, {}, true};
    }
    return {ImportStatus::SideBranch, {}, false};
}

void PrivateNode::extend_tip(const Hash256& hash) {
    const auto& stored = blocks_.at(hash);
    chain_.push_back(stored.block);
    hashes_.push_back(hash);
    state_ = stored.stateAfter;
    for (const auto& ev : events_of(stored.block)) {
        txIndex_[ev.txHash] = ev.blockHeight;
        emit(ev);
    }
}

void PrivateNode::reorg_to(const Hash256& newTip) {
    std::vector<Hash256> branch;
    auto cursor = newTip;
    while (true) {
        const auto& b = blocks_.at(cursor).block;
        auto h = b.header.height;
        if (h < hashes_.size() && hashes_[h] == cursor) break;
        branch.push_back(cursor);
        cursor = b.header.parentHash;
    }
    const auto forkHeight = blocks_.at(cursor).block.header.height;

    std::vector<ledger::Transaction> dropped;
    for (auto h = forkHeight + 1; h < chain_.size(); ++h)
        for (const auto& tx : chain_[h].txs) {
            txIndex_.erase(tx.hash());
            dropped.push_back(tx);
        }
    chain_.resize(forkHeight + 1);
    hashes_.resize(forkHeight + 1);
    state_ = blocks_.at(cursor).stateAfter;
    emit(RollbackEvent{forkHeight});

    for (auto it = branch.rbegin(); it != branch.rend(); ++it) extend_tip(*it);

    std::erase_if(dropped, [&](const ledger::Transaction& tx) { return txIndex_.count(tx.hash()) != 0; });
    mempool_.push_front(std::move(dropped));
    rebuild_pending();
}

void PrivateNode::rebuild_pending() {
    pending_ = state_;
    mempool_.remove_if([&](const ledger::Transaction& tx) {
        if (pending_.check(tx, /*verify_signature=*/false)) return true;
        pending_.apply(tx);
        return false;
    });
}

void PrivateNode::drain_orphans(const Hash256& parent) {
    std::vector<Hash256> work{parent};
    while (!work.empty()) {
        auto h = work.back();
        work.pop_back();
        auto it = orphans_.find(h);
        if (it == orphans_.end()) continue;
        auto children = std::move(it->second);
        orphans_.erase(it);
        orphanCount_ -= children.size();
        for (const auto& child : children) {
            auto r = import_one(child);
            if (r.status == ImportStatus::Applied || r.status == ImportStatus::SideBranch) work.push_back(child.hash());
        }
    }
}

std::size_t PrivateNode::orphan_count() const noexcept { return orphanCount_; }

std::optional<std::uint64_t> PrivateNode::tx_height(const Hash256& txHash) const {
    auto it = txIndex_.find(txHash);
    if (it == txIndex_.end()) return std::nullopt;
    return it->second;
}

const ledger::Block* PrivateNode::find_block(const Hash256& hash) const {
    auto it = blocks_.find(hash);
    return it == blocks_.end() ? nullptr : &it->second.block;
}

std::uint64_t PrivateNode::subscribe_events(EventFilter filter, EventHandler handler) {
    auto id = nextSubscription_++;
    subscribers_.emplace(id, Subscription{std::move(filter), std::move(handler)});
    return id;
}

void PrivateNode::unsubscribe(std::uint64_t subscription) { subscribers_.erase(subscription); }

void PrivateNode::on_event(const NodeEvent& ev) {
    if (const auto* ce = std::get_if<ChainEvent>(&ev)) {
        db_.apply_event(*ce);
        return;
    }
    // Rebuild the tables from the retained prefix; the op log survives.
    const auto& rb = std::get<RollbackEvent>(ev);
    state::FinalStateDb fresh;
    for (std::size_t h = 1; h < chain_.size(); ++h)
        for (const auto& e : events_of(chain_[h])) fresh.apply_event(e);
    db_.restore_tables(fresh);
    db_.append_log(key_.account(), "Rollback", tip().header.timestamp, rb.toHeight);
}

void PrivateNode::emit(const NodeEvent& ev) {
    on_event(ev);
    auto subs = subscribers_;
    for (const auto& [id, sub] : subs) {
        if (const auto* ce = std::get_if<ChainEvent>(&ev); ce && !sub.filter.empty() && !sub.filter.count(ledger::kind_of(ce->op)))
            continue;
        sub.handler(ev);
    }
}

}  // namespace educhain::chain
