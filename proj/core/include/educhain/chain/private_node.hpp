#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "educhain/chain/chain_state.hpp"
#include "educhain/chain/events.hpp"
#include "educhain/chain/mempool.hpp"
#include "educhain/ledger/block.hpp"
#include "educhain/state/content_store.hpp"
#include "educhain/state/final_state_db.hpp"

namespace educhain::chain {

struct NodeOptions {
    std::size_t mempoolCapacity = 8192;
    std::size_t orphanCapacity = 256;
    // Hubs set this to false: they follow the chain but never take user txs.
    bool acceptsUserTransactions = true;
};

struct SubmitResult {
    bool accepted = false;
    std::optional<Errc> error;
    std::string reason;
    ledger::Hash256 txHash;

    static SubmitResult ok(const ledger::Hash256& h) { return {true, std::nullopt, {}, h}; }
    static SubmitResult rejected(Errc code, std::string why, const ledger::Hash256& h) {
        return {false, code, std::move(why), h};
    }
};

enum class ImportStatus {
    Applied,     // extended the canonical chain (possibly through a reorg)
    SideBranch,  // valid, stored on a shorter or equal-length fork
    Queued,      // parent unknown; held until it arrives
    Known,       // already stored
    Rejected,
};

std::string_view import_status_name(ImportStatus s) noexcept;

struct ImportResult {
    ImportStatus status = ImportStatus::Rejected;
    std::vector<ledger::Violation> violations;
    bool reorg = false;
};

using EventFilter = std::set<ledger::OpKind>;  // empty = every kind
using EventHandler = std::function<void(const NodeEvent&)>;

// One department's node on the university's private chain. Single-writer:
// callers serialize all mutating calls.
class PrivateNode {
public:
    PrivateNode(std::string nodeId, std::string department, ledger::ChainConfig config, ledger::KeyPair nodeKey,
                NodeOptions options = {});

    const std::string& id() const noexcept { return id_; }
    const std::string& department() const noexcept { return department_; }
    const ledger::ChainConfig& config() const noexcept { return config_; }
    const ledger::KeyPair& node_key() const noexcept { return key_; }
    bool accepts_user_transactions() const noexcept { return options_.acceptsUserTransactions; }

    SubmitResult submit_transaction(const ledger::Transaction& tx);
    // Mines up to maxTxPerBlock pending txs on the current tip, applies the
    // block locally and hands it to the broadcaster. nullopt when the
    // mempool is empty.
    std::optional<ledger::Block> produce_block(std::uint64_t timestamp,
                                               std::uint64_t maxAttempts = std::numeric_limits<std::uint64_t>::max());
    // Mines a transaction-free block on the tip. Used to break a tie between
    // equal-length branches when no traffic would otherwise extend one.
    ledger::Block produce_empty_block(std::uint64_t timestamp,
                                      std::uint64_t maxAttempts = std::numeric_limits<std::uint64_t>::max());
    ImportResult import_block(const ledger::Block& block);

    std::uint64_t subscribe_events(EventFilter filter, EventHandler handler);
    void unsubscribe(std::uint64_t subscription);
    void set_broadcaster(std::function<void(const ledger::Block&)> broadcaster) { broadcaster_ = std::move(broadcaster); }

    // Nonce the sender's next submission must carry (counts pending txs).
    std::uint64_t next_nonce(const ledger::AccountId& sender) const { return pending_.nonce(sender); }

    const std::vector<ledger::Block>& chain() const noexcept { return chain_; }
    const ledger::Block& tip() const noexcept { return chain_.back(); }
    std::uint64_t height() const noexcept { return chain_.back().header.height; }
    const ChainState& state() const noexcept { return state_; }
    const Mempool& mempool() const noexcept { return mempool_; }
    std::size_t orphan_count() const noexcept;
    // Height of the canonical block containing the tx.
    std::optional<std::uint64_t> tx_height(const ledger::Hash256& txHash) const;
    // Any stored valid block, canonical or not.
    const ledger::Block* find_block(const ledger::Hash256& hash) const;

    state::FinalStateDb& database() noexcept { return db_; }
    const state::FinalStateDb& database() const noexcept { return db_; }
    state::ContentStore& content() noexcept { return content_; }
    const state::ContentStore& content() const noexcept { return content_; }

private:
    ledger::Block seal_and_append(ledger::Block block, ChainState after, std::uint64_t timestamp,
                                  std::uint64_t maxAttempts);
    struct Stored {
        ledger::Block block;
        ChainState stateAfter;
    };

    ImportResult import_one(const ledger::Block& block);
    void extend_tip(const ledger::Hash256& hash);
    void reorg_to(const ledger::Hash256& newTip);
    void emit(const NodeEvent& ev);
    void on_event(const NodeEvent& ev);
    void rebuild_pending();
    void drain_orphans(const ledger::Hash256& parent);

    std::string id_;
    std::string department_;
    ledger::ChainConfig config_;
    ledger::KeyPair key_;
    NodeOptions options_;

    std::map<ledger::Hash256, Stored> blocks_;  // every valid block seen
    std::vector<ledger::Block> chain_;          // canonical chain, genesis first
    std::vector<ledger::Hash256> hashes_;       // hashes of chain_
    std::map<ledger::Hash256, std::uint64_t> txIndex_;
    ChainState state_;    // after the tip
    ChainState pending_;  // after the tip and every pending tx
    Mempool mempool_;
    std::map<ledger::Hash256, std::vector<ledger::Block>> orphans_;  // by missing parent
    std::size_t orphanCount_ = 0;

    struct Subscription {
        EventFilter filter;
        EventHandler handler;
    };
    std::map<std::uint64_t, Subscription> subscribers_;
    std::uint64_t nextSubscription_ = 0;
    std::function<void(const ledger::Block&)> broadcaster_;

    state::FinalStateDb db_;
    state::ContentStore content_;
};

}  // namespace educhain::chain
