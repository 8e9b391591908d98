#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "educhain/chain/events.hpp"
#include "educhain/ledger/keys.hpp"
#include "educhain/state/schema.hpp"

namespace educhain::state {

struct OperationLogEntry {
    std::uint64_t seq = 0;
    ledger::AccountId actor;
    std::string opKind;
    std::uint64_t startTime = 0;    // unix ms
    std::uint64_t blockNumber = 0;
    ledger::Hash256 txHash;         // zero for off-chain actions (exports, audit fixes)
    std::string status = "ok";      // "ok" or "failed: <reason>"

    ledger::FieldMap fields() const;
    friend bool operator==(const OperationLogEntry&, const OperationLogEntry&) = default;
};

struct ApplyResult {
    bool ok = true;
    std::string failure;
    std::size_t rowsChanged = 0;
};

// Per-node final-state database: the latest values derived from chain events
// plus an append-only operation log. The tables are a cache of the chain;
// the log is node-local and is not part of replica comparison.
class FinalStateDb {
public:
    using Table = std::map<RowKey, Row>;

    const Table& table(TableId id) const { return tables_[static_cast<std::size_t>(id)]; }
    std::optional<Row> find(TableId id, const RowKey& key) const;
    std::size_t row_count(TableId id) const { return table(id).size(); }

    // Applies the op to exactly the addressed rows and appends one log entry.
    // Schema violations mutate nothing and are logged with a failure marker.
    ApplyResult apply_event(const chain::ChainEvent& event);

    // Replaces every table with `other`'s; the operation log is kept.
    void restore_tables(const FinalStateDb& other);

    // Off-chain log entries (exports, rollbacks, audit fixes).
    const OperationLogEntry& append_log(const ledger::AccountId& actor, std::string opKind, std::uint64_t startTime,
                                        std::uint64_t blockNumber, const ledger::Hash256& txHash = {},
                                        std::string status = "ok");
    const std::vector<OperationLogEntry>& op_log() const noexcept { return log_; }

    // Direct writes bypass the event path. They exist for audit repair and
    // fault injection only.
    void write_direct(TableId id, const RowKey& key, const std::string& field, const std::string& value);
    void put_row_direct(TableId id, const RowKey& key, Row row);
    bool erase_row_direct(TableId id, const RowKey& key);

    // Compares tables only.
    bool same_tables(const FinalStateDb& other) const { return tables_ == other.tables_; }

private:
    Table& mutable_table(TableId id) { return tables_[static_cast<std::size_t>(id)]; }
    void set_staff_course(const std::string& staffId, const std::string& courseId, bool add);

    std::array<Table, kAllTables.size()> tables_;
    std::vector<OperationLogEntry> log_;
};

inline ApplyResult apply_event(FinalStateDb& db, const chain::ChainEvent& event) { return db.apply_event(event); }

using Predicate = std::vector<std::pair<std::string, std::string>>;

// All rows (key and value columns merged) satisfying the field-equality
// conjunction, in primary-key order. Throws UnknownTable / UnknownField.
std::vector<Row> query(const FinalStateDb& db, std::string_view table, const Predicate& predicate);

// Versioned deterministic snapshot of tables and log.
Bytes save_snapshot(const FinalStateDb& db);
FinalStateDb load_snapshot(ByteView data);

}  // namespace educhain::state
