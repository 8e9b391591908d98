#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "educhain/ledger/digest.hpp"
#include "educhain/state/final_state_db.hpp"

namespace educhain::state {

// MD5 over the concatenated canonical row encodings in key order. An empty
// table digests to MD5("").
ledger::Hash128 table_digest(const FinalStateDb& db, TableId table);
ledger::Hash128 table_digest(const FinalStateDb& db, std::string_view table);

struct TableChecksum {
    std::string table;
    std::uint32_t chunkIndex = 0;
    RowKey firstKey;
    RowKey lastKey;
    std::uint32_t rowCount = 0;
    ledger::Hash128 digest;

    friend bool operator==(const TableChecksum&, const TableChecksum&) = default;
};

// Rows in key order split into ceil(n / chunkSize) chunks. Throws
// BadChunkSize for chunkSize 0.
std::vector<TableChecksum> chunk_checksums(const FinalStateDb& db, TableId table, std::size_t chunkSize);

// Half-open key range [lo, hi); an absent bound is unbounded.
struct KeyRange {
    std::optional<RowKey> lo;
    std::optional<RowKey> hi;

    bool contains(const RowKey& key) const { return (!lo || !(key < *lo)) && (!hi || key < *hi); }
};

struct RangeChecksum {
    std::uint32_t rowCount = 0;
    ledger::Hash128 digest;

    friend bool operator==(const RangeChecksum&, const RangeChecksum&) = default;
};

RangeChecksum range_checksum(const FinalStateDb& db, TableId table, const KeyRange& range);
std::vector<RowKey> keys_in_range(const FinalStateDb& db, TableId table, const KeyRange& range);

}  // namespace educhain::state
