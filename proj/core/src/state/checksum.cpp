#include "educhain/state/checksum.hpp"

#include <iterator>

#include "educhain/error.hpp"

namespace educhain::state {

using ledger::Md5Stream;

namespace {

template <class It>
ledger::Hash128 digest_rows(TableId table, It first, It last) {
    Md5Stream md5;
    for (; first != last; ++first) md5.update(encode_row(table, first->first, first->second));
    return md5.finish();
}

}  // namespace

ledger::Hash128 table_digest(const FinalStateDb& db, TableId table) {
    const auto& t = db.table(table);
    return digest_rows(table, t.begin(), t.end());
}

ledger::Hash128 table_digest(const FinalStateDb& db, std::string_view table) {
    return table_digest(db, table_from_name(table));
}

std::vector<TableChecksum> chunk_checksums(const FinalStateDb& db, TableId table, std::size_t chunkSize) {
    if (chunkSize == 0) throw Error(Errc::BadChunkSize, "chunk size must be at least 1");
    const auto& t = db.table(table);
    std::vector<TableChecksum> out;
    auto it = t.begin();
    while (it != t.end()) {
        TableChecksum c;
        c.table = std::string(table_name(table));
        c.chunkIndex = static_cast<std::uint32_t>(out.size());
        c.firstKey = it->first;
        auto start = it;
        std::size_t n = 0;
        for (; it != t.end() && n < chunkSize; ++it, ++n) c.lastKey = it->first;
        c.rowCount = static_cast<std::uint32_t>(n);
        c.digest = digest_rows(table, start, it);
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

auto range_bounds(const FinalStateDb::Table& t, const KeyRange& range) {
    auto first = range.lo ? t.lower_bound(*range.lo) : t.begin();
    auto last = range.hi ? t.lower_bound(*range.hi) : t.end();
    if (range.lo && range.hi && !(*range.lo < *range.hi)) last = first;
    return std::pair{first, last};
}

}  // namespace

RangeChecksum range_checksum(const FinalStateDb& db, TableId table, const KeyRange& range) {
    auto [first, last] = range_bounds(db.table(table), range);
    RangeChecksum r;
    r.rowCount = static_cast<std::uint32_t>(std::distance(first, last));
    r.digest = digest_rows(table, first, last);
    return r;
}

std::vector<RowKey> keys_in_range(const FinalStateDb& db, TableId table, const KeyRange& range) {
    auto [first, last] = range_bounds(db.table(table), range);
    std::vector<RowKey> out;
    for (; first != last; ++first) out.push_back(first->first);
    return out;
}

}  // namespace educhain::state
