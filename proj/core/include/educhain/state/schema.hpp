#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "educhain/bytes.hpp"
#include "educhain/ledger/canonical.hpp"

namespace educhain::state {

enum class TableId : std::uint8_t { Students, Staff, Courses, Grades, Attachments };

// Fixed table order used by snapshots and audits.
inline constexpr std::array<TableId, 5> kAllTables{TableId::Students, TableId::Staff, TableId::Courses,
                                                   TableId::Grades, TableId::Attachments};

std::string_view table_name(TableId table) noexcept;
std::optional<TableId> parse_table(std::string_view name) noexcept;
// Throws Error(UnknownTable).
TableId table_from_name(std::string_view name);

struct TableSchema {
    std::vector<std::string> keyFields;
    std::vector<std::string> valueFields;

    bool has_field(std::string_view name) const;
    bool is_value_field(std::string_view name) const;
};

const TableSchema& schema_of(TableId table);

// Composite primary key. Ordered component-wise; rendered with '/' between
// components (ids never contain '/').
class RowKey {
public:
    RowKey() = default;
    explicit RowKey(std::vector<std::string> parts) : parts_(std::move(parts)) {}
    RowKey(std::initializer_list<std::string> parts) : parts_(parts) {}

    static RowKey parse(std::string_view text);

    const std::vector<std::string>& parts() const noexcept { return parts_; }
    std::string str() const;

    friend auto operator<=>(const RowKey&, const RowKey&) = default;

private:
    std::vector<std::string> parts_;
};

// Value columns of one row; key columns live in the RowKey.
using Row = std::map<std::string, std::string>;

// Canonical row encoding: key and value columns together in one field map.
ledger::FieldMap row_fields(TableId table, const RowKey& key, const Row& row);
Bytes encode_row(TableId table, const RowKey& key, const Row& row);
// Inverse of encode_row; throws Error(MalformedEncoding) if the columns do
// not match the schema.
std::pair<RowKey, Row> decode_row(TableId table, ByteView encoded);

}  // namespace educhain::state
