#include "educhain/state/schema.hpp"

#include <algorithm>

#include "educhain/error.hpp"

namespace educhain::state {

namespace {

constexpr std::array<std::string_view, 5> kNames{"students", "staff", "courses", "grades", "attachments"};

const std::array<TableSchema, 5>& schemas() {
    static const std::array<TableSchema, 5> s{{
        {{"studentId"}, {"name", "program", "telephone", "email", "address", "degreeAwarded"}},
        {{"staffId"}, {"name", "courses"}},
        {{"courseId"}, {"title", "term", "ownerStaffId"}},
        {{"studentId", "courseId", "term"}, {"score", "letter", "attachmentCid"}},
        {{"cid"}, {"size", "mediaLabel"}},
    }};
    return s;
}

}  // namespace

std::string_view table_name(TableId table) noexcept { return kNames[static_cast<std::size_t>(table)]; }

std::optional<TableId> parse_table(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kNames.size(); ++i)
        if (kNames[i] == name) return static_cast<TableId>(i);
    return std::nullopt;
}

TableId table_from_name(std::string_view name) {
    if (auto t = parse_table(name)) return *t;
    throw Error(Errc::UnknownTable, std::string(name));
}

bool TableSchema::has_field(std::string_view name) const {
    return std::find(keyFields.begin(), keyFields.end(), name) != keyFields.end() || is_value_field(name);
}

bool TableSchema::is_value_field(std::string_view name) const {
    return std::find(valueFields.begin(), valueFields.end(), name) != valueFields.end();
}

const TableSchema& schema_of(TableId table) { return schemas()[static_cast<std::size_t>(table)]; }

RowKey RowKey::parse(std::string_view text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find('/', start);
        parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return RowKey(std::move(parts));
}

std::string RowKey::str() const {
    std::string out;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
        if (i) out.push_back('/');
        out += parts_[i];
    }
    return out;
}

ledger::FieldMap row_fields(TableId table, const RowKey& key, const Row& row) {
    const auto& schema = schema_of(table);
    ledger::FieldMap m;
    for (std::size_t i = 0; i < schema.keyFields.size() && i < key.parts().size(); ++i)
        m.set_string(schema.keyFields[i], key.parts()[i]);
    for (const auto& [field, value] : row) m.set_string(field, value);
    return m;
}

Bytes encode_row(TableId table, const RowKey& key, const Row& row) { return row_fields(table, key, row).encode(); }

std::pair<RowKey, Row> decode_row(TableId table, ByteView encoded) {
    const auto& schema = schema_of(table);
    auto r = ledger::FieldReader::decode(encoded);
    std::vector<std::string> parts;
    for (const auto& k : schema.keyFields) parts.push_back(r.string(k));
    Row row;
    for (const auto& [name, value] : r.fields()) {
        if (std::find(schema.keyFields.begin(), schema.keyFields.end(), name) != schema.keyFields.end()) continue;
        if (!schema.is_value_field(name)) throw Error(Errc::MalformedEncoding, "unknown column '" + name + "'");
        row[name] = to_string(value);
    }
    return {RowKey(std::move(parts)), std::move(row)};
}

}  // namespace educhain::state
