#include "educhain/state/final_state_db.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "educhain/error.hpp"
#include "educhain/ledger/snapshot.hpp"

namespace educhain::state {

using ledger::AccountId;
using ledger::FieldMap;
using ledger::FieldReader;
using ledger::Hash256;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::string join_csv(const std::set<std::string>& items) {
    std::string out;
    for (const auto& i : items) {
        if (!out.empty()) out.push_back(',');
        out += i;
    }
    return out;
}

struct SchemaViolation {
    std::string reason;
};

}  // namespace

FieldMap OperationLogEntry::fields() const {
    FieldMap m;
    m.set_uint("seq", seq)
        .set_hex("actor", actor.digest.view())
        .set_string("opKind", opKind)
        .set_uint("startTime", startTime)
        .set_uint("blockNumber", blockNumber)
        .set_hex("txHash", txHash.view())
        .set_string("status", status);
    return m;
}

std::optional<Row> FinalStateDb::find(TableId id, const RowKey& key) const {
    const auto& t = table(id);
    auto it = t.find(key);
    if (it == t.end()) return std::nullopt;
    return it->second;
}

void FinalStateDb::set_staff_course(const std::string& staffId, const std::string& courseId, bool add) {
    auto& staff = mutable_table(TableId::Staff);
    auto it = staff.find(RowKey{staffId});
    if (it == staff.end()) return;
    auto list = split_csv(it->second["courses"]);
    std::set<std::string> courses(list.begin(), list.end());
    if (add) courses.insert(courseId);
    else courses.erase(courseId);
    it->second["courses"] = join_csv(courses);
}

ApplyResult FinalStateDb::apply_event(const chain::ChainEvent& ev) {
    ApplyResult result;
    auto require_student = [&](const std::string& id) {
        if (!table(TableId::Students).count(RowKey{id})) throw SchemaViolation{"unknown student " + id};
    };
    auto require_course = [&](const std::string& id) {
        if (!table(TableId::Courses).count(RowKey{id})) throw SchemaViolation{"unknown course " + id};
    };

    try {
        std::visit(
            overloaded{
                [&](const ledger::RegisterAccount& o) {
                    if (o.role != ledger::Role::Staff) return;
                    auto& row = mutable_table(TableId::Staff)[RowKey{o.subjectId}];
                    row["name"] = o.displayName;
                    row.try_emplace("courses", "");
                    result.rowsChanged = 1;
                },
                [&](const ledger::RegisterStudent& o) {
                    auto& t = mutable_table(TableId::Students);
                    auto [it, inserted] = t.try_emplace(RowKey{o.studentId});
                    if (inserted)
                        it->second = Row{{"name", ""},  {"program", ""}, {"telephone", ""},
                                         {"email", ""}, {"address", ""}, {"degreeAwarded", ""}};
                    it->second["name"] = o.name;
                    it->second["program"] = o.program;
                    result.rowsChanged = 1;
                },
                [&](const ledger::RegisterCourse& o) {
                    if (!table(TableId::Staff).count(RowKey{o.ownerStaffId}))
                        throw SchemaViolation{"unknown staff " + o.ownerStaffId};
                    auto& t = mutable_table(TableId::Courses);
                    auto [it, inserted] = t.try_emplace(RowKey{o.courseId});
                    if (!inserted && it->second["ownerStaffId"] != o.ownerStaffId)
                        set_staff_course(it->second["ownerStaffId"], o.courseId, false);
                    it->second = Row{{"title", o.title}, {"term", o.term}, {"ownerStaffId", o.ownerStaffId}};
                    set_staff_course(o.ownerStaffId, o.courseId, true);
                    result.rowsChanged = 2;
                },
                [&](const ledger::UpdateProfile& o) {
                    require_student(o.studentId);
                    mutable_table(TableId::Students)[RowKey{o.studentId}][o.field] = o.value;
                    result.rowsChanged = 1;
                },
                [&](const ledger::UpsertGrade& o) {
                    require_student(o.studentId);
                    require_course(o.courseId);
                    auto& t = mutable_table(TableId::Grades);
                    auto [it, inserted] = t.try_emplace(RowKey{o.studentId, o.courseId, o.term});
                    it->second["score"] = std::to_string(o.score);
                    it->second["letter"] = o.letter;
                    it->second.try_emplace("attachmentCid", "");
                    result.rowsChanged = 1;
                },
                [&](const ledger::AttachFile& o) {
                    require_student(o.studentId);
                    require_course(o.courseId);
                    auto& grades = mutable_table(TableId::Grades);
                    std::vector<Row*> targets;
                    for (auto it = grades.lower_bound(RowKey{o.studentId, o.courseId}); it != grades.end(); ++it) {
                        const auto& p = it->first.parts();
                        if (p[0] != o.studentId || p[1] != o.courseId) break;
                        targets.push_back(&it->second);
                    }
                    if (targets.empty())
                        throw SchemaViolation{"no grade for " + o.studentId + " in " + o.courseId};
                    auto cid = o.cid.hex();
                    mutable_table(TableId::Attachments)[RowKey{cid}] =
                        Row{{"size", std::to_string(o.size)}, {"mediaLabel", o.mediaLabel}};
                    for (auto* row : targets) (*row)["attachmentCid"] = cid;
                    result.rowsChanged = 1 + targets.size();
                },
                [&](const ledger::AuditRepair& o) {
                    // Fixes are applied directly on the divergent replica
                    // before the record reaches the chain, so on every replica
                    // this only changes a row still holding the bad value.
                    auto table_id = table_from_name(o.table);
                    auto key = RowKey::parse(o.rowKey);
                    auto& t = mutable_table(table_id);
                    if (o.field == "*") {
                        auto it = t.find(key);
                        std::string current = it == t.end() ? "" : to_hex(encode_row(table_id, key, it->second));
                        if (current != o.oldValue) return;
                        if (o.newValue.empty()) {
                            t.erase(key);
                        } else {
                            auto [k, row] = decode_row(table_id, from_hex(o.newValue));
                            t[k] = std::move(row);
                        }
                        result.rowsChanged = 1;
                        return;
                    }
                    if (!schema_of(table_id).is_value_field(o.field))
                        throw SchemaViolation{"unknown column " + o.field};
                    auto it = t.find(key);
                    if (it == t.end()) return;
                    auto f = it->second.find(o.field);
                    if (f == it->second.end() || f->second != o.oldValue) return;
                    f->second = o.newValue;
                    result.rowsChanged = 1;
                },
            },
            ev.op);
    } catch (const SchemaViolation& v) {
        result = ApplyResult{false, v.reason, 0};
    } catch (const Error& e) {
        result = ApplyResult{false, e.what(), 0};
    }

    append_log(ev.actor, std::string(ledger::op_kind_name(ledger::kind_of(ev.op))), ev.timestamp, ev.blockHeight,
               ev.txHash, result.ok ? "ok" : "failed: SchemaViolation: " + result.failure);
    return result;
}

void FinalStateDb::restore_tables(const FinalStateDb& other) { tables_ = other.tables_; }

const OperationLogEntry& FinalStateDb::append_log(const AccountId& actor, std::string opKind,
                                                  std::uint64_t startTime, std::uint64_t blockNumber,
                                                  const Hash256& txHash, std::string status) {
    OperationLogEntry e;
    e.seq = log_.size();
    e.actor = actor;
    e.opKind = std::move(opKind);
    e.startTime = startTime;
    e.blockNumber = blockNumber;
    e.txHash = txHash;
    e.status = std::move(status);
    log_.push_back(std::move(e));
    return log_.back();
}

void FinalStateDb::write_direct(TableId id, const RowKey& key, const std::string& field, const std::string& value) {
    if (!schema_of(id).is_value_field(field)) throw Error(Errc::UnknownField, field);
    auto& t = mutable_table(id);
    auto it = t.find(key);
    if (it == t.end()) throw Error(Errc::NotFound, std::string(table_name(id)) + " row " + key.str());
    it->second[field] = value;
}

void FinalStateDb::put_row_direct(TableId id, const RowKey& key, Row row) { mutable_table(id)[key] = std::move(row); }

bool FinalStateDb::erase_row_direct(TableId id, const RowKey& key) { return mutable_table(id).erase(key) != 0; }

std::vector<Row> query(const FinalStateDb& db, std::string_view table, const Predicate& predicate) {
    auto id = table_from_name(table);
    const auto& schema = schema_of(id);
    for (const auto& [field, value] : predicate)
        if (!schema.has_field(field)) throw Error(Errc::UnknownField, field);

    std::vector<Row> out;
    for (const auto& [key, row] : db.table(id)) {
        Row merged = row;
        for (std::size_t i = 0; i < schema.keyFields.size(); ++i) merged[schema.keyFields[i]] = key.parts()[i];
        bool match = std::all_of(predicate.begin(), predicate.end(), [&](const auto& p) {
            auto it = merged.find(p.first);
            return it != merged.end() && it->second == p.second;
        });
        if (match) out.push_back(std::move(merged));
    }
    return out;
}

Bytes save_snapshot(const FinalStateDb& db) {
    FieldMap tables;
    for (auto id : kAllTables) {
        FieldMap rows;
        std::size_t i = 0;
        for (const auto& [key, row] : db.table(id)) rows.set_raw(ledger::index_key(i++), encode_row(id, key, row));
        tables.set_map(std::string(table_name(id)), rows);
    }
    FieldMap log;
    for (const auto& e : db.op_log()) log.set_map(ledger::index_key(e.seq), e.fields());
    FieldMap body;
    body.set_map("tables", tables).set_map("opLog", log);
    return ledger::wrap_snapshot("state", body);
}

FinalStateDb load_snapshot(ByteView data) {
    auto body = ledger::unwrap_snapshot(data, "state");
    FinalStateDb db;
    try {
        auto tables = body.nested("tables");
        for (auto id : kAllTables) {
            auto rows = tables.nested(std::string(table_name(id)));
            for (const auto& [idx, enc] : rows.fields()) {
                auto [key, row] = decode_row(id, enc);
                db.put_row_direct(id, key, std::move(row));
            }
        }
        auto log = body.nested("opLog");
        for (const auto& [idx, enc] : log.fields()) {
            auto r = FieldReader::decode(enc);
            db.append_log(AccountId{Hash256::from_bytes(r.hex("actor"))}, r.string("opKind"), r.uint("startTime"),
                          r.uint("blockNumber"), Hash256::from_bytes(r.hex("txHash")), r.string("status"));
        }
    } catch (const Error& e) {
        throw Error(Errc::BadSnapshot, e.what());
    }
    return db;
}

}  // namespace educhain::state
