#include "educhain/ledger/record_op.hpp"

#include <array>

#include "educhain/error.hpp"

namespace educhain::ledger {

namespace {

constexpr std::array<std::string_view, 4> kRoleNames{"Student", "Staff", "Registrar", "Auditor"};
constexpr std::array<std::string_view, 7> kOpNames{"RegisterAccount", "RegisterStudent", "RegisterCourse",
                                                   "UpdateProfile",   "UpsertGrade",     "AttachFile",
                                                   "AuditRepair"};
constexpr std::array<std::string_view, 6> kProfileFields{"address", "degreeAwarded", "email",
                                                         "name",    "program",       "telephone"};
constexpr std::array<std::string_view, 5> kTables{"attachments", "courses", "grades", "staff", "students"};

bool bad_id(std::string_view id) { return id.empty() || id.find('/') != std::string_view::npos; }

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view role_name(Role role) noexcept { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<Role> parse_role(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kRoleNames.size(); ++i)
        if (kRoleNames[i] == name) return static_cast<Role>(i);
    return std::nullopt;
}

std::string_view op_kind_name(OpKind kind) noexcept { return kOpNames[static_cast<std::size_t>(kind)]; }

std::optional<OpKind> parse_op_kind(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kOpNames.size(); ++i)
        if (kOpNames[i] == name) return static_cast<OpKind>(i);
    return std::nullopt;
}

bool is_profile_field(std::string_view field) noexcept {
    for (auto f : kProfileFields)
        if (f == field) return true;
    return false;
}

std::optional<std::string> check_op_shape(const RecordOp& op) {
    return std::visit(
        overloaded{
            [](const RegisterAccount& o) -> std::optional<std::string> {
                if (bad_id(o.subjectId)) return "subjectId must be a non-empty id without '/'";
                return std::nullopt;
            },
            [](const RegisterStudent& o) -> std::optional<std::string> {
                if (bad_id(o.studentId)) return "studentId must be a non-empty id without '/'";
                return std::nullopt;
            },
            [](const RegisterCourse& o) -> std::optional<std::string> {
                if (bad_id(o.courseId) || bad_id(o.term) || bad_id(o.ownerStaffId))
                    return "courseId, term and ownerStaffId must be non-empty ids without '/'";
                return std::nullopt;
            },
            [](const UpdateProfile& o) -> std::optional<std::string> {
                if (bad_id(o.studentId)) return "studentId must be a non-empty id without '/'";
                if (!is_profile_field(o.field)) return "unknown profile field '" + o.field + "'";
                return std::nullopt;
            },
            [](const UpsertGrade& o) -> std::optional<std::string> {
                if (bad_id(o.studentId) || bad_id(o.courseId) || bad_id(o.term))
                    return "studentId, courseId and term must be non-empty ids without '/'";
                if (o.score > 100) return "score must be within 0..100";
                return std::nullopt;
            },
            [](const AttachFile& o) -> std::optional<std::string> {
                if (bad_id(o.studentId) || bad_id(o.courseId))
                    return "studentId and courseId must be non-empty ids without '/'";
                return std::nullopt;
            },
            [](const AuditRepair& o) -> std::optional<std::string> {
                bool known = false;
                for (auto t : kTables) known = known || t == o.table;
                if (!known) return "unknown table '" + o.table + "'";
                if (o.rowKey.empty() || o.field.empty()) return "rowKey and field are required";
                return std::nullopt;
            },
        },
        op);
}

FieldMap op_fields(const RecordOp& op) {
    FieldMap m;
    m.set_string("kind", op_kind_name(kind_of(op)));
    std::visit(overloaded{
                   [&](const RegisterAccount& o) {
                       m.set_hex("accountKey", o.accountKey.view())
                           .set_string("role", role_name(o.role))
                           .set_string("subjectId", o.subjectId)
                           .set_string("displayName", o.displayName);
                   },
                   [&](const RegisterStudent& o) {
                       m.set_string("studentId", o.studentId)
                           .set_string("name", o.name)
                           .set_string("program", o.program);
                   },
                   [&](const RegisterCourse& o) {
                       m.set_string("courseId", o.courseId)
                           .set_string("title", o.title)
                           .set_string("term", o.term)
                           .set_string("ownerStaffId", o.ownerStaffId);
                   },
                   [&](const UpdateProfile& o) {
                       m.set_string("studentId", o.studentId)
                           .set_string("field", o.field)
                           .set_string("value", o.value);
                   },
                   [&](const UpsertGrade& o) {
                       m.set_string("studentId", o.studentId)
                           .set_string("courseId", o.courseId)
                           .set_string("term", o.term)
                           .set_uint("score", o.score)
                           .set_string("letter", o.letter);
                   },
                   [&](const AttachFile& o) {
                       m.set_string("studentId", o.studentId)
                           .set_string("courseId", o.courseId)
                           .set_hex("cid", o.cid.view())
                           .set_uint("size", o.size)
                           .set_string("mediaLabel", o.mediaLabel);
                   },
                   [&](const AuditRepair& o) {
                       m.set_string("table", o.table)
                           .set_string("rowKey", o.rowKey)
                           .set_string("field", o.field)
                           .set_string("oldValue", o.oldValue)
                           .set_string("newValue", o.newValue)
                           .set_string("auditId", o.auditId);
                   },
               },
               op);
    return m;
}

Bytes encode_op(const RecordOp& op) { return op_fields(op).encode(); }

RecordOp op_from_fields(const FieldReader& r) {
    auto kind = parse_op_kind(r.string("kind"));
    if (!kind) throw Error(Errc::MalformedEncoding, "unknown op kind '" + r.string("kind") + "'");
    switch (*kind) {
        case OpKind::RegisterAccount: {
            auto role = parse_role(r.string("role"));
            if (!role) throw Error(Errc::MalformedEncoding, "unknown role");
            return RegisterAccount{PublicKey::from_bytes(r.hex("accountKey")), *role, r.string("subjectId"),
                                   r.string("displayName")};
        }
        case OpKind::RegisterStudent:
            return RegisterStudent{r.string("studentId"), r.string("name"), r.string("program")};
        case OpKind::RegisterCourse:
            return RegisterCourse{r.string("courseId"), r.string("title"), r.string("term"),
                                  r.string("ownerStaffId")};
        case OpKind::UpdateProfile:
            return UpdateProfile{r.string("studentId"), r.string("field"), r.string("value")};
        case OpKind::UpsertGrade: {
            auto score = r.uint("score");
            if (score > 0xffffffffu) throw Error(Errc::MalformedEncoding, "score out of range");
            return UpsertGrade{r.string("studentId"), r.string("courseId"), r.string("term"),
                               static_cast<std::uint32_t>(score), r.string("letter")};
        }
        case OpKind::AttachFile:
            return AttachFile{r.string("studentId"), r.string("courseId"), Hash256::from_bytes(r.hex("cid")),
                              r.uint("size"), r.string("mediaLabel")};
        case OpKind::AuditRepair:
            return AuditRepair{r.string("table"),    r.string("rowKey"),   r.string("field"),
                               r.string("oldValue"), r.string("newValue"), r.string("auditId")};
    }
    throw Error(Errc::MalformedEncoding, "unreachable op kind");
}

}  // namespace educhain::ledger
