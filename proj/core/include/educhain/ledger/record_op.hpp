#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "educhain/ledger/canonical.hpp"
#include "educhain/ledger/digest.hpp"
#include "educhain/ledger/keys.hpp"

namespace educhain::ledger {

enum class Role : std::uint8_t { Student, Staff, Registrar, Auditor };

std::string_view role_name(Role role) noexcept;
std::optional<Role> parse_role(std::string_view name) noexcept;

// Binds a public key to a role and to the student/staff id it acts for.
// Registrar-only; genesis carries the bootstrap set.
struct RegisterAccount {
    PublicKey accountKey;
    Role role = Role::Student;
    std::string subjectId;
    std::string displayName;
    friend bool operator==(const RegisterAccount&, const RegisterAccount&) = default;
};

struct RegisterStudent {
    std::string studentId;
    std::string name;
    std::string program;
    friend bool operator==(const RegisterStudent&, const RegisterStudent&) = default;
};

struct RegisterCourse {
    std::string courseId;
    std::string title;
    std::string term;
    std::string ownerStaffId;
    friend bool operator==(const RegisterCourse&, const RegisterCourse&) = default;
};

struct UpdateProfile {
    std::string studentId;
    std::string field;
    std::string value;
    friend bool operator==(const UpdateProfile&, const UpdateProfile&) = default;
};

struct UpsertGrade {
    std::string studentId;
    std::string courseId;
    std::string term;
    std::uint32_t score = 0;
    std::string letter;
    friend bool operator==(const UpsertGrade&, const UpsertGrade&) = default;
};

struct AttachFile {
    std::string studentId;
    std::string courseId;
    Hash256 cid;
    std::uint64_t size = 0;
    std::string mediaLabel;
    friend bool operator==(const AttachFile&, const AttachFile&) = default;
};

// Record of a consistency-audit fix. `field` is a single column name, or "*"
// when the whole row was replaced; in that case old/new values are the hex
// canonical row encodings ("" for an absent row).
struct AuditRepair {
    std::string table;
    std::string rowKey;
    std::string field;
    std::string oldValue;
    std::string newValue;
    std::string auditId;
    friend bool operator==(const AuditRepair&, const AuditRepair&) = default;
};

using RecordOp = std::variant<RegisterAccount, RegisterStudent, RegisterCourse, UpdateProfile, UpsertGrade,
                              AttachFile, AuditRepair>;

enum class OpKind : std::uint8_t {
    RegisterAccount,
    RegisterStudent,
    RegisterCourse,
    UpdateProfile,
    UpsertGrade,
    AttachFile,
    AuditRepair,
};

inline OpKind kind_of(const RecordOp& op) noexcept { return static_cast<OpKind>(op.index()); }
std::string_view op_kind_name(OpKind kind) noexcept;
std::optional<OpKind> parse_op_kind(std::string_view name) noexcept;

// Students-table columns a profile update may target.
bool is_profile_field(std::string_view field) noexcept;

// Shape checks that do not need chain state: non-empty ids without '/',
// score in 0..100, profile field names from the schema. Returns a reason on
// failure.
std::optional<std::string> check_op_shape(const RecordOp& op);

FieldMap op_fields(const RecordOp& op);
Bytes encode_op(const RecordOp& op);
// Throws Error(MalformedEncoding) on unknown kinds or missing fields.
RecordOp op_from_fields(const FieldReader& reader);

}  // namespace educhain::ledger
