#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "educhain/error.hpp"
#include "educhain/ledger/block.hpp"
#include "educhain/ledger/record_op.hpp"
#include "educhain/ledger/transaction.hpp"

namespace educhain::chain {

struct AccountInfo {
    ledger::PublicKey key;
    ledger::Role role = ledger::Role::Student;
    std::string subjectId;  // studentId for students, staffId for staff
    std::string displayName;
};

struct Decision {
    bool allowed = true;
    std::string reason;

    static Decision allow() { return {}; }
    static Decision deny(std::string why) { return {false, std::move(why)}; }
    explicit operator bool() const noexcept { return allowed; }
};

struct TxRejection {
    Errc code;
    std::string reason;
};

// Account registry, nonces and course ownership as of some block: the part
// of chain state needed to decide whether a transaction is admissible.
class ChainState {
public:
    ChainState() = default;
    explicit ChainState(const ledger::ChainConfig& config);

    const AccountInfo* account(const ledger::AccountId& id) const;
    std::optional<ledger::PublicKey> key_of(const ledger::AccountId& id) const;
    std::uint64_t nonce(const ledger::AccountId& id) const;
    std::optional<std::string> course_owner(const std::string& courseId) const;
    const std::map<ledger::AccountId, AccountInfo>& accounts() const noexcept { return accounts_; }

    // Signature (optional), registration, nonce, shape and permission, in
    // that order.
    std::optional<TxRejection> check(const ledger::Transaction& tx, bool verify_signature = true) const;
    // Advances the sender's nonce and records registrations and ownership.
    // Does not check; callers run check() first.
    void apply(const ledger::Transaction& tx);

private:
    std::map<ledger::AccountId, AccountInfo> accounts_;
    std::map<ledger::AccountId, std::uint64_t> nonces_;
    std::map<std::string, std::string> courseOwners_;
};

// Role x operation table with ownership sub-checks:
//   Registrar: RegisterAccount, RegisterStudent, RegisterCourse,
//              UpdateProfile of name/program/degreeAwarded
//   Student:   UpdateProfile of telephone/email/address on their own row
//   Staff:     UpsertGrade, AttachFile on courses they own
//   Auditor:   AuditRepair
// Everything else is denied. Throws Error(UnknownAccount).
Decision check_permission(const ChainState& state, const ledger::AccountId& actor, const ledger::RecordOp& op);

}  // namespace educhain::chain
