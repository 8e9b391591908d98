#include "educhain/chain/chain_state.hpp"

namespace educhain::chain {

using ledger::Role;

namespace {

bool is_contact_field(const std::string& f) { return f == "telephone" || f == "email" || f == "address"; }

void register_account(std::map<ledger::AccountId, AccountInfo>& accounts, const ledger::RegisterAccount& reg) {
    accounts[ledger::AccountId::of(reg.accountKey)] = {reg.accountKey, reg.role, reg.subjectId, reg.displayName};
}

}  // namespace

ChainState::ChainState(const ledger::ChainConfig& config) {
    for (const auto& acct : config.genesisAccounts) register_account(accounts_, acct);
}

const AccountInfo* ChainState::account(const ledger::AccountId& id) const {
    auto it = accounts_.find(id);
    return it == accounts_.end() ? nullptr : &it->second;
}

std::optional<ledger::PublicKey> ChainState::key_of(const ledger::AccountId& id) const {
    if (const auto* a = account(id)) return a->key;
    return std::nullopt;
}

std::uint64_t ChainState::nonce(const ledger::AccountId& id) const {
    auto it = nonces_.find(id);
    return it == nonces_.end() ? 0 : it->second;
}

std::optional<std::string> ChainState::course_owner(const std::string& courseId) const {
    auto it = courseOwners_.find(courseId);
    if (it == courseOwners_.end()) return std::nullopt;
    return it->second;
}

std::optional<TxRejection> ChainState::check(const ledger::Transaction& tx, bool verify_signature) const {
    const auto* acct = account(tx.sender);
    if (!acct) return TxRejection{Errc::UnknownAccount, "sender " + tx.sender.short_hex() + " is not registered"};
    if (verify_signature && !tx.signature_valid(acct->key)) return TxRejection{Errc::BadSignature, "signature"};
    if (auto expected = nonce(tx.sender); tx.nonce != expected)
        return TxRejection{Errc::BadNonce,
                           "expected nonce " + std::to_string(expected) + ", got " + std::to_string(tx.nonce)};
    if (auto why = ledger::check_op_shape(tx.op)) return TxRejection{Errc::SchemaViolation, *why};
    if (const auto* reg = std::get_if<ledger::RegisterAccount>(&tx.op);
        reg && account(ledger::AccountId::of(reg->accountKey)))
        return TxRejection{Errc::SchemaViolation, "account already registered"};
    if (auto d = check_permission(*this, tx.sender, tx.op); !d) return TxRejection{Errc::PermissionDenied, d.reason};
    return std::nullopt;
}

void ChainState::apply(const ledger::Transaction& tx) {
    nonces_[tx.sender] = tx.nonce + 1;
    if (const auto* reg = std::get_if<ledger::RegisterAccount>(&tx.op)) register_account(accounts_, *reg);
    else if (const auto* course = std::get_if<ledger::RegisterCourse>(&tx.op))
        courseOwners_[course->courseId] = course->ownerStaffId;
}

Decision check_permission(const ChainState& state, const ledger::AccountId& actor, const ledger::RecordOp& op) {
    const auto* acct = state.account(actor);
    if (!acct) throw Error(Errc::UnknownAccount, actor.short_hex());
    const Role role = acct->role;
    auto name = std::string(ledger::role_name(role));
    auto kind = std::string(ledger::op_kind_name(ledger::kind_of(op)));

    auto owns_course = [&](const std::string& courseId) {
        auto owner = state.course_owner(courseId);
        if (role == Role::Staff && owner && *owner == acct->subjectId) return Decision::allow();
        return Decision::deny(name + " " + acct->subjectId + " does not own course " + courseId);
    };

    return std::visit(
        [&](const auto& o) -> Decision {
            using T = std::decay_t<decltype(o)>;
            if constexpr (std::is_same_v<T, ledger::RegisterAccount> || std::is_same_v<T, ledger::RegisterStudent> ||
                          std::is_same_v<T, ledger::RegisterCourse>) {
                return role == Role::Registrar ? Decision::allow() : Decision::deny(name + " may not " + kind);
            } else if constexpr (std::is_same_v<T, ledger::UpdateProfile>) {
                if (role == Role::Student) {
                    if (o.studentId != acct->subjectId) return Decision::deny("students may edit only their own profile");
                    if (!is_contact_field(o.field)) return Decision::deny("students may not edit " + o.field);
                    return Decision::allow();
                }
                if (role == Role::Registrar) {
                    if (is_contact_field(o.field)) return Decision::deny("contact fields belong to the student");
                    return Decision::allow();
                }
                return Decision::deny(name + " may not " + kind);
            } else if constexpr (std::is_same_v<T, ledger::UpsertGrade> || std::is_same_v<T, ledger::AttachFile>) {
                if (role != Role::Staff) return Decision::deny(name + " may not " + kind);
                return owns_course(o.courseId);
            } else {
                return role == Role::Auditor ? Decision::allow() : Decision::deny(name + " may not " + kind);
            }
        },
        op);
}

}  // namespace educhain::chain
