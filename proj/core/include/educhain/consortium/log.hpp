#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "educhain/consortium/entry.hpp"
#include "educhain/error.hpp"

namespace educhain::consortium {

using Membership = std::map<std::string, ledger::PublicKey>;

struct OrderingResult {
    std::optional<std::uint64_t> seq;
    std::optional<Errc> error;
    std::string reason;

    bool accepted() const noexcept { return seq.has_value(); }
};

// Single logical sequencer: assigns dense seqs, counter-signs and hands each
// sealed entry to the delivery hook (the transport fans it out to members).
class OrderingService {
public:
    OrderingService(ledger::KeyPair key, Membership members);

    const ledger::PublicKey& public_key() const noexcept { return publicKey_; }
    const Membership& members() const noexcept { return members_; }
    void add_member(const std::string& name, const ledger::PublicKey& key) { members_[name] = key; }

    // Rejects with UnknownMember, BadSignature or MalformedPayload.
    OrderingResult submit(const Submission& submission);
    const std::vector<ConsortiumEntry>& entries() const noexcept { return entries_; }
    void set_delivery(std::function<void(const ConsortiumEntry&)> deliver) { deliver_ = std::move(deliver); }

private:
    ledger::KeyPair key_;
    ledger::PublicKey publicKey_;
    Membership members_;
    std::vector<ConsortiumEntry> entries_;
    std::function<void(const ConsortiumEntry&)> deliver_;
};

enum class EntryFlag {
    BadOrderingSignature,
    BadSubmitterSignature,
    UnknownMember,
    SeqGap,
    MalformedPayload,
    DuplicateCommitment,
    WrongIssuer,
    WrongRequester,
    DuplicateChannel,
    OrphanResponse,
    WrongResponder,
    DuplicateResponse,
};
std::string_view entry_flag_name(EntryFlag f) noexcept;

struct MemberOutcome {
    bool appended = false;
    std::optional<EntryFlag> flag;
    std::string detail;
};

struct FoundCommitment {
    CommitmentRecord record;
    std::uint64_t seq = 0;
};

struct Channel {
    TransferRequest request;
    std::uint64_t requestSeq = 0;
    std::optional<TransferResponse> response;
    std::optional<std::uint64_t> responseSeq;
};

// One member's validated copy of the ordered log.
class Member {
public:
    Member(std::string name, ledger::PublicKey orderingKey, Membership members);

    const std::string& name() const noexcept { return name_; }
    void add_member(const std::string& name, const ledger::PublicKey& key) { members_[name] = key; }
    std::optional<ledger::PublicKey> key_of(const std::string& member) const {
        auto it = members_.find(member);
        if (it == members_.end()) return std::nullopt;
        return it->second;
    }

    // Entries must arrive in seq order; invalid ones are flagged and kept out
    // of the accepted view.
    MemberOutcome receive(const ConsortiumEntry& entry);

    const std::vector<ConsortiumEntry>& accepted() const noexcept { return accepted_; }
    const std::vector<std::pair<std::uint64_t, MemberOutcome>>& flagged() const noexcept { return flagged_; }
    std::uint64_t next_seq() const noexcept { return nextSeq_; }

    std::optional<FoundCommitment> lookup_commitment(const std::string& subjectId, CredentialType type,
                                                     const std::string& period, const std::string& issuer) const;
    std::vector<FoundCommitment> commitments() const;
    const Channel* channel(const std::string& channelId) const;
    // Periods this issuer has already published.
    bool has_published(const std::string& issuer, const std::string& period) const;

private:
    std::optional<std::pair<EntryFlag, std::string>> check(const ConsortiumEntry& e) const;

    std::string name_;
    ledger::PublicKey orderingKey_;
    Membership members_;
    std::uint64_t nextSeq_ = 0;
    std::vector<ConsortiumEntry> accepted_;
    std::vector<std::pair<std::uint64_t, MemberOutcome>> flagged_;
    using CommitmentKey = std::tuple<std::string, CredentialType, std::string, std::string>;
    std::map<CommitmentKey, FoundCommitment> commitments_;
    std::map<std::pair<std::string, std::string>, std::uint64_t> publishedPeriods_;
    std::map<std::string, Channel> channels_;
};

// Requester side of a transfer: opens the sealed payload with the
// requester's key and checks sha256(plaintext) against payloadDigest and,
// when given, the home school's published commitment. Throws
// DecryptionFailed or DigestMismatch.
Bytes accept_transfer(const ledger::KeyPair& requesterKey, const TransferResponse& response,
                      const std::optional<ledger::Hash256>& commitmentDigest);

// Deterministic snapshot of an accepted log.
Bytes save_log_snapshot(const std::vector<ConsortiumEntry>& entries);
std::vector<ConsortiumEntry> load_log_snapshot(ByteView data);

}  // namespace educhain::consortium
