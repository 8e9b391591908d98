#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "educhain/ledger/canonical.hpp"
#include "educhain/ledger/digest.hpp"
#include "educhain/ledger/keys.hpp"

namespace educhain::consortium {

// Members are addressed by organization name; the membership list binds
// each name to its consortium key.
struct MemberInfo {
    std::string name;
    ledger::PublicKey key;

    ledger::AccountId account() const { return ledger::AccountId::of(key); }
};

enum class CredentialType : std::uint8_t { Transcript, Diploma };
std::string_view credential_type_name(CredentialType t) noexcept;
std::optional<CredentialType> parse_credential_type(std::string_view name) noexcept;

struct CommitmentRecord {
    std::string subjectId;
    CredentialType credentialType = CredentialType::Transcript;
    std::string period;
    ledger::Hash256 digest;
    std::string issuer;

    ledger::FieldMap fields() const;
    static CommitmentRecord from_fields(const ledger::FieldReader& r);
    friend bool operator==(const CommitmentRecord&, const CommitmentRecord&) = default;
};

struct CommitmentBatch {
    std::string period;
    std::vector<CommitmentRecord> records;
    friend bool operator==(const CommitmentBatch&, const CommitmentBatch&) = default;
};

// The request is signed as part of its entry (submitterSig), and the
// submitter must be the host school.
struct TransferRequest {
    std::string channelId;
    std::string hostSchool;
    std::string homeSchool;
    std::string subjectId;
    std::set<std::string> courseScope;
    friend bool operator==(const TransferRequest&, const TransferRequest&) = default;
};

// status is "ok" when the payload carries the sealed credential, or the
// refusal code (UnknownSubject, ScopeUnavailable) with an empty payload.
struct TransferResponse {
    std::string channelId;
    std::string status = "ok";
    ledger::Hash256 payloadDigest;
    Bytes payload;
    friend bool operator==(const TransferResponse&, const TransferResponse&) = default;
};

using Payload = std::variant<CommitmentBatch, TransferRequest, TransferResponse>;
std::string_view payload_kind(const Payload& p) noexcept;
ledger::FieldMap payload_fields(const Payload& p);
// Throws Error(MalformedPayload).
Payload payload_from_fields(const ledger::FieldReader& r);
// Structural checks that need no log state; returns a reason on failure.
std::optional<std::string> check_payload_shape(const Payload& p);

// What a member hands to the ordering service.
struct Submission {
    std::string submitter;
    Payload payload;
    ledger::Signature submitterSig;

    Bytes signing_bytes() const;
    static Submission make_signed(const ledger::KeyPair& key, std::string submitter, Payload payload);
};

struct ConsortiumEntry {
    std::uint64_t seq = 0;
    std::string submitter;
    Payload payload;
    ledger::Signature submitterSig;
    ledger::Signature orderingSig;

    Bytes submitter_signing_bytes() const;
    // Everything except orderingSig.
    Bytes ordering_signing_bytes() const;
    ledger::FieldMap fields() const;
    Bytes encode() const { return fields().encode(); }
    static ConsortiumEntry decode(ByteView data);
    friend bool operator==(const ConsortiumEntry&, const ConsortiumEntry&) = default;
};

}  // namespace educhain::consortium
