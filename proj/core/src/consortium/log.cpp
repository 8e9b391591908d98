#include "educhain/consortium/log.hpp"

#include "educhain/ledger/snapshot.hpp"

namespace educhain::consortium {

using ledger::FieldMap;
using ledger::FieldReader;

OrderingService::OrderingService(ledger::KeyPair key, Membership members)
    : key_(std::move(key)), publicKey_(key_.public_key()), members_(std::move(members)) {}

OrderingResult OrderingService::submit(const Submission& s) {
    auto it = members_.find(s.submitter);
    if (it == members_.end()) return {std::nullopt, Errc::UnknownMember, s.submitter};
    if (!ledger::verify_signature(it->second, s.signing_bytes(), s.submitterSig))
        return {std::nullopt, Errc::BadSignature, "submitter signature"};
    if (auto why = check_payload_shape(s.payload)) return {std::nullopt, Errc::MalformedPayload, *why};

    ConsortiumEntry e;
    e.seq = entries_.size();
    e.submitter = s.submitter;
    e.payload = s.payload;
    e.submitterSig = s.submitterSig;
    e.orderingSig = key_.sign(e.ordering_signing_bytes());
    entries_.push_back(e);
    if (deliver_) deliver_(entries_.back());
    return {e.seq, std::nullopt, {}};
}

std::string_view entry_flag_name(EntryFlag f) noexcept {
    switch (f) {
        case EntryFlag::BadOrderingSignature: return "BadOrderingSignature";
        case EntryFlag::BadSubmitterSignature: return "BadSubmitterSignature";
        case EntryFlag::UnknownMember: return "UnknownMember";
        case EntryFlag::SeqGap: return "SeqGap";
        case EntryFlag::MalformedPayload: return "MalformedPayload";
        case EntryFlag::DuplicateCommitment: return "DuplicateCommitment";
        case EntryFlag::WrongIssuer: return "WrongIssuer";
        case EntryFlag::WrongRequester: return "WrongRequester";
        case EntryFlag::DuplicateChannel: return "DuplicateChannel";
        case EntryFlag::OrphanResponse: return "OrphanResponse";
        case EntryFlag::WrongResponder: return "WrongResponder";
        case EntryFlag::DuplicateResponse: return "DuplicateResponse";
    }
    return "Unknown";
}

Member::Member(std::string name, ledger::PublicKey orderingKey, Membership members)
    : name_(std::move(name)), orderingKey_(orderingKey), members_(std::move(members)) {}

std::optional<std::pair<EntryFlag, std::string>> Member::check(const ConsortiumEntry& e) const {
    using F = EntryFlag;
    if (e.seq != nextSeq_)
        return std::pair{F::SeqGap, "expected seq " + std::to_string(nextSeq_) + ", got " + std::to_string(e.seq)};
    if (!ledger::verify_signature(orderingKey_, e.ordering_signing_bytes(), e.orderingSig))
        return std::pair{F::BadOrderingSignature, std::string{}};
    auto submitter = members_.find(e.submitter);
    if (submitter == members_.end()) return std::pair{F::UnknownMember, e.submitter};
    if (!ledger::verify_signature(submitter->second, e.submitter_signing_bytes(), e.submitterSig))
        return std::pair{F::BadSubmitterSignature, std::string{}};
    if (auto why = check_payload_shape(e.payload)) return std::pair{F::MalformedPayload, *why};

    if (const auto* b = std::get_if<CommitmentBatch>(&e.payload)) {
        std::set<CommitmentKey> inBatch;
        for (const auto& r : b->records) {
            if (r.issuer != e.submitter) return std::pair{F::WrongIssuer, r.issuer + " via " + e.submitter};
            CommitmentKey k{r.subjectId, r.credentialType, r.period, r.issuer};
            if (commitments_.count(k) || !inBatch.insert(k).second)
                return std::pair{F::DuplicateCommitment, r.subjectId + "/" + r.period};
        }
    } else if (const auto* q = std::get_if<TransferRequest>(&e.payload)) {
        if (q->hostSchool != e.submitter) return std::pair{F::WrongRequester, e.submitter};
        if (!members_.count(q->homeSchool)) return std::pair{F::UnknownMember, q->homeSchool};
        if (channels_.count(q->channelId)) return std::pair{F::DuplicateChannel, q->channelId};
    } else {
        const auto& r = std::get<TransferResponse>(e.payload);
        auto ch = channels_.find(r.channelId);
        if (ch == channels_.end()) return std::pair{F::OrphanResponse, r.channelId};
        if (ch->second.request.homeSchool != e.submitter) return std::pair{F::WrongResponder, e.submitter};
        if (ch->second.response) return std::pair{F::DuplicateResponse, r.channelId};
    }
    return std::nullopt;
}

MemberOutcome Member::receive(const ConsortiumEntry& e) {
    if (auto problem = check(e)) {
        MemberOutcome out{false, problem->first, problem->second};
        // A gap says nothing about the entry itself; keep waiting for the
        // expected seq. Anything else consumes the slot.
        if (problem->first != EntryFlag::SeqGap) ++nextSeq_;
        flagged_.emplace_back(e.seq, out);
        return out;
    }
    ++nextSeq_;
    accepted_.push_back(e);
    if (const auto* b = std::get_if<CommitmentBatch>(&e.payload)) {
        for (const auto& r : b->records)
            commitments_[{r.subjectId, r.credentialType, r.period, r.issuer}] = {r, e.seq};
        publishedPeriods_[{e.submitter, b->period}] = e.seq;
    } else if (const auto* q = std::get_if<TransferRequest>(&e.payload)) {
        channels_[q->channelId] = Channel{*q, e.seq, std::nullopt, std::nullopt};
    } else {
        const auto& r = std::get<TransferResponse>(e.payload);
        auto& ch = channels_.at(r.channelId);
        ch.response = r;
        ch.responseSeq = e.seq;
    }
    return {true, std::nullopt, {}};
}

std::optional<FoundCommitment> Member::lookup_commitment(const std::string& subjectId, CredentialType type,
                                                         const std::string& period, const std::string& issuer) const {
    auto it = commitments_.find({subjectId, type, period, issuer});
    if (it == commitments_.end()) return std::nullopt;
    return it->second;
}

std::vector<FoundCommitment> Member::commitments() const {
    std::vector<FoundCommitment> out;
    for (const auto& [k, v] : commitments_) out.push_back(v);
    return out;
}

const Channel* Member::channel(const std::string& channelId) const {
    auto it = channels_.find(channelId);
    return it == channels_.end() ? nullptr : &it->second;
}

bool Member::has_published(const std::string& issuer, const std::string& period) const {
    return publishedPeriods_.count({issuer, period}) != 0;
}

Bytes accept_transfer(const ledger::KeyPair& requesterKey, const TransferResponse& response,
                      const std::optional<ledger::Hash256>& commitmentDigest) {
    if (response.status != "ok")
        throw Error(parse_errc(response.status).value_or(Errc::ScopeUnavailable), "transfer refused by home school");
    auto plaintext = requesterKey.open_sealed(response.payload);
    if (!plaintext) throw Error(Errc::DecryptionFailed, "payload not sealed to this member");
    auto digest = ledger::digest_sha256(*plaintext);
    if (digest != response.payloadDigest)
        throw Error(Errc::DigestMismatch, "payload digest " + digest.hex() + " != declared " + response.payloadDigest.hex());
    if (commitmentDigest && digest != *commitmentDigest)
        throw Error(Errc::DigestMismatch, "payload digest " + digest.hex() + " != commitment " + commitmentDigest->hex());
    return *std::move(plaintext);
}

Bytes save_log_snapshot(const std::vector<ConsortiumEntry>& entries) {
    FieldMap list;
    for (std::size_t i = 0; i < entries.size(); ++i) list.set_raw(ledger::index_key(i), entries[i].encode());
    FieldMap body;
    body.set_map("entries", list);
    return ledger::wrap_snapshot("consortium-log", body);
}

std::vector<ConsortiumEntry> load_log_snapshot(ByteView data) {
    auto body = ledger::unwrap_snapshot(data, "consortium-log");
    std::vector<ConsortiumEntry> out;
    try {
        auto entries = body.nested("entries");
        for (const auto& [idx, enc] : entries.fields()) out.push_back(ConsortiumEntry::decode(enc));
    } catch (const Error& e) {
        throw Error(Errc::BadSnapshot, e.what());
    }
    return out;
}

}  // namespace educhain::consortium
