#include "educhain/consortium/entry.hpp"

#include "educhain/error.hpp"
#include "educhain/ledger/snapshot.hpp"

namespace educhain::consortium {

using ledger::FieldMap;
using ledger::FieldReader;
using ledger::Hash256;

std::string_view credential_type_name(CredentialType t) noexcept {
    return t == CredentialType::Transcript ? "Transcript" : "Diploma";
}

std::optional<CredentialType> parse_credential_type(std::string_view name) noexcept {
    if (name == "Transcript") return CredentialType::Transcript;
    if (name == "Diploma") return CredentialType::Diploma;
    return std::nullopt;
}

FieldMap CommitmentRecord::fields() const {
    FieldMap m;
    m.set_string("subjectId", subjectId)
        .set_string("credentialType", credential_type_name(credentialType))
        .set_string("period", period)
        .set_hex("digest", digest.view())
        .set_string("issuer", issuer);
    return m;
}

CommitmentRecord CommitmentRecord::from_fields(const FieldReader& r) {
    CommitmentRecord c;
    c.subjectId = r.string("subjectId");
    auto type = parse_credential_type(r.string("credentialType"));
    if (!type) throw Error(Errc::MalformedPayload, "credential type " + r.string("credentialType"));
    c.credentialType = *type;
    c.period = r.string("period");
    c.digest = Hash256::from_bytes(r.hex("digest"));
    c.issuer = r.string("issuer");
    return c;
}

std::string_view payload_kind(const Payload& p) noexcept {
    switch (p.index()) {
        case 0: return "CommitmentBatch";
        case 1: return "TransferRequest";
        default: return "TransferResponse";
    }
}

FieldMap payload_fields(const Payload& p) {
    FieldMap m;
    m.set_string("kind", payload_kind(p));
    if (const auto* b = std::get_if<CommitmentBatch>(&p)) {
        FieldMap records;
        for (std::size_t i = 0; i < b->records.size(); ++i) records.set_map(ledger::index_key(i), b->records[i].fields());
        m.set_string("period", b->period).set_map("records", records);
    } else if (const auto* q = std::get_if<TransferRequest>(&p)) {
        FieldMap scope;
        std::size_t i = 0;
        for (const auto& c : q->courseScope) scope.set_string(ledger::index_key(i++), c);
        m.set_string("channelId", q->channelId)
            .set_string("hostSchool", q->hostSchool)
            .set_string("homeSchool", q->homeSchool)
            .set_string("subjectId", q->subjectId)
            .set_map("courseScope", scope);
    } else {
        const auto& r = std::get<TransferResponse>(p);
        m.set_string("channelId", r.channelId)
            .set_string("status", r.status)
            .set_hex("payloadDigest", r.payloadDigest.view())
            .set_hex("payload", r.payload);
    }
    return m;
}

Payload payload_from_fields(const FieldReader& r) {
    try {
        auto kind = r.string("kind");
        if (kind == "CommitmentBatch") {
            CommitmentBatch b;
            b.period = r.string("period");
            auto records = r.nested("records");
            for (const auto& [idx, enc] : records.fields())
                b.records.push_back(CommitmentRecord::from_fields(FieldReader::decode(enc)));
            return b;
        }
        if (kind == "TransferRequest") {
            TransferRequest q;
            q.channelId = r.string("channelId");
            q.hostSchool = r.string("hostSchool");
            q.homeSchool = r.string("homeSchool");
            q.subjectId = r.string("subjectId");
            auto scope = r.nested("courseScope");
            for (const auto& [idx, v] : scope.fields()) q.courseScope.insert(scope.string(idx));
            return q;
        }
        if (kind == "TransferResponse") {
            TransferResponse s;
            s.channelId = r.string("channelId");
            s.status = r.string("status");
            s.payloadDigest = Hash256::from_bytes(r.hex("payloadDigest"));
            s.payload = r.hex("payload");
            return s;
        }
        throw Error(Errc::MalformedPayload, "unknown payload kind " + kind);
    } catch (const Error& e) {
        if (e.code() == Errc::MalformedPayload) throw;
        throw Error(Errc::MalformedPayload, e.what());
    }
}

std::optional<std::string> check_payload_shape(const Payload& p) {
    if (const auto* b = std::get_if<CommitmentBatch>(&p)) {
        if (b->period.empty()) return "batch without period";
        for (const auto& rec : b->records) {
            if (rec.subjectId.empty()) return "commitment without subject";
            if (rec.period != b->period) return "commitment period differs from batch period";
        }
        return std::nullopt;
    }
    if (const auto* q = std::get_if<TransferRequest>(&p)) {
        if (q->channelId.empty() || q->subjectId.empty()) return "request without channel or subject";
        if (q->hostSchool == q->homeSchool) return "host and home school are the same";
        if (q->courseScope.empty()) return "empty course scope";
        return std::nullopt;
    }
    const auto& r = std::get<TransferResponse>(p);
    if (r.channelId.empty()) return "response without channel";
    if (r.status == "ok" && r.payload.empty()) return "ok response without payload";
    return std::nullopt;
}

namespace {

FieldMap submission_fields(const std::string& submitter, const Payload& payload) {
    FieldMap m;
    m.set_string("submitter", submitter).set_map("payload", payload_fields(payload));
    return m;
}

}  // namespace

Bytes Submission::signing_bytes() const { return submission_fields(submitter, payload).encode(); }

Submission Submission::make_signed(const ledger::KeyPair& key, std::string submitter, Payload payload) {
    Submission s{std::move(submitter), std::move(payload), {}};
    s.submitterSig = key.sign(s.signing_bytes());
    return s;
}

Bytes ConsortiumEntry::submitter_signing_bytes() const { return submission_fields(submitter, payload).encode(); }

Bytes ConsortiumEntry::ordering_signing_bytes() const {
    auto m = submission_fields(submitter, payload);
    m.set_uint("seq", seq).set_hex("submitterSig", submitterSig.view());
    return m.encode();
}

FieldMap ConsortiumEntry::fields() const {
    auto m = submission_fields(submitter, payload);
    m.set_uint("seq", seq).set_hex("submitterSig", submitterSig.view()).set_hex("orderingSig", orderingSig.view());
    return m;
}

ConsortiumEntry ConsortiumEntry::decode(ByteView data) {
    auto r = FieldReader::decode(data);
    ConsortiumEntry e;
    e.seq = r.uint("seq");
    e.submitter = r.string("submitter");
    e.payload = payload_from_fields(r.nested("payload"));
    e.submitterSig = ledger::Signature::from_bytes(r.hex("submitterSig"));
    e.orderingSig = ledger::Signature::from_bytes(r.hex("orderingSig"));
    return e;
}

}  // namespace educhain::consortium
