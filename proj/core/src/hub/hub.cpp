#include "educhain/hub/hub.hpp"

#include "educhain/error.hpp"

namespace educhain::hub {

using consortium::CredentialType;
using ledger::FieldMap;
using state::RowKey;
using state::TableId;

namespace {

FieldMap credential_head(const state::Row& student, const std::string& studentId, const std::string& period,
                         const std::string& issuer, CredentialType type) {
    FieldMap m;
    m.set_string("credentialType", consortium::credential_type_name(type))
        .set_string("studentId", studentId)
        .set_string("name", student.at("name"))
        .set_string("period", period)
        .set_string("issuer", issuer);
    return m;
}

}  // namespace

FieldMap transcript_credential(const state::FinalStateDb& db, const std::string& studentId, const std::string& period,
                               const std::string& issuer) {
    auto student = db.find(TableId::Students, RowKey{studentId});
    if (!student) throw Error(Errc::UnknownSubject, studentId);
    auto m = credential_head(*student, studentId, period, issuer, CredentialType::Transcript);
    const auto& grades = db.table(TableId::Grades);
    for (auto it = grades.lower_bound(RowKey{studentId}); it != grades.end(); ++it) {
        const auto& p = it->first.parts();
        if (p[0] != studentId) break;
        if (p[2] != period) continue;
        auto course = db.find(TableId::Courses, RowKey{p[1]});
        auto prefix = "course." + p[1] + ".";
        m.set_string(prefix + "score", it->second.at("score"))
            .set_string(prefix + "letter", it->second.at("letter"))
            .set_string(prefix + "title", course ? course->at("title") : "");
    }
    return m;
}

FieldMap diploma_credential(const state::FinalStateDb& db, const std::string& studentId, const std::string& period,
                            const std::string& issuer) {
    auto student = db.find(TableId::Students, RowKey{studentId});
    if (!student) throw Error(Errc::UnknownSubject, studentId);
    auto m = credential_head(*student, studentId, period, issuer, CredentialType::Diploma);
    m.set_string("program", student->at("program"));
    return m;
}

HubNode::HubNode(std::string memberName, ledger::KeyPair memberKey, chain::PrivateNode& node,
                 consortium::Member& member, SubmitFn submit)
    : name_(std::move(memberName)), key_(std::move(memberKey)), node_(node), member_(member), submit_(std::move(submit)) {}

std::vector<Credential> HubNode::snapshot_credentials(const std::string& period) const {
    const auto& db = node_.database();
    std::set<std::string> graded;
    for (const auto& [key, row] : db.table(TableId::Grades))
        if (key.parts()[2] == period) graded.insert(key.parts()[0]);

    std::vector<Credential> out;
    auto add = [&](FieldMap fields, const std::string& sid, CredentialType type) {
        consortium::CommitmentRecord rec{sid, type, period, ledger::digest_sha256(fields.encode()), name_};
        out.push_back({std::move(fields), std::move(rec)});
    };
    for (const auto& [key, row] : db.table(TableId::Students)) {
        const auto& sid = key.parts()[0];
        if (graded.count(sid)) add(transcript_credential(db, sid, period, name_), sid, CredentialType::Transcript);
        if (row.at("degreeAwarded") == period)
            add(diploma_credential(db, sid, period, name_), sid, CredentialType::Diploma);
    }
    return out;
}

std::uint64_t HubNode::publish_commitments(const std::string& period, std::uint64_t ordinal,
                                           const std::vector<Credential>& batch) {
    if ((lastPublished_ && ordinal <= *lastPublished_) || member_.has_published(name_, period))
        throw Error(Errc::AlreadyPublished, period);
    consortium::CommitmentBatch b{period, {}};
    for (const auto& c : batch) b.records.push_back(c.record);
    auto result = submit_(consortium::Submission::make_signed(key_, name_, std::move(b)));
    if (!result.accepted()) throw Error(*result.error, result.reason);
    lastPublished_ = ordinal;
    return *result.seq;
}

std::string HubNode::open_transfer(const std::string& homeSchool, const std::string& subjectId,
                                   std::set<std::string> courseScope) {
    auto id = ledger::digest_sha256("channel|" + name_ + "|" + homeSchool + "|" + subjectId + "|" +
                                    std::to_string(channelCounter_++))
                  .hex()
                  .substr(0, 32);
    consortium::TransferRequest req{id, name_, homeSchool, subjectId, std::move(courseScope)};
    auto result = submit_(consortium::Submission::make_signed(key_, name_, std::move(req)));
    if (!result.accepted()) throw Error(*result.error, result.reason);
    return id;
}

std::variant<consortium::Submission, Refusal> HubNode::handle_transfer_request(const consortium::TransferRequest& req) {
    if (req.homeSchool != name_) return Refusal{Errc::WrongResponder, "request addressed to " + req.homeSchool};
    auto requester = member_.key_of(req.hostSchool);
    if (!requester) return Refusal{Errc::UnknownMember, req.hostSchool};

    const auto& db = node_.database();
    consortium::TransferResponse resp;
    resp.channelId = req.channelId;
    auto refuse = [&](Errc code) {
        resp.status = std::string(to_string(code));
        return consortium::Submission::make_signed(key_, name_, resp);
    };
    if (!db.find(TableId::Students, RowKey{req.subjectId})) return refuse(Errc::UnknownSubject);

    // The scope selects one period; the payload is that period's full
    // transcript credential, so it digests to the published commitment.
    std::set<std::string> periods;
    for (const auto& courseId : req.courseScope) {
        const auto& grades = db.table(TableId::Grades);
        auto it = grades.lower_bound(RowKey{req.subjectId, courseId});
        if (it == grades.end() || it->first.parts()[0] != req.subjectId || it->first.parts()[1] != courseId)
            return refuse(Errc::ScopeUnavailable);
        periods.insert(it->first.parts()[2]);
    }
    if (periods.size() != 1) return refuse(Errc::ScopeUnavailable);

    auto plaintext = transcript_credential(db, req.subjectId, *periods.begin(), name_).encode();
    resp.payloadDigest = ledger::digest_sha256(plaintext);
    // Deterministic but secret ephemeral seed: our signature over the channel.
    auto seed = ledger::digest_sha256(key_.sign(as_bytes("seal|" + req.channelId)).view());
    resp.payload = ledger::seal_to(*requester, plaintext, seed);
    return consortium::Submission::make_signed(key_, name_, resp);
}

FieldMap HubNode::receive_transfer(const std::string& channelId) const {
    const auto* ch = member_.channel(channelId);
    if (!ch) throw Error(Errc::UnknownChannel, channelId);
    if (!ch->response) throw Error(Errc::NotFound, "no response yet on " + channelId);
    return open_response(ch->request, *ch->response);
}

FieldMap HubNode::open_response(const consortium::TransferRequest& req, const consortium::TransferResponse& resp) const {
    std::optional<ledger::Hash256> commitment;
    // The period is only known after decryption; peek, then re-check fully.
    if (resp.status == "ok") {
        if (auto plain = key_.open_sealed(resp.payload)) {
            auto fields = ledger::FieldReader::decode(*plain);
            if (fields.has("period"))
                if (auto c = member_.lookup_commitment(req.subjectId, CredentialType::Transcript, fields.string("period"),
                                                       req.homeSchool))
                    commitment = c->record.digest;
        }
    }
    auto plaintext = consortium::accept_transfer(key_, resp, commitment);
    auto reader = ledger::FieldReader::decode(plaintext);
    FieldMap out;
    for (const auto& [name, value] : reader.fields()) out.set_raw(name, value);
    return out;
}

std::size_t HubNode::service_channels() {
    std::size_t answered = 0;
    for (const auto& e : member_.accepted()) {
        const auto* req = std::get_if<consortium::TransferRequest>(&e.payload);
        if (!req || req->homeSchool != name_ || answered_.count(req->channelId)) continue;
        const auto* ch = member_.channel(req->channelId);
        if (ch && ch->response) continue;
        answered_.insert(req->channelId);
        auto r = handle_transfer_request(*req);
        if (auto* sub = std::get_if<consortium::Submission>(&r)) {
            submit_(*sub);
            ++answered;
        }
    }
    return answered;
}

}  // namespace educhain::hub
