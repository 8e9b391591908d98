#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "educhain/chain/private_node.hpp"
#include "educhain/consortium/log.hpp"
#include "educhain/ledger/canonical.hpp"
#include "educhain/state/final_state_db.hpp"

namespace educhain::hub {

// Flat credential map, the byte-exact input to a commitment digest:
//   credentialType, studentId, name, period, issuer
//   Transcript: course.<courseId>.score / .letter / .title per grade in period
//   Diploma:    program
ledger::FieldMap transcript_credential(const state::FinalStateDb& db, const std::string& studentId,
                                       const std::string& period, const std::string& issuer);
ledger::FieldMap diploma_credential(const state::FinalStateDb& db, const std::string& studentId,
                                    const std::string& period, const std::string& issuer);

struct Credential {
    ledger::FieldMap fields;
    consortium::CommitmentRecord record;
};

using SubmitFn = std::function<consortium::OrderingResult(const consortium::Submission&)>;

struct Refusal {
    Errc code;
    std::string reason;
};

// Per-university bridge: reads its own replica, publishes commitments and
// answers transfer requests addressed to its university.
class HubNode {
public:
    HubNode(std::string memberName, ledger::KeyPair memberKey, chain::PrivateNode& node, consortium::Member& member,
            SubmitFn submit);

    const std::string& member_name() const noexcept { return name_; }
    const ledger::KeyPair& member_key() const noexcept { return key_; }
    chain::PrivateNode& node() noexcept { return node_; }
    const consortium::Member& member() const noexcept { return member_; }
    std::optional<std::uint64_t> last_published_ordinal() const noexcept { return lastPublished_; }

    // Transcript per student graded in the period, plus a diploma for every
    // student whose degreeAwarded equals the period. Sorted by studentId.
    std::vector<Credential> snapshot_credentials(const std::string& period) const;

    // One batch per period. `ordinal` orders periods on the harness clock.
    // Throws AlreadyPublished, or the ordering service's rejection code.
    std::uint64_t publish_commitments(const std::string& period, std::uint64_t ordinal,
                                      const std::vector<Credential>& batch);

    // Host side: build and submit a request; returns the channel id.
    std::string open_transfer(const std::string& homeSchool, const std::string& subjectId,
                              std::set<std::string> courseScope);
    // Home side: the response submission for a request on the log, or a
    // refusal when the request is not ours to answer. Refusals for our own
    // students (unknown subject, missing grades) are answered on the channel.
    std::variant<consortium::Submission, Refusal> handle_transfer_request(const consortium::TransferRequest& req);
    // Host side: decrypt, check digests against payloadDigest and any
    // published commitment. Throws DigestMismatch / DecryptionFailed /
    // UnknownChannel / refusal code.
    ledger::FieldMap receive_transfer(const std::string& channelId) const;

    // Answers every unanswered request addressed to us on the accepted log.
    std::size_t service_channels();

    // Same checks on a response object directly (used to inspect a payload
    // as delivered, before or without log acceptance).
    ledger::FieldMap open_response(const consortium::TransferRequest& req,
                                   const consortium::TransferResponse& resp) const;

private:
    std::string name_;
    ledger::KeyPair key_;
    chain::PrivateNode& node_;
    consortium::Member& member_;
    SubmitFn submit_;
    std::optional<std::uint64_t> lastPublished_;
    std::uint64_t channelCounter_ = 0;
    std::set<std::string> answered_;
};

}  // namespace educhain::hub
