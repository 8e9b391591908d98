#include <gtest/gtest.h>

#include <memory>

#include "educhain/consortium/log.hpp"
#include "educhain/hub/hub.hpp"
#include "test_support.hpp"

using namespace educhain;
using namespace educhain::consortium;
using ledger::Role;
using ledger::Transaction;
namespace tu = educhain::testutil;

namespace {

// Ordering service plus one validating member per organization, delivered
// synchronously.
struct Consortium {
    std::vector<std::string> names{"U1", "U2", "MINISTRY"};
    OrderingService ordering{tu::key_for("ordering"), membership()};
    std::map<std::string, std::unique_ptr<Member>> members;

    Consortium() {
        for (const auto& n : names)
            members[n] = std::make_unique<Member>(n, ordering.public_key(), membership());
        ordering.set_delivery([this](const ConsortiumEntry& e) {
            for (auto& [n, m] : members) m->receive(e);
        });
    }
    Membership membership() const {
        Membership m;
        for (const auto& n : names) m[n] = tu::key_for("member-" + n).public_key();
        return m;
    }
    Submission signed_by(const std::string& n, Payload p) {
        return Submission::make_signed(tu::key_for("member-" + n), n, std::move(p));
    }
    OrderingResult submit(const Submission& s) { return ordering.submit(s); }
};

CommitmentRecord record(const std::string& sid, const std::string& period, const std::string& issuer) {
    return {sid, CredentialType::Transcript, period, ledger::digest_sha256(sid + period), issuer};
}

}  // namespace

TEST(Ordering, AssignsDenseSeqsAndRejectsStrangers) {
    Consortium c;
    auto r0 = c.submit(c.signed_by("U1", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U1")}}));
    auto r1 = c.submit(c.signed_by("U2", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U2")}}));
    EXPECT_EQ(r0.seq, 0u);
    EXPECT_EQ(r1.seq, 1u);

    auto stranger = Submission::make_signed(tu::key_for("nobody"), "U9", CommitmentBatch{"P", {}});
    EXPECT_EQ(c.submit(stranger).error, Errc::UnknownMember);
    auto forged = c.signed_by("U1", CommitmentBatch{"P", {}});
    forged.submitter = "U2";
    EXPECT_EQ(c.submit(forged).error, Errc::BadSignature);
    EXPECT_EQ(c.submit(c.signed_by("U1", CommitmentBatch{"", {}})).error, Errc::MalformedPayload);

    auto snap = save_log_snapshot(c.members["U1"]->accepted());
    for (const auto& [n, m] : c.members) EXPECT_EQ(save_log_snapshot(m->accepted()), snap);
    EXPECT_EQ(load_log_snapshot(snap), c.members["U1"]->accepted());
}

TEST(Member, FlagsInvalidEntries) {
    Consortium c;
    c.submit(c.signed_by("U1", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U1")}}));
    c.submit(c.signed_by("U1", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U1")}}));
    c.submit(c.signed_by("U1", TransferResponse{"no-such-channel", "ok", {}, {1}}));
    const auto& flagged = c.members["U2"]->flagged();
    ASSERT_EQ(flagged.size(), 2u);
    EXPECT_EQ(flagged[0].second.flag, EntryFlag::DuplicateCommitment);
    EXPECT_EQ(flagged[1].second.flag, EntryFlag::OrphanResponse);
    EXPECT_EQ(c.members["U2"]->accepted().size(), 1u);

    // Tampered delivery fails the ordering signature.
    Member fresh("X", c.ordering.public_key(), c.membership());
    auto e = c.ordering.entries()[0];
    std::get<CommitmentBatch>(e.payload).records[0].digest = ledger::digest_sha256("evil");
    EXPECT_EQ(fresh.receive(e).flag, EntryFlag::BadOrderingSignature);
}

TEST(Member, LookupCommitment) {
    Consortium c;
    c.submit(c.signed_by("U1", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U1")}}));
    c.submit(c.signed_by("U2", CommitmentBatch{"2023-Fall", {record("S1", "2023-Fall", "U2")}}));
    const auto& m = *c.members["MINISTRY"];
    auto found = m.lookup_commitment("S1", CredentialType::Transcript, "2023-Fall", "U1");
    ASSERT_TRUE(found);
    EXPECT_EQ(found->record.digest, ledger::digest_sha256("S12023-Fall"));
    EXPECT_EQ(found->seq, 0u);
    EXPECT_FALSE(m.lookup_commitment("S1", CredentialType::Transcript, "2024-Fall", "U1"));
    EXPECT_TRUE(m.lookup_commitment("S1", CredentialType::Transcript, "2023-Fall", "U2"));
}

TEST(Member, TransferChannelRules) {
    Consortium c;
    c.submit(c.signed_by("U2", TransferRequest{"ch1", "U2", "U1", "S1", {"C1"}}));
    c.submit(c.signed_by("MINISTRY", TransferResponse{"ch1", "ok", {}, {1}}));
    EXPECT_EQ(c.members["U2"]->flagged().back().second.flag, EntryFlag::WrongResponder);
    c.submit(c.signed_by("U1", TransferResponse{"ch1", "ok", {}, {1}}));
    EXPECT_TRUE(c.members["U2"]->channel("ch1")->response.has_value());
}

TEST(Transfer, SealedPayloadDigestContract) {
    auto requester = tu::key_for("member-U2");
    Bytes plain = to_bytes("course.C1.score=91");
    TransferResponse r{"ch", "ok", ledger::digest_sha256(plain), ledger::seal_to(requester.public_key(), plain)};
    EXPECT_EQ(accept_transfer(requester, r, ledger::digest_sha256(plain)), plain);

    // Someone else cannot read it.
    try {
        accept_transfer(tu::key_for("member-U3"), r, std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DecryptionFailed);
    }
    // In-flight substitution with a different sealed transcript.
    auto tampered = r;
    tampered.payload = ledger::seal_to(requester.public_key(), to_bytes("course.C1.score=99"));
    try {
        accept_transfer(requester, tampered, std::nullopt);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DigestMismatch);
    }
    // Declared digest rewritten too: the commitment still catches it.
    tampered.payloadDigest = ledger::digest_sha256(to_bytes("course.C1.score=99"));
    EXPECT_NO_THROW(accept_transfer(requester, tampered, std::nullopt));
    try {
        accept_transfer(requester, tampered, ledger::digest_sha256(plain));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DigestMismatch);
    }
}

namespace {

// University U1: one department node feeding a hub replica.
struct University {
    Consortium& consortium;
    chain::PrivateNode dept{"d1", "cs", tu::test_config(), tu::key_for("node-d1")};
    chain::PrivateNode hubNode{"hub", "hub", tu::test_config(), tu::key_for("node-hub"),
                               chain::NodeOptions{8192, 256, false}};
    hub::HubNode hub;
    std::map<std::string, std::uint64_t> nonces;

    University(Consortium& c, const std::string& name)
        : consortium(c),
          hub(name, tu::key_for("member-" + name), hubNode, *c.members.at(name),
              [&c](const Submission& s) { return c.submit(s); }) {
        dept.set_broadcaster([this](const ledger::Block& b) { hubNode.import_block(b); });
    }

    void run(const std::string& label, ledger::RecordOp op) {
        auto tx = Transaction::make_signed(tu::key_for(label), nonces[label]++, std::move(op), 100);
        auto r = dept.submit_transaction(tx);
        ASSERT_TRUE(r.accepted) << r.reason;
    }
    void mine() { dept.produce_block(200); }

    void seed_students(int n) {
        run("registrar", tu::account_op("staff-T1", Role::Staff, "T1"));
        run("registrar", ledger::RegisterCourse{"C1", "Algebra", "2023-Fall", "T1"});
        run("registrar", ledger::RegisterCourse{"C2", "Biology", "2023-Fall", "T1"});
        run("registrar", ledger::RegisterCourse{"SUM1", "Summer Lab", "2023-Summer", "T1"});
        for (int i = 0; i < n; ++i) run("registrar", ledger::RegisterStudent{"S" + std::to_string(i), "Stu", "CS"});
        mine();
        for (int i = 0; i < n; ++i) {
            auto sid = "S" + std::to_string(i);
            run("staff-T1", ledger::UpsertGrade{sid, "C1", "2023-Fall", static_cast<std::uint32_t>(60 + i), "B"});
            run("staff-T1", ledger::UpsertGrade{sid, "C2", "2023-Fall", static_cast<std::uint32_t>(70 + i), "B"});
        }
        run("staff-T1", ledger::UpsertGrade{"S0", "SUM1", "2023-Summer", 88, "A"});
        mine();
    }
};

}  // namespace

TEST(Hub, SnapshotPublishLookup) {
    Consortium c;
    University u(c, "U1");
    EXPECT_TRUE(u.hub.snapshot_credentials("2023-Fall").empty());
    u.seed_students(2);
    auto creds = u.hub.snapshot_credentials("2023-Fall");
    ASSERT_EQ(creds.size(), 2u);
    EXPECT_EQ(creds[0].record.digest, u.hub.snapshot_credentials("2023-Fall")[0].record.digest);
    EXPECT_EQ(creds[0].record.digest, ledger::digest_sha256(creds[0].fields.encode()));
    EXPECT_TRUE(u.hub.snapshot_credentials("2030-Fall").empty());

    auto seq = u.hub.publish_commitments("2023-Fall", 1, creds);
    EXPECT_EQ(seq, 0u);
    try {
        u.hub.publish_commitments("2023-Fall", 1, creds);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::AlreadyPublished);
    }
    for (const auto& cr : creds) {
        auto found = c.members["MINISTRY"]->lookup_commitment(cr.record.subjectId, CredentialType::Transcript,
                                                             "2023-Fall", "U1");
        ASSERT_TRUE(found);
        EXPECT_EQ(found->record.digest, cr.record.digest);
    }
}

TEST(Hub, DiplomaOnlyWhenAwarded) {
    Consortium c;
    University u(c, "U1");
    u.seed_students(2);
    u.run("registrar", ledger::UpdateProfile{"S1", "degreeAwarded", "2023-Fall"});
    u.mine();
    auto creds = u.hub.snapshot_credentials("2023-Fall");
    ASSERT_EQ(creds.size(), 3u);
    EXPECT_EQ(creds[2].record.credentialType, CredentialType::Diploma);
    EXPECT_EQ(creds[2].record.subjectId, "S1");
}

TEST(Hub, TransferRoundTrip) {
    Consortium c;
    University home(c, "U1");
    University host(c, "U2");
    home.seed_students(2);
    home.hub.publish_commitments("2023-Summer", 1, home.hub.snapshot_credentials("2023-Summer"));

    auto ch = host.hub.open_transfer("U1", "S0", {"SUM1"});
    EXPECT_EQ(home.hub.service_channels(), 1u);
    auto fields = host.hub.receive_transfer(ch);
    auto commitment = c.members["U2"]->lookup_commitment("S0", CredentialType::Transcript, "2023-Summer", "U1");
    ASSERT_TRUE(commitment);
    EXPECT_EQ(ledger::digest_sha256(fields.encode()), commitment->record.digest);
    EXPECT_EQ(c.members["U2"]->channel(ch)->response->payloadDigest, commitment->record.digest);

    // Untaken course and unknown student are answered with refusals.
    auto ch2 = host.hub.open_transfer("U1", "S1", {"SUM1"});
    auto ch3 = host.hub.open_transfer("U1", "S404", {"C1"});
    home.hub.service_channels();
    try {
        host.hub.receive_transfer(ch2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ScopeUnavailable);
    }
    try {
        host.hub.receive_transfer(ch3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UnknownSubject);
    }

    // Requests for another school are refused locally.
    TransferRequest wrong{"x", "U2", "MINISTRY", "S0", {"SUM1"}};
    auto r = home.hub.handle_transfer_request(wrong);
    ASSERT_TRUE(std::holds_alternative<hub::Refusal>(r));
}

TEST(Hub, HubNodeRefusesUserTransactions) {
    Consortium c;
    University u(c, "U1");
    auto tx = Transaction::make_signed(tu::key_for("registrar"), 0, ledger::RegisterStudent{"S1", "a", "b"}, 1);
    EXPECT_EQ(u.hubNode.submit_transaction(tx).error, Errc::NotAcceptingTransactions);
}
