#include <gtest/gtest.h>
#include <sodium.h>

#include <memory>
#include <set>

#include "educhain/gateway/gateway.hpp"
#include "educhain/hub/hub.hpp"
#include "educhain/state/transcript.hpp"
#include "permissions_doc.hpp"
#include "test_support.hpp"

using namespace educhain;
using namespace educhain::gateway;
using ledger::Role;
namespace tu = educhain::testutil;

namespace {

GatewayOptions fast_options() {
    GatewayOptions o;
    o.pwhashOps = crypto_pwhash_OPSLIMIT_MIN;
    o.pwhashMemBytes = crypto_pwhash_MEMLIMIT_MIN;
    return o;
}

// Three department nodes of one university behind a gateway:
// registrar -> n0, cs -> n1, ee -> n2 (also the fallback).
struct Campus {
    std::vector<std::unique_ptr<chain::PrivateNode>> nodes;
    std::set<std::string> down;
    std::uint64_t now = 1'000'000;
    std::unique_ptr<Gateway> gw;
    std::unique_ptr<audit::Auditor> auditor;

    Campus() {
        const char* depts[] = {"registrar", "cs", "ee"};
        for (int i = 0; i < 3; ++i) {
            auto id = "n" + std::to_string(i);
            nodes.push_back(
                std::make_unique<chain::PrivateNode>(id, depts[i], tu::test_config(), tu::key_for("node-" + id)));
        }
        audit::NodeRegistry registry;
        for (auto& n : nodes) {
            registry[n->id()] = n->node_key().public_key();
            n->set_broadcaster([this, self = n.get()](const ledger::Block& b) {
                for (auto& o : nodes)
                    if (o.get() != self) o->import_block(b);
            });
        }
        auditor = std::make_unique<audit::Auditor>(tu::key_for("auditor"), registry);
        RouteTable routes{{{"registrar", "n0"}, {"cs", "n1"}, {"ee", "n2"}}, "n2"};
        gw = std::make_unique<Gateway>(
            routes,
            [this](const std::string& id) -> chain::PrivateNode* {
                if (down.count(id)) return nullptr;
                for (auto& n : nodes)
                    if (n->id() == id) return n.get();
                return nullptr;
            },
            [this] { return now; }, fast_options());
        gw->set_audit({auditor.get(), [this] {
                           std::vector<audit::NodeHandle> h;
                           for (auto& n : nodes) h.push_back({n.get(), !down.count(n->id())});
                           return h;
                       }});
        gw->enroll("reg", "pw-reg", tu::key_for("registrar").public_key(), "registrar");
        gw->enroll("aud", "pw-aud", tu::key_for("auditor").public_key(), "registrar");
    }

    void mine() {
        for (auto& n : nodes)
            while (!n->mempool().empty()) n->produce_block(++now);
    }
    std::size_t pending() const {
        std::size_t total = 0;
        for (const auto& n : nodes) total += n->mempool().size();
        return total;
    }
    Client client(const std::string& label) { return Client(*gw, tu::key_for(label)); }

    // Staff T1 (cs) owning C1, students S1 and S2 (cs) with C1 grades.
    void seed() {
        auto reg = client("registrar");
        ASSERT_EQ(reg.login("reg", "pw-reg").status, 200);
        auto enroll = [&](const std::string& label, Role role, const std::string& subject, const std::string& login) {
            auto r = reg.write("POST", "/accounts", tu::account_op(label, role, subject), ++now,
                               {{"loginId", login}, {"password", "pw-" + login}, {"department", "cs"}});
            ASSERT_EQ(r.status, 200) << r.body.dump();
        };
        enroll("staff-T1", Role::Staff, "T1", "t1");
        enroll("student-S1", Role::Student, "S1", "s1");
        enroll("student-S2", Role::Student, "S2", "s2");
        for (auto [sid, name] : {std::pair{"S1", "Ann"}, std::pair{"S2", "Bo"}}) {
            auto r = reg.write("POST", "/students", ledger::RegisterStudent{sid, name, "CS"}, ++now);
            ASSERT_EQ(r.status, 200) << r.body.dump();
        }
        auto r = reg.write("POST", "/courses", ledger::RegisterCourse{"C1", "Algebra", "2023-Fall", "T1"}, ++now);
        ASSERT_EQ(r.status, 200) << r.body.dump();
        mine();
        auto staff = client("staff-T1");
        ASSERT_EQ(staff.login("t1", "pw-t1").status, 200);
        for (auto [sid, score] : {std::pair{"S1", 91u}, std::pair{"S2", 67u}}) {
            r = staff.write("POST", "/grades", ledger::UpsertGrade{sid, "C1", "2023-Fall", score, "A"}, ++now);
            ASSERT_EQ(r.status, 200) << r.body.dump();
        }
        mine();
    }
};

}  // namespace

TEST(Login, CorrectAndWrongPassword) {
    Campus c;
    auto s = c.gw->login("reg", "pw-reg");
    EXPECT_EQ(s.role, Role::Registrar);
    EXPECT_EQ(s.token.size(), 64u);
    try {
        c.gw->login("reg", "nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::BadCredentials);
    }
    try {
        c.gw->login("nobody", "pw-reg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::BadCredentials);
    }
    auto resp = c.gw->handle({"POST", "/login", {}, {}, {{"accountId", "reg"}, {"password", "x"}}});
    EXPECT_EQ(resp.status, 401);
    EXPECT_EQ(resp.body["error"], "BadCredentials");
}

TEST(Login, LockoutAfterTenFailures) {
    Campus c;
    for (int i = 1; i <= 9; ++i) {
        try {
            c.gw->login("reg", "wrong");
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::BadCredentials) << "attempt " << i;
        }
    }
    try {
        c.gw->login("reg", "wrong");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::AccountLocked);
    }
    try {
        c.gw->login("reg", "pw-reg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::AccountLocked);
    }
    // Other accounts are unaffected.
    EXPECT_EQ(c.gw->login("aud", "pw-aud").role, Role::Auditor);
}

TEST(Login, SuccessResetsFailureCount) {
    Campus c;
    for (int round = 0; round < 3; ++round) {
        for (int i = 0; i < 9; ++i) EXPECT_THROW(c.gw->login("reg", "wrong"), Error);
        EXPECT_NO_THROW(c.gw->login("reg", "pw-reg"));
    }
}

TEST(Session, TokensUniqueAndExpire) {
    Campus c;
    std::set<std::string> tokens;
    for (int i = 0; i < 200; ++i) tokens.insert(c.gw->login("aud", "pw-aud").token);
    EXPECT_EQ(tokens.size(), 200u);

    auto s = c.gw->login("aud", "pw-aud");
    EXPECT_EQ(c.gw->handle({"GET", "/session", {}, s.token, {}}).status, 200);
    c.now = s.expiry;
    auto r = c.gw->handle({"GET", "/session", {}, s.token, {}});
    EXPECT_EQ(r.status, 401);
    EXPECT_EQ(r.body["error"], "Unauthenticated");
    EXPECT_EQ(c.gw->handle({"GET", "/session", {}, std::string(64, 'a'), {}}).status, 401);
}

TEST(Route, MappedFallbackAndUnknown) {
    Campus c;
    auto r = c.gw->route("registrar");
    EXPECT_EQ(r.nodeId, "n0");
    EXPECT_FALSE(r.failover);
    c.down.insert("n0");
    r = c.gw->route("registrar");
    EXPECT_EQ(r.nodeId, "n2");
    EXPECT_TRUE(r.failover);
    try {
        c.gw->route("physics");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoNodeAvailable);
    }
    c.down.insert("n2");
    try {
        c.gw->route("registrar");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NoNodeAvailable);
    }
}

TEST(Endpoints, FailoverFlaggedInResponse) {
    Campus c;
    c.seed();
    auto s1 = c.client("student-S1");
    ASSERT_EQ(s1.login("s1", "pw-s1").status, 200);
    c.down.insert("n1");
    auto r = s1.call("GET", "/grades");
    ASSERT_EQ(r.status, 200);
    EXPECT_EQ(r.body["failover"], true);
    EXPECT_EQ(r.body["nodeId"], "n2");
}

TEST(Endpoints, StaffGradeWriteIncludedWithBlockNumber) {
    Campus c;
    c.seed();
    auto staff = c.client("staff-T1");
    ASSERT_EQ(staff.login("t1", "pw-t1").status, 200);
    auto r = staff.write("POST", "/grades", ledger::UpsertGrade{"S1", "C1", "2023-Fall", 95, "A"}, ++c.now);
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body["status"], "pending");
    auto hash = r.body["txHash"].get<std::string>();
    EXPECT_EQ(staff.call("GET", "/tx/" + hash).body["status"], "pending");
    c.mine();
    auto tx = staff.call("GET", "/tx/" + hash);
    EXPECT_EQ(tx.body["status"], "included");
    auto block = tx.body["blockNumber"].get<std::uint64_t>();
    EXPECT_EQ(block, c.nodes[1]->height());

    auto log = staff.call("GET", "/oplog");
    ASSERT_EQ(log.status, 200);
    const auto& last = log.body["entries"].back();
    EXPECT_EQ(last["txHash"], hash);
    EXPECT_EQ(last["blockNumber"], block);
    EXPECT_EQ(last["opKind"], "UpsertGrade");
    EXPECT_EQ(staff.call("GET", "/tx/" + std::string(64, '0')).status, 404);
}

TEST(Endpoints, StudentGradeWriteNeverReachesChain) {
    Campus c;
    c.seed();
    auto heights = c.nodes[1]->height();
    auto s1 = c.client("student-S1");
    ASSERT_EQ(s1.login("s1", "pw-s1").status, 200);
    auto r = s1.write("POST", "/grades", ledger::UpsertGrade{"S1", "C1", "2023-Fall", 100, "A"}, ++c.now);
    EXPECT_EQ(r.status, 403);
    EXPECT_EQ(r.body["error"], "PermissionDenied");
    EXPECT_EQ(c.pending(), 0u);
    c.mine();
    EXPECT_EQ(c.nodes[1]->height(), heights);
}

TEST(Endpoints, NonceAndSchemaErrors) {
    Campus c;
    c.seed();
    auto staff = c.client("staff-T1");
    ASSERT_EQ(staff.login("t1", "pw-t1").status, 200);
    auto tx = ledger::Transaction::make_signed(tu::key_for("staff-T1"), 0,
                                               ledger::UpsertGrade{"S1", "C1", "2023-Fall", 50, "C"}, ++c.now);
    auto r = staff.call("POST", "/grades", signed_write_body(tx));
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(r.body["error"], "BadNonce");

    r = staff.write("POST", "/grades", ledger::UpsertGrade{"S1", "C1", "2023-Fall", 101, "A"}, ++c.now);
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(r.body["error"], "SchemaViolation");

    auto body = signed_write_body(ledger::Transaction::make_signed(
        tu::key_for("staff-T1"), 2, ledger::UpsertGrade{"S1", "C1", "2023-Fall", 40, "D"}, ++c.now));
    body["score"] = 41;  // no longer matches the signature
    r = staff.call("POST", "/grades", body);
    EXPECT_EQ(r.status, 422);
    EXPECT_EQ(r.body["error"], "BadSignature") << r.body.dump();

    body.erase("letter");
    EXPECT_EQ(staff.call("POST", "/grades", body).status, 422);
    EXPECT_EQ(c.pending(), 0u);
}

TEST(Endpoints, ChainLevelDenialIs403) {
    Campus c;
    c.seed();
    auto s1 = c.client("student-S1");
    ASSERT_EQ(s1.login("s1", "pw-s1").status, 200);
    auto r = s1.write("PUT", "/profile", ledger::UpdateProfile{"S2", "email", "x@y"}, ++c.now);
    EXPECT_EQ(r.status, 403);
    r = s1.write("PUT", "/profile", ledger::UpdateProfile{"S1", "program", "EE"}, ++c.now);
    EXPECT_EQ(r.status, 403);
    r = s1.write("PUT", "/profile", ledger::UpdateProfile{"S1", "email", "ann@uni"}, ++c.now);
    EXPECT_EQ(r.status, 200) << r.body.dump();
    c.mine();
    auto p = s1.call("GET", "/profile");
    ASSERT_EQ(p.body["rows"].size(), 1u);
    EXPECT_EQ(p.body["rows"][0]["email"], "ann@uni");
}

TEST(Endpoints, ReadsAreScoped) {
    Campus c;
    c.seed();
    auto s1 = c.client("student-S1");
    ASSERT_EQ(s1.login("s1", "pw-s1").status, 200);
    auto g = s1.call("GET", "/grades", {}, {{"studentId", "S2"}});
    ASSERT_EQ(g.body["rows"].size(), 1u);
    EXPECT_EQ(g.body["rows"][0]["studentId"], "S1");
    ASSERT_EQ(g.body["summary"].size(), 1u);
    EXPECT_EQ(g.body["summary"][0]["term"], "2023-Fall");
    EXPECT_EQ(g.body["summary"][0]["maxScore"], 91);

    auto reg = c.client("registrar");
    ASSERT_EQ(reg.login("reg", "pw-reg").status, 200);
    g = reg.call("GET", "/grades");
    EXPECT_EQ(g.body["rows"].size(), 2u);
    EXPECT_EQ(g.body["summary"][0]["courses"], 2);
    EXPECT_DOUBLE_EQ(g.body["summary"][0]["meanScore"].get<double>(), 79.0);
    EXPECT_EQ(reg.call("GET", "/profile").body["rows"].size(), 2u);

    auto log = s1.call("GET", "/oplog");
    for (const auto& e : log.body["entries"]) EXPECT_EQ(e["actor"], tu::key_for("student-S1").account().hex());
    auto all = reg.call("GET", "/oplog", {}, {{"offset", "1"}, {"limit", "2"}});
    EXPECT_EQ(all.body["entries"].size(), 2u);
    EXPECT_EQ(all.body["entries"][0]["seq"], c.nodes[0]->database().op_log()[1].seq);
    EXPECT_EQ(reg.call("GET", "/oplog", {}, {{"limit", "x"}}).status, 400);
}

TEST(Endpoints, TranscriptExportRepromptsPassword) {
    Campus c;
    c.seed();
    auto s1 = c.client("student-S1");
    ASSERT_EQ(s1.login("s1", "pw-s1").status, 200);
    auto r = s1.call("POST", "/transcript/export", {{"password", "bad"}, {"courses", {"C1"}}});
    EXPECT_EQ(r.status, 401);
    EXPECT_EQ(r.body["error"], "BadCredentials");
    r = s1.call("POST", "/transcript/export", {{"password", "pw-s1"}, {"courses", {"C1"}}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    auto doc = state::TranscriptDoc::decode(from_hex(r.body["document"].get<std::string>()));
    EXPECT_TRUE(doc.digest_valid());
    EXPECT_EQ(doc.studentId, "S1");
    EXPECT_EQ(doc.rows.at(0).score, 91u);
    EXPECT_EQ(r.body["digest"], doc.digest.hex());
    r = s1.call("POST", "/transcript/export", {{"password", "pw-s1"}, {"courses", {"C9"}}});
    EXPECT_EQ(r.body["error"], "MissingGrade");
}

TEST(Endpoints, AttachmentStoredAndRetrievable) {
    Campus c;
    c.seed();
    auto staff = c.client("staff-T1");
    ASSERT_EQ(staff.login("t1", "pw-t1").status, 200);
    std::string content = "lab report";
    auto cid = ledger::digest_sha256(content);
    ledger::AttachFile op{"S1", "C1", cid, content.size(), "text/plain"};
    auto r = staff.write("POST", "/attachments", op, ++c.now, {{"content", to_hex(as_bytes("tampered"))}});
    EXPECT_EQ(r.status, 422);
    r = staff.write("POST", "/attachments", op, ++c.now, {{"content", to_hex(as_bytes(content))}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    c.mine();
    auto got = staff.call("GET", "/content/" + cid.hex());
    ASSERT_EQ(got.status, 200);
    EXPECT_EQ(got.body["content"], to_hex(as_bytes(content)));
    auto grades = staff.call("GET", "/grades");
    EXPECT_EQ(grades.body["rows"][0]["attachmentCid"], cid.hex());
}

TEST(Endpoints, AuditRunAndReports) {
    Campus c;
    c.seed();
    c.nodes[2]->database().write_direct(state::TableId::Grades, state::RowKey{"S2", "C1", "2023-Fall"}, "score", "99");
    auto aud = c.client("auditor");
    ASSERT_EQ(aud.login("aud", "pw-aud").status, 200);
    auto r = aud.call("POST", "/audit/run", {{"tables", {"grades"}}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const auto& rep = r.body["reports"][0];
    EXPECT_EQ(rep["divergentNodes"], json::array({"n2"}));
    EXPECT_EQ(rep["localizedRows"]["n2"][0]["rowKey"], "S2/C1/2023-Fall");
    EXPECT_EQ(aud.call("GET", "/audit/reports").body["reports"].size(), 1u);
}

TEST(Verify, PublishedCredentialVerifiesAndPerturbationsDoNot) {
    Campus c;
    c.seed();
    consortium::Membership members{{"U1", tu::key_for("member-U1").public_key()},
                                   {"MINISTRY", tu::key_for("member-MINISTRY").public_key()}};
    consortium::OrderingService ordering(tu::key_for("ordering"), members);
    consortium::Member u1("U1", ordering.public_key(), members), ministry("MINISTRY", ordering.public_key(), members);
    ordering.set_delivery([&](const consortium::ConsortiumEntry& e) {
        u1.receive(e);
        ministry.receive(e);
    });
    hub::HubNode hub("U1", tu::key_for("member-U1"), *c.nodes[0], u1,
                     [&](const consortium::Submission& s) { return ordering.submit(s); });
    auto creds = hub.snapshot_credentials("2023-Fall");
    ASSERT_EQ(creds.size(), 2u);
    hub.publish_commitments("2023-Fall", 1, creds);
    c.gw->set_verifier(&ministry);

    for (const auto& cred : creds) {
        auto fields = ledger::credential_fields_to_json(cred.fields);
        auto r = c.gw->handle({"POST", "/verify", {}, {}, {{"credential", fields}}});
        ASSERT_EQ(r.status, 200);
        EXPECT_EQ(r.body["status"], "Verified");
        EXPECT_EQ(r.body["issuer"], "U1");
        EXPECT_EQ(r.body["seq"], 0);
        for (const auto& [name, value] : fields.items()) {
            auto changed = fields;
            auto v = value.get<std::string>();
            changed[name] = v.empty() ? "x" : (std::isdigit(static_cast<unsigned char>(v.back()))
                                                   ? v.substr(0, v.size() - 1) + char('0' + (v.back() - '0' + 1) % 10)
                                                   : v + "x");
            auto bad = c.gw->handle({"POST", "/verify", {}, {}, {{"credential", changed}}});
            EXPECT_EQ(bad.body.value("status", bad.body.value("error", "")), "NotFound") << name;
        }
    }
    auto noType = ledger::credential_fields_to_json(creds[0].fields);
    noType.erase("issuer");
    EXPECT_EQ(c.gw->handle({"POST", "/verify", {}, {}, {{"credential", noType}}}).status, 422);
}

TEST(Permissions, CodeMatchesDocumentedTable) {
    auto doc = tu::load_permission_doc(EDUCHAIN_DOCS_DIR "/permissions.md");
    const auto& code = endpoint_policies();
    ASSERT_EQ(doc.size(), code.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        EXPECT_EQ(doc[i].method, code[i].method);
        EXPECT_EQ(doc[i].path, code[i].path);
        EXPECT_EQ(doc[i].allowed, code[i].allowed) << code[i].method << " " << code[i].path;
    }
}

TEST(Permissions, ExhaustiveMatrixAgainstLiveGateway) {
    Campus c;
    c.seed();
    std::map<Principal, std::string> tokens{{Principal::Anonymous, ""}};
    tokens[Principal::Student] = c.gw->login("s1", "pw-s1").token;
    tokens[Principal::Staff] = c.gw->login("t1", "pw-t1").token;
    tokens[Principal::Registrar] = c.gw->login("reg", "pw-reg").token;
    tokens[Principal::Auditor] = c.gw->login("aud", "pw-aud").token;
    auto doc = tu::load_permission_doc(EDUCHAIN_DOCS_DIR "/permissions.md");

    std::size_t checked = 0;
    for (auto who : {Principal::Anonymous, Principal::Student, Principal::Staff, Principal::Registrar,
                     Principal::Auditor}) {
        std::vector<tu::DocumentedPolicy> order = doc;
        std::stable_partition(order.begin(), order.end(), [](const auto& p) { return p.path != "/logout"; });
        for (const auto& p : order) {
            auto path = p.path;
            if (auto b = path.find('{'); b != std::string::npos) path = path.substr(0, b) + std::string(64, '0');
            auto r = c.gw->handle({p.method, path, {}, tokens[who], json::object()});
            bool allowed = p.allowed[static_cast<std::size_t>(who)];
            if (allowed) {
                EXPECT_NE(r.status, 401) << principal_name(who) << " " << p.method << " " << p.path << r.body.dump();
                EXPECT_NE(r.status, 403) << principal_name(who) << " " << p.method << " " << p.path;
            } else {
                EXPECT_EQ(r.status, who == Principal::Anonymous ? 401 : 403)
                    << principal_name(who) << " " << p.method << " " << p.path;
            }
            ++checked;
        }
    }
    EXPECT_EQ(checked, doc.size() * kPrincipalCount);
    EXPECT_EQ(c.pending(), 0u);
}
