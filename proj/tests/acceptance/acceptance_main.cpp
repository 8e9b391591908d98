// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "educhain/audit/audit.hpp"
#include "educhain/chain/replay.hpp"
#include "educhain/error.hpp"
#include "educhain/gateway/gateway.hpp"
#include "educhain/harness/scenario.hpp"
#include "educhain/harness/testbed.hpp"
#include "educhain/state/checksum.hpp"
#include "permissions_doc.hpp"

namespace {

using namespace educhain;
using harness::json;
using harness::Testbed;

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Prepared {
    harness::ScenarioScript script;
    std::unique_ptr<Testbed> tb;
};

// Builds the network described by `yaml` and runs its steps as setup.
Prepared prepare(const std::string& yaml) {
    Prepared p{harness::parse_scenario(yaml), nullptr};
    p.tb = std::make_unique<Testbed>(p.script.network);
    harness::require_passed(harness::run_scenario(*p.tb, p.script));
    return p;
}

std::vector<std::filesystem::path> bundled_scenarios() {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(EDUCHAIN_SCENARIO_DIR))
        if (e.path().extension() == ".yaml") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t count_txs(const chain::PrivateNode& n, const std::function<bool(const ledger::Transaction&)>& pred) {
    std::size_t count = 0;
    for (const auto& b : n.chain())
        for (const auto& tx : b.txs)
            if (pred(tx)) ++count;
    return count;
}

std::size_t count_ops(const chain::PrivateNode& n, ledger::OpKind kind) {
    return count_txs(n, [&](const ledger::Transaction& tx) { return ledger::kind_of(tx.op) == kind; });
}

bool grades_agree(const harness::University& u) {
    auto first = state::table_digest(u.nodes.front()->database(), state::TableId::Grades);
    return std::all_of(u.nodes.begin(), u.nodes.end(), [&](const auto& n) {
        return state::table_digest(n->database(), state::TableId::Grades) == first;
    });
}

Outcome replay_oracle_equivalence() {
    auto start = std::chrono::steady_clock::now();
    auto p = prepare(R"(
name: replay-100
network: {universities: [{name: U1, nodes: 5}], seed: 21}
steps:
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_students, as: registrar, prefix: S, count: 49, program: CS}
  - do: settle
  - {do: grades_bulk, as: t1, prefix: S, count: 49, courses: [C1], term: 2023-Fall}
  - do: settle
)");
    auto& tb = *p.tb;
    std::size_t txs = count_txs(*tb.university(0).nodes.front(), [](const auto&) { return true; });
    std::size_t compared = 0, mismatches = 0;
    for (auto* n : tb.all_nodes()) {
        auto replayed = chain::replay_state(n->chain(), n->config());
        for (auto t : state::kAllTables) {
            ++compared;
            if (state::table_digest(replayed, t) != state::table_digest(n->database(), t)) ++mismatches;
        }
    }
    auto seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream d;
    d << tb.all_nodes().size() << " nodes, " << txs << " txs, " << compared << " table digests, " << mismatches
      << " mismatches, " << seconds << " s";
    return {txs == 100 && mismatches == 0 && seconds < 60.0, d.str()};
}

Outcome chain_integrity() {
    std::size_t scenarios = 0, blocks = 0, violations = 0, failedRuns = 0;
    std::string first;
    for (const auto& path : bundled_scenarios()) {
        auto script = harness::load_scenario(path);
        Testbed tb(script.network);
        auto report = harness::run_scenario(tb, script);
        if (!report.passed) ++failedRuns;
        auto r = harness::check_chain_integrity(tb);
        ++scenarios;
        blocks += r.blocks;
        violations += r.violations.size();
        if (first.empty() && !r.violations.empty()) first = "; first: " + r.violations.front();
    }
    std::ostringstream d;
    d << scenarios << " scenarios, " << blocks << " blocks checked, " << violations << " violations, " << failedRuns
      << " failed runs" << first;
    return {scenarios > 0 && violations == 0 && failedRuns == 0, d.str()};
}

Outcome tamper_localization() {
    auto p = prepare(R"(
name: tamper-trials
network: {universities: [{name: U1, nodes: 5}], seed: 31}
steps:
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_course, as: registrar, courseId: C2, title: Biology, term: 2023-Fall, owner: T1}
  - {do: register_students, as: registrar, prefix: S, count: 500, program: CS}
  - do: settle
  - {do: grades_bulk, as: t1, prefix: S, count: 500, courses: [C1, C2], term: 2023-Fall}
  - do: settle
)");
    auto& tb = *p.tb;
    auto& u = tb.university(0);
    const auto rows = u.nodes.front()->database().row_count(state::TableId::Grades);
    if (rows != 1000) return {false, "grades table has " + std::to_string(rows) + " rows, expected 1000"};

    std::mt19937_64 rng(4242);
    constexpr int kTrials = 50;
    int ok = 0;
    std::uint32_t maxLevels = 0;
    std::string firstFailure;
    for (int trial = 0; trial < kTrials; ++trial) {
        auto& target = *u.nodes[rng() % u.nodes.size()];
        const auto& table = target.database().table(state::TableId::Grades);
        auto it = std::next(table.begin(), static_cast<std::ptrdiff_t>(rng() % table.size()));
        auto key = it->first;
        auto score = std::stoul(it->second.at("score"));
        auto tampered = std::to_string((score + 1 + rng() % 100) % 101);
        auto repairsBefore = count_ops(*u.nodes.front(), ledger::OpKind::AuditRepair);

        tb.inject_fault({harness::TamperRow{target.id(), "grades", key.str(), "score", tampered}, tb.now()});
        auto reports = u.auditor->run_round(tb.audit_handles(u), {state::TableId::Grades},
                                            audit::AuditOptions{64, tb.now(), true});
        bool settled = tb.settle();
        const auto& r = reports.at(0);
        auto localized = r.localizedRows.find(target.id());
        auto levels = r.narrowingLevels.count(target.id()) ? r.narrowingLevels.at(target.id()) : 99u;
        maxLevels = std::max(maxLevels, levels);
        bool pass = settled && r.divergentNodes == std::set<std::string>{target.id()} &&
                    r.localizedRows.size() == 1 && localized != r.localizedRows.end() &&
                    localized->second.size() == 1 && localized->second[0].key == key && levels <= 7 &&
                    r.repairsApplied == 1 && grades_agree(u) &&
                    count_ops(*u.nodes.front(), ledger::OpKind::AuditRepair) == repairsBefore + 1;
        if (pass) {
            ++ok;
        } else if (firstFailure.empty()) {
            firstFailure = "; trial " + std::to_string(trial) + " " + target.id() + " " + key.str() + ": " +
                           r.to_json().dump();
        }
    }
    std::ostringstream d;
    d << ok << "/" << kTrials << " trials exact over " << rows << " rows, max narrowing levels " << maxLevels
      << firstFailure;
    return {ok == kTrials, d.str()};
}

Outcome commitment_round_trip() {
    auto p = prepare(R"(
name: commitments
network: {universities: [{name: U1, nodes: 3}], seed: 41}
steps:
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_students, as: registrar, prefix: S, count: 50, program: CS}
  - do: settle
  - {do: grades_bulk, as: t1, prefix: S, count: 50, courses: [C1], term: 2023-Fall}
  - do: settle
  - {do: publish, university: U1, period: 2023-Fall, ordinal: 1}
)");
    auto& u = p.tb->university(0);
    auto verify = [&](const json& credential) {
        auto r = u.gateway->handle({"POST", "/verify", {}, {}, {{"credential", credential}}});
        return r.body.value("status", r.body.value("error", ""));
    };
    std::size_t credentials = 0, verified = 0, perturbations = 0, rejected = 0;
    for (const auto& c : u.hub->snapshot_credentials("2023-Fall")) {
        if (c.record.credentialType != consortium::CredentialType::Transcript) continue;
        ++credentials;
        auto fields = ledger::credential_fields_to_json(c.fields);
        if (verify(fields) == "Verified") ++verified;

        auto score = std::stoul(fields.at("course.C1.score").get<std::string>());
        auto byScore = fields;
        byScore["course.C1.score"] = std::to_string(score == 100 ? score - 1 : score + 1);
        auto byName = fields;
        byName["name"] = fields.at("name").get<std::string>() + " Jr";
        auto byPeriod = fields;
        byPeriod["period"] = "2023-Spring";
        for (const auto& bad : {byScore, byName, byPeriod}) {
            ++perturbations;
            if (verify(bad) == "NotFound") ++rejected;
        }
    }
    std::ostringstream d;
    d << verified << "/" << credentials << " verified, " << rejected << "/" << perturbations
      << " perturbations NotFound";
    return {credentials == 50 && verified == 50 && perturbations == 150 && rejected == 150, d.str()};
}

Outcome transfer_channel_integrity() {
    auto script = harness::load_scenario(std::filesystem::path(EDUCHAIN_SCENARIO_DIR) / "credit-transfer.yaml");
    auto report = harness::run_scenario(script);
    std::size_t genuine = 0, genuineOk = 0, tampered = 0, tamperRejected = 0;
    for (const auto& step : report.steps) {
        if (step.action != "transfer") continue;
        const auto& params = script.steps.at(step.index).params;
        if (params.contains("tamper")) {
            ++tampered;
            if (step.result.value("error", "") == "DigestMismatch") ++tamperRejected;
        } else if (step.result.value("result", "") == "ok" || !step.result.contains("error")) {
            ++genuine;
            if (step.result.value("payloadDigestMatches", false) && step.result.value("matchesCommitment", false))
                ++genuineOk;
        }
    }
    std::ostringstream d;
    d << genuineOk << "/" << genuine << " transfers match payloadDigest and commitment, " << tamperRejected << "/"
      << tampered << " tampered payloads DigestMismatch";
    if (report.failure) d << "; " << *report.failure;
    return {report.passed && genuine >= 1 && genuineOk == genuine && tampered >= 1 && tamperRejected == tampered,
            d.str()};
}

Outcome permission_soundness() {
    auto p = prepare(R"(
name: permissions
network: {universities: [{name: U1, nodes: 3}], seed: 51}
steps:
  - {do: register_student, as: registrar, studentId: S1, name: Ann, program: CS}
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - do: settle
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_account, as: registrar, login: s1, role: Student, subject: S1, department: cs}
  - do: settle
  - {do: grade, as: t1, studentId: S1, courseId: C1, term: 2023-Fall, score: 77}
  - do: settle
)");
    auto& tb = *p.tb;
    auto& u = tb.university(0);
    auto& gw = *u.gateway;
    auto doc = testutil::load_permission_doc(EDUCHAIN_DOCS_DIR "/permissions.md");
    const auto& code = gateway::endpoint_policies();

    std::size_t tableDeviations = doc.size() == code.size() ? 0 : 1 + std::max(doc.size(), code.size());
    for (std::size_t i = 0; i < std::min(doc.size(), code.size()); ++i)
        if (doc[i].method != code[i].method || doc[i].path != code[i].path || doc[i].allowed != code[i].allowed)
            ++tableDeviations;

    using gateway::Principal;
    auto login = [&](const std::string& id) {
        gateway::Client c(gw, tb.key(u.name + "/" + id));
        c.login(id, Testbed::default_password(id));
        return c.token();
    };
    std::map<Principal, std::string> tokens{{Principal::Anonymous, ""},
                                            {Principal::Student, login("s1")},
                                            {Principal::Staff, login("t1")},
                                            {Principal::Registrar, login("registrar")},
                                            {Principal::Auditor, login("auditor")}};
    std::size_t cells = 0, deviations = 0;
    std::string firstDeviation;
    auto order = doc;
    std::stable_partition(order.begin(), order.end(), [](const auto& e) { return e.path != "/logout"; });
    for (auto who : {Principal::Anonymous, Principal::Student, Principal::Staff, Principal::Registrar,
                     Principal::Auditor}) {
        for (const auto& e : order) {
            auto path = e.path;
            if (auto b = path.find('{'); b != std::string::npos) path = path.substr(0, b) + std::string(64, '0');
            std::lock_guard lock(gw.node_lock());
            auto r = gw.handle({e.method, path, {}, tokens[who], json::object()});
            bool allowed = e.allowed[static_cast<std::size_t>(who)];
            bool ok = allowed ? r.status != 401 && r.status != 403
                              : r.status == (who == Principal::Anonymous ? 401 : 403);
            ++cells;
            if (!ok) {
                ++deviations;
                if (firstDeviation.empty())
                    firstDeviation = "; first: " + std::string(gateway::principal_name(who)) + " " + e.method + " " +
                                     e.path + " -> " + std::to_string(r.status);
            }
        }
    }

    // Student grade writes: through the gateway, and signed straight at every node.
    auto studentKey = tb.key(u.name + "/s1");
    gateway::Client student(gw, studentKey);
    student.login("s1", Testbed::default_password("s1"));
    std::size_t attempts = 0, refused = 0;
    for (std::uint32_t score : {100u, 99u, 98u, 0u, 55u}) {
        ++attempts;
        auto r = student.write("POST", "/grades", ledger::UpsertGrade{"S1", "C1", "2023-Fall", score, "A"}, tb.now());
        if (r.status == 403) ++refused;
    }
    for (const auto& n : u.nodes) {
        ++attempts;
        auto tx = ledger::Transaction::make_signed(studentKey, 0, ledger::UpsertGrade{"S1", "C1", "2023-Fall", 100, "A"},
                                                   tb.now());
        auto r = n->submit_transaction(tx);
        if (!r.accepted && r.error == Errc::PermissionDenied) ++refused;
    }
    tb.settle();
    std::size_t reached = 0;
    for (auto* n : tb.all_nodes())
        reached += count_txs(*n, [&](const ledger::Transaction& tx) {
            return tx.sender == studentKey.account() && ledger::kind_of(tx.op) == ledger::OpKind::UpsertGrade;
        });
    auto score = u.nodes.front()->database().find(state::TableId::Grades, state::RowKey{"S1", "C1", "2023-Fall"});

    std::ostringstream d;
    d << cells << " role x endpoint cells, " << deviations << " deviations, " << tableDeviations
      << " code/doc table deviations; " << refused << "/" << attempts << " student grade writes refused, " << reached
      << " reached a chain, S1/C1 score " << (score ? score->at("score") : "absent") << firstDeviation;
    return {doc.size() == code.size() && cells == doc.size() * gateway::kPrincipalCount && deviations == 0 &&
                tableDeviations == 0 && refused == attempts && reached == 0 && score && score->at("score") == "77",
            d.str()};
}

Outcome determinism() {
    std::size_t scenarios = 0, identical = 0;
    std::string firstDiff;
    for (const auto& path : bundled_scenarios()) {
        auto script = harness::load_scenario(path);
        ++scenarios;
        std::vector<std::string> texts;
        std::vector<std::map<std::string, harness::NodeSummary>> digests;
        for (int run = 0; run < 3; ++run) {
            auto report = harness::run_scenario(script);
            texts.push_back(report.text());
            digests.push_back(report.nodes);
        }
        bool same = texts[0] == texts[1] && texts[1] == texts[2];
        for (int run = 1; run < 3; ++run)
            for (const auto& [node, summary] : digests[0])
                same = same && digests[run].count(node) && digests[run].at(node).digests == summary.digests;
        if (same)
            ++identical;
        else if (firstDiff.empty())
            firstDiff = "; differs: " + script.name;
    }
    std::ostringstream d;
    d << identical << "/" << scenarios << " scenarios byte-equal across 3 runs" << firstDiff;
    return {scenarios > 0 && identical == scenarios, d.str()};
}

Outcome vote_semantics() {
    std::vector<std::string> failures;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    };
    const auto A = ledger::digest_md5("A"), B = ledger::digest_md5("B"), C = ledger::digest_md5("C");
    auto votes = [](std::vector<std::pair<std::string, ledger::Hash128>> in) {
        std::vector<audit::DigestVote> out;
        for (auto& [node, digest] : in) out.push_back({"r", node, "grades", digest, {}});
        return out;
    };

    auto c = audit::vote_consensus(votes({{"n0", A}, {"n1", A}, {"n2", A}, {"n3", B}, {"n4", C}}));
    expect(c.digest == A && c.divergent == std::set<std::string>{"n3", "n4"}, "majority");
    c = audit::vote_consensus(votes({{"n0", A}, {"n1", A}, {"n2", B}, {"n3", B}}));
    expect(!c.digest && c.divergent.empty(), "2-2 tie ambiguous");
    c = audit::vote_consensus(votes({{"n0", A}, {"n1", A}, {"n2", B}, {"n3", C}, {"n4", C}}));
    expect(!c.digest && c.divergent.empty(), "plurality without majority ambiguous");
    c = audit::vote_consensus(votes({{"n0", B}}));
    expect(c.digest == B && c.divergent.empty(), "single voter");

    auto tie = prepare(R"(
name: vote-tie
network: {universities: [{name: U1, nodes: 4}], seed: 61}
steps:
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_students, as: registrar, prefix: S, count: 20, program: CS}
  - do: settle
  - {do: grades_bulk, as: t1, prefix: S, count: 20, courses: [C1], term: 2023-Fall}
  - do: settle
  - {do: fault, kind: TamperRow, node: U1-n1, table: grades, rowKey: S00003/C1/2023-Fall, field: score, value: "0"}
  - {do: fault, kind: TamperRow, node: U1-n3, table: grades, rowKey: S00003/C1/2023-Fall, field: score, value: "0"}
)");
    {
        auto& u = tie.tb->university(0);
        auto r = u.auditor->run_round(tie.tb->audit_handles(u), {state::TableId::Grades},
                                      audit::AuditOptions{64, tie.tb->now(), true});
        const auto& rep = r.at(0);
        expect(rep.voteAmbiguous && rep.adjudicationSource == audit::Source::ReplayOracle &&
                   rep.divergentNodes == std::set<std::string>{"U1-n1", "U1-n3"} && rep.repairsApplied == 2,
               "tie escalates to replay oracle");
        tie.tb->settle();
        expect(grades_agree(u), "tie repaired to the oracle digest");
    }

    auto crash = prepare(R"(
name: vote-abstain
network: {universities: [{name: U1, nodes: 5}], seed: 62}
steps:
  - {do: register_account, as: registrar, login: t1, role: Staff, subject: T1, department: cs}
  - {do: register_course, as: registrar, courseId: C1, title: Algebra, term: 2023-Fall, owner: T1}
  - {do: register_students, as: registrar, prefix: S, count: 20, program: CS}
  - do: settle
  - {do: grades_bulk, as: t1, prefix: S, count: 20, courses: [C1], term: 2023-Fall}
  - do: settle
  - {do: fault, kind: CrashNode, node: U1-n2, window: 100000}
  - {do: fault, kind: TamperRow, node: U1-n4, table: grades, rowKey: S00007/C1/2023-Fall, field: score, value: "1"}
)");
    {
        auto& u = crash.tb->university(0);
        auto r = u.auditor->run_round(crash.tb->audit_handles(u), {state::TableId::Grades},
                                      audit::AuditOptions{64, crash.tb->now(), true});
        const auto& rep = r.at(0);
        expect(rep.abstentions == std::vector<std::string>{"U1-n2"} && rep.votes.size() == 4 &&
                   !rep.voteAmbiguous && rep.divergentNodes == std::set<std::string>{"U1-n4"},
               "abstention excluded from the vote");
    }

    std::ostringstream d;
    d << (6 - failures.size()) << "/6 cases exact";
    for (const auto& f : failures) d << "; failed: " << f;
    return {failures.empty(), d.str()};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"replay-oracle-equivalence", replay_oracle_equivalence},
        {"chain-integrity", chain_integrity},
        {"tamper-detection-localization", tamper_localization},
        {"commitment-round-trip", commitment_round_trip},
        {"transfer-channel-integrity", transfer_channel_integrity},
        {"permission-soundness", permission_soundness},
        {"determinism", determinism},
        {"vote-semantics", vote_semantics},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.passed) ++failed;
        std::printf("%s  %-30s %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
