#include <gtest/gtest.h>

#include <filesystem>

#include "educhain/chain/replay.hpp"
#include "educhain/harness/scenario.hpp"
#include "educhain/state/checksum.hpp"

using namespace educhain;
using namespace educhain::harness;

namespace {

std::filesystem::path scenario_path(const std::string& name) {
    return std::filesystem::path(EDUCHAIN_SCENARIO_DIR) / (name + ".yaml");
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::UnsupportedValue;
}

}  // namespace

class BundledScenario : public ::testing::TestWithParam<std::string> {};

TEST_P(BundledScenario, PassesEveryAssertion) {
    auto report = run_scenario(load_scenario(scenario_path(GetParam())));
    EXPECT_TRUE(report.passed) << report.failure.value_or("") << "\n" << report.text();
    EXPECT_GT(report.assertion_count(), 0u);
}

INSTANTIATE_TEST_SUITE_P(Scenarios, BundledScenario,
                         ::testing::Values("happy-path", "tamper-and-audit", "credit-transfer", "fork-race", "lag"),
                         [](const auto& info) {
                             auto n = info.param;
                             std::replace(n.begin(), n.end(), '-', '_');
                             return n;
                         });

TEST(Harness, SameSeedByteEqualReports) {
    auto script = load_scenario(scenario_path("fork-race"));
    auto a = run_scenario(script).text();
    auto b = run_scenario(script).text();
    EXPECT_EQ(a, b);
    script.network.rngSeed = 4;
    EXPECT_NE(run_scenario(script).text(), a);
}

TEST(Harness, DefaultTopology) {
    Testbed tb(NetworkConfig{});
    ASSERT_EQ(tb.universities().size(), 1u);
    auto& u = tb.university(0);
    EXPECT_EQ(u.nodes.size(), 5u);
    EXPECT_TRUE(u.hubNode);
    EXPECT_TRUE(u.gateway);
    EXPECT_EQ(tb.ministry().name(), "MINISTRY");
    for (auto* n : tb.all_nodes()) {
        EXPECT_EQ(n->height(), 0u);
        EXPECT_LE(tb.peers(n->id()).size(), 7u);
        EXPECT_EQ(tb.peers(n->id()).size(), 5u);  // everyone else
    }
}

TEST(Harness, MaxPeersHonouredOnLargeUniversities) {
    NetworkConfig cfg;
    cfg.universities = {{"U1", 20}};
    cfg.maxPeers = 7;
    Testbed tb(cfg);
    for (auto* n : tb.all_nodes()) {
        EXPECT_LE(tb.peers(n->id()).size(), 7u);
        EXPECT_GE(tb.peers(n->id()).size(), 2u);
    }
    // Gossip still reaches everyone through the lattice.
    auto tx = ledger::Transaction::make_signed(tb.key("U1/registrar"), 0,
                                               ledger::RegisterStudent{"S1", "A", "CS"}, 1);
    ASSERT_TRUE(tb.university(0).nodes[0]->submit_transaction(tx).accepted);
    ASSERT_TRUE(tb.settle());
    for (auto* n : tb.all_nodes()) EXPECT_EQ(n->height(), 1u) << n->id();
}

TEST(Harness, TwoUniversitiesDisjointChainsSharedLog) {
    NetworkConfig cfg;
    cfg.universities = {{"U1", 5}, {"U2", 3}};
    Testbed tb(cfg);
    auto& u1 = tb.university("U1");
    auto& u2 = tb.university("U2");
    EXPECT_NE(u1.nodes[0]->tip().hash(), u2.nodes[0]->tip().hash());
    for (const auto& p : tb.peers("U1-n0")) EXPECT_EQ(p.rfind("U1-", 0), 0u);
    // A U1 transaction is not valid on U2's chain: different registrar.
    auto tx = ledger::Transaction::make_signed(tb.key("U1/registrar"), 0, ledger::RegisterStudent{"S1", "A", "CS"}, 1);
    EXPECT_TRUE(u1.nodes[0]->submit_transaction(tx).accepted);
    EXPECT_FALSE(u2.nodes[0]->submit_transaction(tx).accepted);
    ASSERT_TRUE(tb.settle());
    EXPECT_EQ(u2.nodes[0]->height(), 0u);
    // One log: an entry published by U1 is seen by U2 and the Ministry.
    u1.hub->publish_commitments("2023-Fall", 1, {});
    EXPECT_EQ(u2.member->accepted().size(), 1u);
    EXPECT_EQ(tb.ministry().accepted().size(), 1u);
}

TEST(Harness, ConfigAndTargetErrors) {
    NetworkConfig bad;
    bad.universities = {};
    EXPECT_EQ(code_of([&] { Testbed tb(bad); }), Errc::ConfigInvalid);
    bad = {};
    bad.lossRate = 1.5;
    EXPECT_EQ(code_of([&] { Testbed tb(bad); }), Errc::ConfigInvalid);
    bad = {};
    bad.universities = {{"U1", 5}, {"U1", 3}};
    EXPECT_EQ(code_of([&] { Testbed tb(bad); }), Errc::ConfigInvalid);

    Testbed tb(NetworkConfig{});
    EXPECT_EQ(code_of([&] { tb.inject_fault({CrashNode{"U9-n0", 10}, 0}); }), Errc::UnknownTarget);
    EXPECT_EQ(code_of([&] { tb.inject_fault({TamperRow{"U1-n0", "nope", "k", "f", "v"}, 0}); }), Errc::UnknownTarget);
    EXPECT_EQ(code_of([] { parse_scenario("name: x\nsteps:\n  - {do: dance}\n"); }), Errc::ConfigInvalid);
    EXPECT_EQ(code_of([] { parse_scenario("steps: []\n"); }), Errc::ConfigInvalid);
}

TEST(Harness, FailedAssertionStopsWithDiff) {
    auto script = parse_scenario(R"(
name: failing
steps:
  - {do: check, what: converged}
  - {do: register_student, as: registrar, studentId: S1, name: A, program: CS, expect: {status: 201}}
  - {do: check, what: converged}
)");
    auto report = run_scenario(script);
    EXPECT_FALSE(report.passed);
    EXPECT_EQ(report.steps.size(), 2u);
    ASSERT_TRUE(report.failure);
    EXPECT_NE(report.failure->find("expect.status"), std::string::npos);
    EXPECT_NE(report.failure->find("201"), std::string::npos);
    EXPECT_EQ(code_of([&] { require_passed(report); }), Errc::AssertionFailed);
}

TEST(Harness, TamperChangesDigestAndCrashAbstains) {
    Testbed tb(NetworkConfig{});
    auto& u = tb.university(0);
    auto tx = ledger::Transaction::make_signed(tb.key("U1/registrar"), 0, ledger::RegisterStudent{"S1", "A", "CS"}, 1);
    ASSERT_TRUE(u.nodes[0]->submit_transaction(tx).accepted);
    ASSERT_TRUE(tb.settle());
    tb.inject_fault({TamperRow{"U1-n2", "students", "S1", "name", "Z"}, tb.now() + 5});
    tb.inject_fault({CrashNode{"U1-n4", 1000}, tb.now()});
    auto before = state::table_digest(u.nodes[2]->database(), state::TableId::Students);
    tb.advance(10);
    EXPECT_NE(state::table_digest(u.nodes[2]->database(), state::TableId::Students), before);
    EXPECT_FALSE(tb.reachable("U1-n4"));
    ASSERT_EQ(tb.fault_log().size(), 2u);
    EXPECT_EQ(tb.fault_log()[1].kind, "TamperRow");

    auto reports = u.auditor->run_round(tb.audit_handles(u), {state::TableId::Students}, {});
    EXPECT_EQ(reports[0].abstentions, std::vector<std::string>{"U1-n4"});
    EXPECT_EQ(reports[0].divergentNodes, std::set<std::string>{"U1-n2"});
    tb.advance(1000);
    EXPECT_TRUE(tb.reachable("U1-n4"));
    EXPECT_EQ(tb.fault_log().back().detail, "ended");
}

TEST(Harness, LossyNetworkStillConverges) {
    NetworkConfig cfg;
    cfg.lossRate = 0.3;
    cfg.rngSeed = 99;
    Testbed tb(cfg);
    auto& u = tb.university(0);
    for (std::uint64_t i = 0; i < 10; ++i) {
        auto tx = ledger::Transaction::make_signed(tb.key("U1/registrar"), i,
                                                   ledger::RegisterStudent{"S" + std::to_string(i), "A", "CS"}, i + 1);
        ASSERT_TRUE(u.nodes[0]->submit_transaction(tx).accepted);
        tb.advance(20);
    }
    ASSERT_TRUE(tb.settle());
    EXPECT_GT(tb.stats().dropped, 0u);
    for (auto* n : tb.all_nodes()) EXPECT_EQ(n->tip().hash(), u.nodes[0]->tip().hash()) << n->id();
    EXPECT_TRUE(replay_mismatches(tb).empty());
}
