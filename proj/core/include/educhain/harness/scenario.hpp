#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "educhain/harness/testbed.hpp"

namespace educhain::harness {

using nlohmann::json;

struct ScenarioStep {
    std::size_t index = 0;
    std::string action;
    std::optional<std::uint64_t> at;  // logical ms since the run started
    json params = json::object();     // every other key of the step
    json expect = json::object();     // subset the action's result must match
};

struct ScenarioScript {
    std::string name;
    std::string description;
    NetworkConfig network;
    std::vector<ScenarioStep> steps;
};

// Parses the YAML scenario format (docs/scenarios.md). Throws
// Error(ConfigInvalid) with the offending step.
ScenarioScript parse_scenario(const std::string& yamlText);
ScenarioScript load_scenario(const std::filesystem::path& path);
// Applies a network override file (same keys as a scenario's `network:`).
void apply_network_overrides(NetworkConfig& config, const std::string& yamlText);

// Every action name the runner understands, with a one-line summary.
std::vector<std::pair<std::string, std::string>> action_catalog();

struct AssertionResult {
    std::string what;
    bool passed = false;
    json expected;
    json actual;
};

struct StepRecord {
    std::size_t index = 0;
    std::string action;
    std::uint64_t at = 0;
    json result;
    std::vector<AssertionResult> assertions;
};

struct NodeSummary {
    std::uint64_t height = 0;
    std::string tip;
    std::map<std::string, std::string> digests;  // table -> MD5 hex
};

// Deterministic: logical times only, no wall clock.
struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    bool passed = true;
    std::optional<std::string> failure;  // structured diff of the first failed assertion
    std::vector<StepRecord> steps;
    std::vector<FaultRecord> faults;
    MessageStats messages;
    std::map<std::string, NodeSummary> nodes;
    std::uint64_t finalTime = 0;

    std::size_t assertion_count() const;
    json to_json() const;
    std::string text() const;  // to_json().dump(2)
};

// Runs the steps in order on the testbed's logical clock; stops at the first
// failed assertion.
RunReport run_scenario(Testbed& testbed, const ScenarioScript& script);
// Builds the scenario's network and runs it.
RunReport run_scenario(const ScenarioScript& script);
// Throws Error(AssertionFailed) carrying the report's diff.
void require_passed(const RunReport& report);

// Replay-based checks shared with the acceptance suite.
struct IntegrityResult {
    std::size_t blocks = 0;
    std::vector<std::string> violations;  // "<node>: <detail>"
};
IntegrityResult check_chain_integrity(const Testbed& testbed);
// "<node>/<table>" for every node whose table digest differs from replaying
// its own chain.
std::vector<std::string> replay_mismatches(const Testbed& testbed);

}  // namespace educhain::harness
