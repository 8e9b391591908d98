// educhain: scenario runner, demo gateway server and client-side key tools.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "educhain/error.hpp"
#include "educhain/gateway/gateway.hpp"
#include "educhain/harness/scenario.hpp"
#include "educhain/harness/testbed.hpp"
#include "educhain/ledger/transaction.hpp"
#include "serve.hpp"

namespace {

using namespace educhain;
using nlohmann::json;

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::ConfigInvalid, "cannot open " + path);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << "\n";
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(Errc::ConfigInvalid, "cannot write " + path);
    out << text << "\n";
}

// Key files hold the 32-byte Ed25519 seed; the public half is derived.
json key_file(const ledger::Hash256& seed) {
    auto kp = ledger::KeyPair::from_seed(seed);
    return {{"seed", seed.hex()}, {"publicKey", kp.public_key().hex()}, {"account", kp.account().digest.hex()}};
}

ledger::KeyPair load_key(const std::string& path) {
    auto j = json::parse(read_text(path));
    return ledger::KeyPair::from_seed(ledger::Hash256::from_hex(j.at("seed").get<std::string>()));
}

int sim_run(const std::string& scenarioPath, std::optional<std::uint64_t> seed, const std::string& configPath,
            const std::string& outPath) {
    auto script = harness::load_scenario(scenarioPath);
    if (!configPath.empty()) harness::apply_network_overrides(script.network, read_text(configPath));
    if (seed) script.network.rngSeed = *seed;
    auto report = harness::run_scenario(script);
    write_text(outPath, report.text());
    if (!report.passed) {
        std::cerr << "scenario " << script.name << " failed:\n" << report.failure.value_or("") << "\n";
        return 1;
    }
    std::cerr << "scenario " << script.name << " passed (" << report.assertion_count() << " assertions)\n";
    return 0;
}

std::string kind_list() {
    std::string out;
    for (int k = 0; k <= static_cast<int>(ledger::OpKind::AuditRepair); ++k)
        out += (out.empty() ? "" : ", ") + std::string(ledger::op_kind_name(static_cast<ledger::OpKind>(k)));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"educhain: academic-records blockchain testbed"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("sim", "Deterministic simulation");
    sim->require_subcommand(1);
    auto* run = sim->add_subcommand("run", "Run a scenario file and print its RunReport");
    std::string scenarioPath, configPath, outPath;
    std::optional<std::uint64_t> seed;
    run->add_option("--scenario", scenarioPath, "Scenario YAML file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the network RNG seed");
    run->add_option("--config", configPath, "Network override YAML (same keys as a scenario's network:)")
        ->check(CLI::ExistingFile);
    run->add_option("--out", outPath, "Write the report here instead of stdout");

    auto* faults = sim->add_subcommand("faults", "Fault injection kinds");
    bool listFaults = false;
    faults->add_flag("--list", listFaults, "List fault kinds and their parameters");
    auto* actions = sim->add_subcommand("actions", "Scenario step actions");
    bool listActions = false;
    actions->add_flag("--list", listActions, "List actions and their parameters");

    auto* node = app.add_subcommand("node", "Demo gateway server");
    node->require_subcommand(1);
    auto* serveCmd = node->add_subcommand("serve", "Serve a university gateway over HTTP on a simulated network");
    std::string serveConfig, host, university;
    int port = 0;
    serveCmd->add_option("--config", serveConfig, "Server YAML (host, port, university, tickMs, network)")
        ->check(CLI::ExistingFile);
    serveCmd->add_option("--host", host, "Listen address (overrides config and EDUCHAIN_HOST)");
    serveCmd->add_option("--port", port, "Listen port (overrides config and EDUCHAIN_PORT)");
    serveCmd->add_option("--university", university, "University whose gateway to serve");

    auto* key = app.add_subcommand("key", "Client-side signing keys");
    key->require_subcommand(1);
    auto* keyNew = key->add_subcommand("new", "Create a random key file");
    auto* keyDerive = key->add_subcommand("derive", "Write the key a seeded network assigns to a label");
    auto* keyShow = key->add_subcommand("show", "Print a key file's public key and account id");
    std::string keyOut, keyPath, label;
    std::uint64_t keySeed = 1;
    keyNew->add_option("--out", keyOut, "Output file (default stdout)");
    keyDerive->add_option("--seed", keySeed, "Network RNG seed")->required();
    keyDerive->add_option("--label", label, "Key label, e.g. U1/registrar")->required();
    keyDerive->add_option("--out", keyOut, "Output file (default stdout)");
    keyShow->add_option("--key", keyPath, "Key file")->required()->check(CLI::ExistingFile);

    auto* tx = app.add_subcommand("tx", "Transactions");
    tx->require_subcommand(1);
    auto* sign = tx->add_subcommand("sign", "Sign an op and print the gateway write body");
    std::string kindName, bodyText;
    std::uint64_t nonce = 0;
    std::optional<std::uint64_t> timestamp;
    sign->add_option("--key", keyPath, "Key file")->required()->check(CLI::ExistingFile);
    sign->add_option("--kind", kindName, "Op kind: " + kind_list())->required();
    sign->add_option("--nonce", nonce, "Account nonce (GET /session reports it)")->required();
    sign->add_option("--timestamp", timestamp, "Unix ms (default: now)");
    sign->add_option("--body", bodyText, "Op fields as JSON, or @file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return sim_run(scenarioPath, seed, configPath, outPath);
        if (faults->parsed()) {
            for (const auto& [name, params] : harness::fault_catalog())
                std::printf("%-14s %s\n", name.c_str(), params.c_str());
            return 0;
        }
        if (actions->parsed()) {
            for (const auto& [name, params] : harness::action_catalog())
                std::printf("%-18s %s\n", name.c_str(), params.c_str());
            return 0;
        }
        if (serveCmd->parsed()) {
            auto cfg = tools::load_serve_config(serveConfig);
            if (!host.empty()) cfg.host = host;
            if (port != 0) cfg.port = port;
            if (!university.empty()) cfg.university = university;
            return tools::serve(cfg);
        }
        if (keyNew->parsed()) {
            write_text(keyOut, key_file(ledger::random_seed()).dump(2));
            return 0;
        }
        if (keyDerive->parsed()) {
            write_text(keyOut, key_file(harness::derive_seed(keySeed, label)).dump(2));
            return 0;
        }
        if (keyShow->parsed()) {
            auto kp = load_key(keyPath);
            std::cout << json{{"publicKey", kp.public_key().hex()}, {"account", kp.account().digest.hex()}}.dump(2)
                      << "\n";
            return 0;
        }
        if (sign->parsed()) {
            auto kind = ledger::parse_op_kind(kindName);
            if (!kind)
                throw Error(Errc::ConfigInvalid, "unknown kind '" + kindName + "'; expected one of " + kind_list());
            auto body = json::parse(bodyText.rfind('@', 0) == 0 ? read_text(bodyText.substr(1)) : bodyText);
            auto ts = timestamp.value_or(static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
                    .count()));
            auto signedTx = ledger::Transaction::make_signed(load_key(keyPath), nonce,
                                                             gateway::write_op_from_json(*kind, body), ts);
            std::cout << gateway::signed_write_body(signedTx).dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
