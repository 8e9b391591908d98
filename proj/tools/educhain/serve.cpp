#include "serve.hpp"

#include <httplib.h>
#include <yaml-cpp/yaml.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "educhain/error.hpp"
#include "educhain/gateway/gateway.hpp"
#include "educhain/harness/scenario.hpp"

namespace educhain::tools {

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

gateway::Request to_request(const httplib::Request& req) {
    gateway::Request out;
    out.method = req.method;
    out.path = req.path;
    for (const auto& [k, v] : req.params) out.query[k] = v;
    auto auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) out.token = auth.substr(7);
    if (!req.body.empty()) out.body = gateway::json::parse(req.body);
    return out;
}

}  // namespace

ServeConfig load_serve_config(const std::string& path) {
    ServeConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw Error(Errc::ConfigInvalid, "cannot open " + path);
        std::stringstream text;
        text << in.rdbuf();
        YAML::Node root;
        try {
            root = YAML::Load(text.str());
        } catch (const YAML::Exception& e) {
            throw Error(Errc::ConfigInvalid, e.what());
        }
        if (root["host"]) cfg.host = root["host"].as<std::string>();
        if (root["port"]) cfg.port = root["port"].as<int>();
        if (root["university"]) cfg.university = root["university"].as<std::string>();
        if (root["tickMs"]) cfg.tickMs = root["tickMs"].as<std::uint64_t>();
        if (root["network"]) {
            YAML::Emitter out;
            out << root["network"];
            harness::apply_network_overrides(cfg.network, out.c_str());
        }
    }
    if (const char* host = std::getenv("EDUCHAIN_HOST")) cfg.host = host;
    if (const char* port = std::getenv("EDUCHAIN_PORT")) cfg.port = std::atoi(port);
    if (cfg.port <= 0 || cfg.port > 65535) throw Error(Errc::ConfigInvalid, "port out of range");
    if (cfg.tickMs == 0) throw Error(Errc::ConfigInvalid, "tickMs must be positive");
    cfg.network.validate();
    return cfg;
}

int serve(const ServeConfig& config) {
    harness::Testbed tb(config.network);
    auto& u = config.university.empty() ? tb.university(0) : tb.university(config.university);
    auto& gw = *u.gateway;

    httplib::Server server;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"}});
    auto handler = [&](const httplib::Request& req, httplib::Response& res) {
        gateway::Response r;
        try {
            auto request = to_request(req);
            if (request.path == "/login") {
                r = gw.handle(request);  // password hashing stays outside the node lock
            } else {
                std::lock_guard lock(gw.node_lock());
                r = gw.handle(request);
            }
        } catch (const gateway::json::parse_error& e) {
            r = gateway::error_response(Errc::BadRequest, std::string("body is not JSON: ") + e.what());
        }
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    server.Put(".*", handler);
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    // Logical time advances one clock step per tickMs of wall time, with
    // every gateway's node lock held (fixed order).
    std::thread clock([&] {
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(config.tickMs));
            std::vector<std::unique_lock<std::recursive_mutex>> locks;
            for (auto& each : tb.universities()) locks.emplace_back(each->gateway->node_lock());
            tb.advance(tb.config().clockStep);
        }
        server.stop();
    });

    std::printf("educhain gateway for %s on http://%s:%d\n", u.name.c_str(), config.host.c_str(), config.port);
    std::printf("bootstrap logins: registrar / %s, auditor / %s\n",
                harness::Testbed::default_password("registrar").c_str(),
                harness::Testbed::default_password("auditor").c_str());
    std::printf("signing keys: educhain key derive --seed %llu --label %s/registrar (or %s/auditor)\n",
                static_cast<unsigned long long>(tb.config().rngSeed), u.name.c_str(), u.name.c_str());
    std::fflush(stdout);

    bool listened = server.listen(config.host, config.port);
    g_stop = true;
    clock.join();
    if (!listened) {
        std::fprintf(stderr, "error: cannot listen on %s:%d\n", config.host.c_str(), config.port);
        return 1;
    }
    return 0;
}

}  // namespace educhain::tools
