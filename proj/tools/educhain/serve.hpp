#pragma once

#include <cstdint>
#include <string>

#include "educhain/harness/testbed.hpp"

namespace educhain::tools {

struct ServeConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string university;        // empty: the first one
    std::uint64_t tickMs = 10;     // wall-clock ms per logical clock step
    harness::NetworkConfig network;
};

// Reads the YAML config (host, port, university, tickMs, network), then
// applies EDUCHAIN_HOST / EDUCHAIN_PORT from the environment.
ServeConfig load_serve_config(const std::string& path);

// Runs the testbed on a wall-clock driven logical clock and exposes one
// university's gateway over HTTP until SIGINT/SIGTERM. Returns the exit code.
int serve(const ServeConfig& config);

}  // namespace educhain::tools
