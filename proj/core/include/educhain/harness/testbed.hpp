#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "educhain/audit/audit.hpp"
#include "educhain/chain/private_node.hpp"
#include "educhain/consortium/log.hpp"
#include "educhain/gateway/gateway.hpp"
#include "educhain/hub/hub.hpp"
#include "educhain/ledger/block.hpp"

namespace educhain::harness {

struct UniversitySpec {
    std::string name;
    std::size_t nodes = 5;
};

struct NetworkConfig {
    std::vector<UniversitySpec> universities{{"U1", 5}};
    std::uint64_t latencyMin = 5;  // logical ms, uniform
    std::uint64_t latencyMax = 20;
    double lossRate = 0.0;
    std::uint64_t rngSeed = 1;
    std::uint64_t clockStep = 10;  // block production tick
    std::uint32_t maxPeers = 7;
    ledger::ChainConfig chainConfig;  // genesis accounts are filled in per university

    // Throws Error(ConfigInvalid).
    void validate() const;
};

struct TamperRow {
    std::string node;
    std::string table;
    std::string rowKey;
    std::string field;
    std::string newValue;
};
struct DropMessages {
    std::string node;
    double fraction = 1.0;
    std::uint64_t window = 0;
};
struct CrashNode {
    std::string node;
    std::uint64_t window = 0;
};
struct LagNode {
    std::string node;
    std::uint64_t blocks = 0;
};

using FaultKind = std::variant<TamperRow, DropMessages, CrashNode, LagNode>;

struct FaultSpec {
    FaultKind kind;
    std::uint64_t scheduledAt = 0;  // logical ms; past times apply immediately
};

std::string_view fault_kind_name(const FaultKind& kind) noexcept;
// Names and parameters of every fault kind, for `sim faults --list`.
std::vector<std::pair<std::string, std::string>> fault_catalog();

struct FaultRecord {
    std::uint64_t at = 0;
    std::string kind;
    std::string node;
    std::string detail;  // "applied ...", "failed: ...", "ended"
};

struct MessageStats {
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t syncRequests = 0;
    std::uint64_t sideBranches = 0;  // imports stored on a fork
    std::uint64_t reorgs = 0;
};

// Key for `label` in a network seeded with `seed`; see Testbed::key.
ledger::Hash256 derive_seed(std::uint64_t seed, const std::string& label);
ledger::KeyPair derive_key(std::uint64_t seed, const std::string& label);

// One university: department nodes, the hub replica, its consortium member,
// its gateway and its audit service.
struct University {
    std::string name;
    ledger::ChainConfig config;
    std::vector<std::unique_ptr<chain::PrivateNode>> nodes;  // department nodes
    std::unique_ptr<chain::PrivateNode> hubNode;
    std::unique_ptr<consortium::Member> member;
    std::unique_ptr<hub::HubNode> hub;
    std::unique_ptr<audit::Auditor> auditor;
    std::unique_ptr<gateway::Gateway> gateway;
    std::vector<std::string> departments;  // parallel to nodes

    chain::PrivateNode* node(const std::string& id) const;
};

// Deterministic in-process network on a logical clock. Block gossip travels
// over a simulated transport with seeded latency and loss and FIFO links;
// the consortium ordering service delivers synchronously.
class Testbed {
public:
    static constexpr const char* kMinistry = "MINISTRY";

    explicit Testbed(NetworkConfig config);
    Testbed(const Testbed&) = delete;
    Testbed& operator=(const Testbed&) = delete;

    const NetworkConfig& config() const noexcept { return config_; }
    std::uint64_t now() const noexcept { return now_; }

    // Runs deliveries, faults and block-production ticks up to now + ms.
    void advance(std::uint64_t ms);
    // Advances until no message is in flight and every live mempool is empty
    // (or `limitMs` passes). Returns true when quiescent.
    bool settle(std::uint64_t limitMs = 60'000);
    // Every live, non-lagging node of each university shares one tip.
    bool converged() const;

    std::vector<std::unique_ptr<University>>& universities() noexcept { return universities_; }
    University& university(const std::string& name);
    University& university(std::size_t i) { return *universities_.at(i); }
    consortium::Member& ministry() noexcept { return *ministry_; }
    consortium::OrderingService& ordering() noexcept { return *ordering_; }

    // Department or hub node by id, nullptr if unknown.
    chain::PrivateNode* find_node(const std::string& id) const;
    std::vector<chain::PrivateNode*> all_nodes() const;  // department nodes, then hubs, per university
    const std::vector<std::string>& peers(const std::string& nodeId) const;
    bool reachable(const std::string& nodeId) const;
    std::vector<audit::NodeHandle> audit_handles(const University& u) const;

    // Deterministic key for a label, derived from the seed. Each university's
    // genesis registrar and auditor are key("<U>/registrar") and
    // key("<U>/auditor").
    ledger::KeyPair key(const std::string& label) const;
    static std::string default_password(const std::string& login) { return "pw-" + login; }

    // Throws UnknownTarget for unknown nodes or tables.
    void inject_fault(FaultSpec fault);
    const std::vector<FaultRecord>& fault_log() const noexcept { return faultLog_; }
    const MessageStats& stats() const noexcept { return stats_; }

private:
    struct Message {
        std::string from;
        std::string to;
        // Sync carries a block sent in answer to a request or as a tip announcement.
        enum class Kind { Block, SyncRequest, Sync } kind = Kind::Block;
        ledger::Block block;
        ledger::Hash256 wanted;
    };
    struct Event {
        std::uint64_t at;
        std::uint64_t seq;
        enum class Kind { Deliver, Fault, FaultEnd } kind;
        std::size_t index;  // into messages_ or faults_
        bool operator>(const Event& o) const { return std::tie(at, seq) > std::tie(o.at, o.seq); }
    };

    void build_university(const UniversitySpec& uni);
    void wire_peers(University& u);
    void send(const std::string& from, const std::string& to, Message msg);
    void deliver(const Message& msg);
    void apply_fault(std::size_t index);
    void end_fault(std::size_t index);
    void tick();
    void announce_tips();
    void break_ties();
    void run_events_until(std::uint64_t t);
    bool dropped_by_faults(const std::string& node);
    std::string university_of(const std::string& nodeId) const;

    NetworkConfig config_;
    std::mt19937_64 rng_;
    std::uint64_t now_ = 0;
    std::uint64_t nextTick_ = 0;
    std::uint64_t seq_ = 0;

    std::unique_ptr<consortium::OrderingService> ordering_;
    std::unique_ptr<consortium::Member> ministry_;
    std::vector<std::unique_ptr<University>> universities_;
    std::map<std::string, std::vector<std::string>> peers_;
    std::map<std::string, chain::PrivateNode*> nodeIndex_;

    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::map<std::size_t, Message> messages_;
    std::size_t nextMessage_ = 0;
    std::map<std::pair<std::string, std::string>, std::uint64_t> linkClock_;  // FIFO per link
    std::size_t inFlight_ = 0;

    std::vector<FaultSpec> faults_;
    std::vector<FaultRecord> faultLog_;
    std::map<std::string, std::uint64_t> crashedUntil_;
    std::map<std::string, std::pair<double, std::uint64_t>> dropping_;  // fraction, until
    std::map<std::string, std::uint64_t> lagBlocks_;
    std::map<std::string, std::set<ledger::Hash256>> lagIgnored_;
    // Blocks a lag skipped; late gossip copies stay ignored after it ends.
    std::map<std::string, std::set<ledger::Hash256>> lagShadow_;
    MessageStats stats_;
};

}  // namespace educhain::harness
