#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "educhain/chain/private_node.hpp"
#include "educhain/ledger/digest.hpp"
#include "educhain/state/checksum.hpp"

namespace educhain::audit {

struct DigestVote {
    std::string roundId;
    std::string nodeId;
    std::string table;
    ledger::Hash128 digest;
    ledger::Signature signature;

    Bytes signing_bytes() const;
    ledger::FieldMap fields() const;
};

// A node's view as seen by the auditor: unreachable nodes abstain.
struct NodeHandle {
    chain::PrivateNode* node = nullptr;
    bool reachable = true;
};

// Node id -> vote-signing key, fixed when the network is built.
using NodeRegistry = std::map<std::string, ledger::PublicKey>;

DigestVote cast_vote(const chain::PrivateNode& node, state::TableId table, const std::string& roundId);

struct VoteCollection {
    std::vector<DigestVote> votes;      // valid, one per node
    std::vector<std::string> abstentions;
    std::vector<std::string> discarded;  // bad signature, unknown or duplicate voter
};

// Keeps votes that verify against the registry, one per node.
VoteCollection admit_votes(const std::vector<DigestVote>& raw, const NodeRegistry& registry);
// Throws NoNodesReachable.
VoteCollection collect_digests(const std::vector<NodeHandle>& nodes, state::TableId table, const std::string& roundId,
                               const NodeRegistry& registry);

struct Consensus {
    std::optional<ledger::Hash128> digest;  // nullopt: Ambiguous
    std::set<std::string> divergent;
};

// Strict majority of the votes cast wins; without one the result is
// Ambiguous with no divergent nodes, pending the replay oracle.
Consensus vote_consensus(const std::vector<DigestVote>& votes);

struct LocalizedRow {
    state::RowKey key;
    std::optional<state::Row> localValue;      // nullopt: absent on the node
    std::optional<state::Row> referenceValue;  // nullopt: absent on the reference
};

struct Localization {
    std::vector<LocalizedRow> rows;
    std::uint32_t levels = 0;         // narrowing levels below the first pass, row fetch included
    std::uint32_t exchanges = 0;      // range checksums compared
    std::uint32_t rowFetches = 0;
};

// Compares range checksums over the reference's chunk boundaries, halving
// the chunk size inside differing ranges down to single rows. Returns the
// exact differing keys, including one-sided ones. Throws TablesEqual,
// BadChunkSize.
Localization localize_divergence(const state::FinalStateDb& node, const state::FinalStateDb& reference,
                                 state::TableId table, std::size_t chunkSize);

struct Oracle {
    std::string sourceNodeId;  // node whose chain is the longest valid one
    std::uint64_t height = 0;
    state::FinalStateDb db;
};

// Replays the longest chain among the reachable nodes that validates.
// Throws ChainUnavailable.
Oracle build_oracle(const std::vector<NodeHandle>& nodes);
// Authoritative value per key (nullopt: the row must not exist).
std::map<state::RowKey, std::optional<state::Row>> adjudicate(const Oracle& oracle, state::TableId table,
                                                              const std::vector<state::RowKey>& keys);

struct Fix {
    state::TableId table;
    state::RowKey key;
    std::optional<state::Row> expected;       // the node's value at localization
    std::optional<state::Row> authoritative;
};

// Applies fixes to `target`'s database and records each as an AuditRepair
// transaction submitted through `via` (target itself when it accepts user
// transactions). Throws PermissionDenied for a non-auditor key and StaleFix
// when a row changed since localization; fixes before the stale one stay
// applied. Returns the number of repairs.
std::size_t repair(chain::PrivateNode& target, chain::PrivateNode& via, const ledger::KeyPair& auditor,
                   const std::vector<Fix>& fixes, const std::string& auditId, std::uint64_t timestamp);

struct RowFinding {
    state::RowKey key;
    std::optional<state::Row> localValue;
    std::optional<state::Row> authoritativeValue;  // from the replay oracle
};

enum class Source { MajorityVote, ReplayOracle };
std::string_view source_name(Source s) noexcept;

struct AuditReport {
    std::string roundId;
    std::string table;
    std::optional<ledger::Hash128> consensusDigest;  // nullopt only if nothing could be decided
    bool voteAmbiguous = false;
    std::vector<DigestVote> votes;
    std::vector<std::string> abstentions;
    std::vector<std::string> discardedVotes;
    std::set<std::string> divergentNodes;
    std::set<std::string> missingBlocks;  // divergent because their chain is behind
    std::map<std::string, std::vector<RowFinding>> localizedRows;
    std::map<std::string, std::uint32_t> narrowingLevels;
    std::uint32_t checksumExchanges = 0;
    double wallSeconds = 0;  // measured; in to_json() only, never encoded
    Source adjudicationSource = Source::MajorityVote;
    std::size_t repairsApplied = 0;
    std::size_t blocksSynced = 0;
    std::vector<std::string> errors;

    ledger::FieldMap fields() const;
    Bytes encode() const { return fields().encode(); }
    nlohmann::json to_json() const;
};

struct AuditOptions {
    std::size_t chunkSize = 64;
    std::uint64_t timestamp = 0;
    bool repair = true;
};

// Serializes rounds; runs collect -> vote -> adjudicate -> localize ->
// repair per table and keeps every report.
class Auditor {
public:
    Auditor(ledger::KeyPair key, NodeRegistry registry) : key_(std::move(key)), registry_(std::move(registry)) {}

    const ledger::KeyPair& key() const noexcept { return key_; }
    std::vector<AuditReport> run_round(const std::vector<NodeHandle>& nodes, const std::vector<state::TableId>& tables,
                                       const AuditOptions& options);
    const std::vector<AuditReport>& reports() const noexcept { return reports_; }

private:
    AuditReport run_table(const std::vector<NodeHandle>& nodes, state::TableId table, const std::string& roundId,
                          const AuditOptions& options);

    ledger::KeyPair key_;
    NodeRegistry registry_;
    std::mutex mu_;
    std::uint64_t rounds_ = 0;
    std::optional<Oracle> oracle_;  // built at most once per round
    std::vector<AuditReport> reports_;
};

}  // namespace educhain::audit
