#include "educhain/audit/audit.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "educhain/chain/replay.hpp"
#include "educhain/ledger/snapshot.hpp"

namespace educhain::audit {

using ledger::FieldMap;
using ledger::Hash128;
using state::FinalStateDb;
using state::KeyRange;
using state::RowKey;
using state::TableId;

Bytes DigestVote::signing_bytes() const {
    FieldMap m;
    m.set_string("roundId", roundId).set_string("nodeId", nodeId).set_string("table", table).set_hex("digest",
                                                                                                      digest.view());
    return m.encode();
}

FieldMap DigestVote::fields() const {
    FieldMap m;
    m.set_string("roundId", roundId)
        .set_string("nodeId", nodeId)
        .set_string("table", table)
        .set_hex("digest", digest.view())
        .set_hex("signature", signature.view());
    return m;
}

DigestVote cast_vote(const chain::PrivateNode& node, TableId table, const std::string& roundId) {
    DigestVote v{roundId, node.id(), std::string(state::table_name(table)),
                 state::table_digest(node.database(), table), {}};
    v.signature = node.node_key().sign(v.signing_bytes());
    return v;
}

VoteCollection admit_votes(const std::vector<DigestVote>& raw, const NodeRegistry& registry) {
    VoteCollection out;
    std::set<std::string> seen;
    for (const auto& v : raw) {
        auto key = registry.find(v.nodeId);
        if (key == registry.end() || seen.count(v.nodeId) ||
            !ledger::verify_signature(key->second, v.signing_bytes(), v.signature)) {
            out.discarded.push_back(v.nodeId);
            continue;
        }
        seen.insert(v.nodeId);
        out.votes.push_back(v);
    }
    return out;
}

VoteCollection collect_digests(const std::vector<NodeHandle>& nodes, TableId table, const std::string& roundId,
                               const NodeRegistry& registry) {
    std::vector<DigestVote> raw;
    std::vector<std::string> abstentions;
    for (const auto& h : nodes) {
        if (h.reachable) raw.push_back(cast_vote(*h.node, table, roundId));
        else abstentions.push_back(h.node->id());
    }
    if (raw.empty()) throw Error(Errc::NoNodesReachable, "no node answered the digest request");
    auto out = admit_votes(raw, registry);
    out.abstentions = std::move(abstentions);
    return out;
}

Consensus vote_consensus(const std::vector<DigestVote>& votes) {
    std::map<Hash128, std::size_t> tally;
    for (const auto& v : votes) ++tally[v.digest];
    Consensus c;
    for (const auto& [digest, count] : tally)
        if (2 * count > votes.size()) c.digest = digest;
    if (c.digest)
        for (const auto& v : votes)
            if (v.digest != *c.digest) c.divergent.insert(v.nodeId);
    return c;
}

namespace {

class Narrower {
public:
    Narrower(const FinalStateDb& node, const FinalStateDb& ref, TableId table, Localization& loc)
        : node_(node), ref_(ref), table_(table), loc_(loc), keys_(state::keys_in_range(ref, table, {})) {}

    // Splits reference keys [a, b) into chunks of `size` within `range` and
    // descends into the ones whose checksums differ.
    void pass(const KeyRange& range, std::size_t a, std::size_t b, std::size_t size, std::uint32_t depth) {
        if (b - a <= 1 && depth > 0) {
            fetch_rows(range, depth);
            return;
        }
        std::size_t start = a;
        do {
            std::size_t end = std::min(b, start + size);
            KeyRange sub{start == a ? range.lo : std::optional<RowKey>(keys_[start]),
                         end == b ? range.hi : std::optional<RowKey>(keys_[end])};
            ++loc_.exchanges;
            if (state::range_checksum(node_, table_, sub) != state::range_checksum(ref_, table_, sub)) {
                if (end - start <= 1) fetch_rows(sub, depth + 1);
                else pass(sub, start, end, std::max<std::size_t>(1, size / 2), depth + 1);
            }
            start = end;
        } while (start < b);
    }

    std::size_t key_count() const { return keys_.size(); }

private:
    void fetch_rows(const KeyRange& range, std::uint32_t depth) {
        loc_.levels = std::max(loc_.levels, depth);
        std::set<RowKey> keys;
        for (auto& k : state::keys_in_range(node_, table_, range)) keys.insert(std::move(k));
        for (auto& k : state::keys_in_range(ref_, table_, range)) keys.insert(std::move(k));
        for (const auto& k : keys) {
            ++loc_.rowFetches;
            auto mine = node_.find(table_, k);
            auto theirs = ref_.find(table_, k);
            if (mine != theirs) loc_.rows.push_back({k, std::move(mine), std::move(theirs)});
        }
    }

    const FinalStateDb& node_;
    const FinalStateDb& ref_;
    TableId table_;
    Localization& loc_;
    std::vector<RowKey> keys_;
};

}  // namespace

Localization localize_divergence(const FinalStateDb& node, const FinalStateDb& reference, TableId table,
                                 std::size_t chunkSize) {
    if (chunkSize == 0) throw Error(Errc::BadChunkSize, "chunk size must be at least 1");
    if (state::table_digest(node, table) == state::table_digest(reference, table))
        throw Error(Errc::TablesEqual, std::string(state::table_name(table)));
    Localization loc;
    Narrower n(node, reference, table, loc);
    // The first pass covers the whole key space, so keys outside the
    // reference's range still land in the first or last chunk.
    n.pass({}, 0, n.key_count(), chunkSize, 0);
    return loc;
}

Oracle build_oracle(const std::vector<NodeHandle>& nodes) {
    std::vector<const chain::PrivateNode*> candidates;
    for (const auto& h : nodes)
        if (h.reachable) candidates.push_back(h.node);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto* a, const auto* b) { return a->height() > b->height(); });
    for (const auto* n : candidates) {
        try {
            return Oracle{n->id(), n->height(), chain::replay_state(n->chain(), n->config())};
        } catch (const Error& e) {
            if (e.code() != Errc::InvalidChain) throw;
        }
    }
    throw Error(Errc::ChainUnavailable, "no reachable node holds a valid chain");
}

std::map<RowKey, std::optional<state::Row>> adjudicate(const Oracle& oracle, TableId table,
                                                       const std::vector<RowKey>& keys) {
    std::map<RowKey, std::optional<state::Row>> out;
    for (const auto& k : keys) out[k] = oracle.db.find(table, k);
    return out;
}

std::size_t repair(chain::PrivateNode& target, chain::PrivateNode& via, const ledger::KeyPair& auditor,
                   const std::vector<Fix>& fixes, const std::string& auditId, std::uint64_t timestamp) {
    const auto actor = auditor.account();
    const auto* acct = via.state().account(actor);
    if (!acct || acct->role != ledger::Role::Auditor)
        throw Error(Errc::PermissionDenied, "repairs require an auditor key");

    std::size_t applied = 0;
    auto& db = target.database();
    for (const auto& fix : fixes) {
        if (db.find(fix.table, fix.key) != fix.expected)
            throw Error(Errc::StaleFix, std::string(state::table_name(fix.table)) + " row " + fix.key.str() +
                                            " changed since localization");
        auto hex_row = [&](const std::optional<state::Row>& row) {
            return row ? to_hex(state::encode_row(fix.table, fix.key, *row)) : std::string{};
        };
        ledger::AuditRepair op{std::string(state::table_name(fix.table)), fix.key.str(), "*", hex_row(fix.expected),
                               hex_row(fix.authoritative), auditId};
        auto tx = ledger::Transaction::make_signed(auditor, via.next_nonce(actor), op, timestamp);
        auto submitted = via.submit_transaction(tx);
        if (!submitted.accepted) throw Error(*submitted.error, "AuditRepair not accepted: " + submitted.reason);

        if (fix.authoritative) db.put_row_direct(fix.table, fix.key, *fix.authoritative);
        else db.erase_row_direct(fix.table, fix.key);
        db.append_log(actor, "AuditFix", timestamp, target.height(), submitted.txHash);
        ++applied;
    }
    return applied;
}

std::string_view source_name(Source s) noexcept { return s == Source::MajorityVote ? "MajorityVote" : "ReplayOracle"; }

namespace {

template <class C>
FieldMap string_list(const C& items) {
    FieldMap m;
    std::size_t i = 0;
    for (const auto& s : items) m.set_string(ledger::index_key(i++), s);
    return m;
}

std::string row_hex(TableId table, const RowKey& key, const std::optional<state::Row>& row) {
    return row ? to_hex(state::encode_row(table, key, *row)) : std::string{};
}

nlohmann::json row_json(const std::optional<state::Row>& row) {
    if (!row) return nullptr;
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : *row) j[k] = v;
    return j;
}

}  // namespace

FieldMap AuditReport::fields() const {
    auto tableId = state::table_from_name(table);
    FieldMap votesMap;
    for (std::size_t i = 0; i < votes.size(); ++i) votesMap.set_map(ledger::index_key(i), votes[i].fields());
    FieldMap rows;
    for (const auto& [node, findings] : localizedRows) {
        FieldMap list;
        for (std::size_t i = 0; i < findings.size(); ++i) {
            FieldMap f;
            f.set_string("rowKey", findings[i].key.str())
                .set_string("localValue", row_hex(tableId, findings[i].key, findings[i].localValue))
                .set_string("authoritativeValue", row_hex(tableId, findings[i].key, findings[i].authoritativeValue));
            list.set_map(ledger::index_key(i), f);
        }
        rows.set_map(node, list);
    }
    FieldMap levels;
    for (const auto& [node, l] : narrowingLevels) levels.set_uint(node, l);

    FieldMap m;
    m.set_string("roundId", roundId)
        .set_string("table", table)
        .set_string("consensusDigest", consensusDigest ? consensusDigest->hex() : "")
        .set_uint("voteAmbiguous", voteAmbiguous ? 1 : 0)
        .set_map("votes", votesMap)
        .set_map("abstentions", string_list(abstentions))
        .set_map("discardedVotes", string_list(discardedVotes))
        .set_map("divergentNodes", string_list(divergentNodes))
        .set_map("missingBlocks", string_list(missingBlocks))
        .set_map("localizedRows", rows)
        .set_map("narrowingLevels", levels)
        .set_uint("checksumExchanges", checksumExchanges)
        .set_string("adjudicationSource", source_name(adjudicationSource))
        .set_uint("repairsApplied", repairsApplied)
        .set_uint("blocksSynced", blocksSynced)
        .set_map("errors", string_list(errors));
    return m;
}

nlohmann::json AuditReport::to_json() const {
    nlohmann::json j;
    j["roundId"] = roundId;
    j["table"] = table;
    j["consensusDigest"] = consensusDigest ? nlohmann::json(consensusDigest->hex()) : nlohmann::json("Ambiguous");
    j["voteAmbiguous"] = voteAmbiguous;
    j["votes"] = nlohmann::json::array();
    for (const auto& v : votes) j["votes"].push_back({{"nodeId", v.nodeId}, {"digest", v.digest.hex()}});
    j["abstentions"] = abstentions;
    j["discardedVotes"] = discardedVotes;
    j["divergentNodes"] = divergentNodes;
    j["missingBlocks"] = missingBlocks;
    j["localizedRows"] = nlohmann::json::object();
    for (const auto& [node, findings] : localizedRows) {
        auto& list = j["localizedRows"][node] = nlohmann::json::array();
        for (const auto& f : findings)
            list.push_back({{"rowKey", f.key.str()},
                            {"localValue", row_json(f.localValue)},
                            {"authoritativeValue", row_json(f.authoritativeValue)}});
    }
    j["narrowingLevels"] = narrowingLevels;
    j["checksumExchanges"] = checksumExchanges;
    j["wallSeconds"] = wallSeconds;
    j["adjudicationSource"] = source_name(adjudicationSource);
    j["repairsApplied"] = repairsApplied;
    j["blocksSynced"] = blocksSynced;
    j["errors"] = errors;
    return j;
}

std::vector<AuditReport> Auditor::run_round(const std::vector<NodeHandle>& nodes, const std::vector<TableId>& tables,
                                            const AuditOptions& options) {
    std::lock_guard lock(mu_);
    auto roundId = "audit-" + std::to_string(rounds_++);
    oracle_.reset();
    std::vector<AuditReport> out;
    for (auto t : tables) {
        auto start = std::chrono::steady_clock::now();
        out.push_back(run_table(nodes, t, roundId, options));
        out.back().wallSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        reports_.push_back(out.back());
    }
    oracle_.reset();
    return out;
}

AuditReport Auditor::run_table(const std::vector<NodeHandle>& nodes, TableId table, const std::string& roundId,
                               const AuditOptions& options) {
    AuditReport r;
    r.roundId = roundId;
    r.table = std::string(state::table_name(table));

    VoteCollection vc;
    try {
        vc = collect_digests(nodes, table, roundId, registry_);
    } catch (const Error& e) {
        r.errors.push_back(e.what());
        return r;
    }
    r.votes = vc.votes;
    r.abstentions = vc.abstentions;
    r.discardedVotes = vc.discarded;
    if (vc.votes.empty()) {
        r.errors.push_back("no valid votes");
        return r;
    }

    auto consensus = vote_consensus(vc.votes);
    r.voteAmbiguous = !consensus.digest;
    auto oracle = [&]() -> const Oracle& {
        if (!oracle_) oracle_ = build_oracle(nodes);
        return *oracle_;
    };

    if (!consensus.digest || !consensus.divergent.empty()) {
        // Escalate: the chain outranks the vote.
        try {
            auto oracleDigest = state::table_digest(oracle().db, table);
            if (!consensus.digest || *consensus.digest != oracleDigest) r.adjudicationSource = Source::ReplayOracle;
            r.consensusDigest = oracleDigest;
        } catch (const Error& e) {
            r.errors.push_back(e.what());
            r.consensusDigest = consensus.digest;
            r.divergentNodes = consensus.divergent;
            return r;
        }
    } else {
        r.consensusDigest = consensus.digest;
    }
    for (const auto& v : r.votes)
        if (v.digest != *r.consensusDigest) r.divergentNodes.insert(v.nodeId);
    if (r.divergentNodes.empty()) return r;

    auto handle_of = [&](const std::string& id) -> chain::PrivateNode* {
        for (const auto& h : nodes)
            if (h.node->id() == id) return h.node;
        return nullptr;
    };
    const FinalStateDb* reference = &oracle().db;
    for (const auto& v : r.votes)
        if (v.digest == *r.consensusDigest) {
            reference = &handle_of(v.nodeId)->database();
            break;
        }
    chain::PrivateNode* source = handle_of(oracle().sourceNodeId);
    chain::PrivateNode* via = nullptr;
    for (const auto& h : nodes)
        if (h.reachable && h.node->accepts_user_transactions()) {
            via = h.node;
            break;
        }

    for (const auto& id : r.divergentNodes) {
        auto* node = handle_of(id);
        try {
            // Behind the oracle chain: fetch the missing blocks first.
            if (node->height() < oracle().height) {
                r.missingBlocks.insert(id);
                for (auto h = node->height() + 1; h <= oracle().height; ++h)
                    if (node->import_block(source->chain()[h]).status == chain::ImportStatus::Applied) ++r.blocksSynced;
                if (state::table_digest(node->database(), table) == *r.consensusDigest) continue;
            }
            auto loc = localize_divergence(node->database(), *reference, table, options.chunkSize);
            r.narrowingLevels[id] = loc.levels;
            r.checksumExchanges += loc.exchanges;
            std::vector<RowKey> keys;
            for (const auto& row : loc.rows) keys.push_back(row.key);
            auto authoritative = adjudicate(oracle(), table, keys);
            std::vector<Fix> fixes;
            auto& findings = r.localizedRows[id];
            for (const auto& row : loc.rows) {
                findings.push_back({row.key, row.localValue, authoritative.at(row.key)});
                fixes.push_back({table, row.key, row.localValue, authoritative.at(row.key)});
            }
            if (options.repair) {
                auto* through = node->accepts_user_transactions() ? node : via;
                if (!through) throw Error(Errc::NoNodeAvailable, "no node accepts the repair record");
                r.repairsApplied += repair(*node, *through, key_, fixes, roundId, options.timestamp);
            }
        } catch (const Error& e) {
            r.errors.push_back(id + ": " + e.what());
        }
    }
    return r;
}

}  // namespace educhain::audit
