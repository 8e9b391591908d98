#include "educhain/harness/testbed.hpp"

#include <algorithm>
#include <sodium.h>

#include "educhain/error.hpp"
#include "educhain/state/schema.hpp"

namespace educhain::harness {

namespace {

constexpr const char* kDepartments[] = {"registrar", "cs", "ee", "me", "bio", "law", "math", "art"};

std::string department_label(std::size_t i) {
    if (i < std::size(kDepartments)) return kDepartments[i];
    return "dept" + std::to_string(i);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::string& fault_node(const FaultKind& kind) {
    return std::visit([](const auto& f) -> const std::string& { return f.node; }, kind);
}

}  // namespace

void NetworkConfig::validate() const {
    if (universities.empty()) throw Error(Errc::ConfigInvalid, "at least one university is required");
    std::set<std::string> names;
    for (const auto& u : universities) {
        if (u.name.empty() || u.name.find('-') != std::string::npos || u.name.find('/') != std::string::npos)
            throw Error(Errc::ConfigInvalid, "university names must be non-empty without '-' or '/'");
        if (u.name == Testbed::kMinistry) throw Error(Errc::ConfigInvalid, "'MINISTRY' is reserved");
        if (!names.insert(u.name).second) throw Error(Errc::ConfigInvalid, "duplicate university " + u.name);
        if (u.nodes < 1 || u.nodes > 64) throw Error(Errc::ConfigInvalid, "nodes per university must be 1..64");
    }
    if (latencyMin < 1 || latencyMax < latencyMin) throw Error(Errc::ConfigInvalid, "need 1 <= latencyMin <= latencyMax");
    if (!(lossRate >= 0.0 && lossRate < 1.0)) throw Error(Errc::ConfigInvalid, "lossRate must be in [0, 1)");
    if (clockStep < 1) throw Error(Errc::ConfigInvalid, "clockStep must be positive");
    if (maxPeers < 2) throw Error(Errc::ConfigInvalid, "maxPeers must be at least 2");
    chainConfig.validate();
}

std::string_view fault_kind_name(const FaultKind& kind) noexcept {
    return std::visit(overloaded{[](const TamperRow&) { return std::string_view("TamperRow"); },
                                 [](const DropMessages&) { return std::string_view("DropMessages"); },
                                 [](const CrashNode&) { return std::string_view("CrashNode"); },
                                 [](const LagNode&) { return std::string_view("LagNode"); }},
                      kind);
}

std::vector<std::pair<std::string, std::string>> fault_catalog() {
    return {
        {"TamperRow", "node, table, rowKey, field, value: direct database write that bypasses the chain"},
        {"DropMessages", "node, fraction, window: drop that share of block traffic to or from the node for window ms"},
        {"CrashNode", "node, window: node unreachable (no traffic, no production, abstains from audits) for window ms"},
        {"LagNode", "node, blocks: node ignores block traffic until it has missed that many new blocks"},
    };
}

chain::PrivateNode* University::node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n->id() == id) return n.get();
    if (hubNode && hubNode->id() == id) return hubNode.get();
    return nullptr;
}

Testbed::Testbed(NetworkConfig config) : config_(std::move(config)) {
    config_.validate();
    rng_.seed(config_.rngSeed);
    nextTick_ = config_.clockStep;

    consortium::Membership members;
    for (const auto& u : config_.universities) members[u.name] = key("member-" + u.name).public_key();
    members[kMinistry] = key(std::string("member-") + kMinistry).public_key();
    ordering_ = std::make_unique<consortium::OrderingService>(key("ordering"), members);
    ministry_ = std::make_unique<consortium::Member>(kMinistry, ordering_->public_key(), members);
    for (const auto& uni : config_.universities) build_university(uni);
    ordering_->set_delivery([this](const consortium::ConsortiumEntry& e) {
        for (auto& u : universities_) u->member->receive(e);
        ministry_->receive(e);
    });
}

ledger::Hash256 derive_seed(std::uint64_t seed, const std::string& label) {
    return ledger::digest_sha256("educhain-sim|" + std::to_string(seed) + "|" + label);
}

ledger::KeyPair derive_key(std::uint64_t seed, const std::string& label) {
    return ledger::KeyPair::from_seed(derive_seed(seed, label));
}

ledger::KeyPair Testbed::key(const std::string& label) const { return derive_key(config_.rngSeed, label); }

void Testbed::build_university(const UniversitySpec& uni) {
    auto u = std::make_unique<University>();
    u->name = uni.name;
    u->config = config_.chainConfig;
    u->config.chainId = config_.chainConfig.chainId + universities_.size();
    u->config.maxPeers = config_.maxPeers;
    u->config.genesisAccounts.push_back(
        {key(uni.name + "/registrar").public_key(), ledger::Role::Registrar, "REG", uni.name + " registrar"});
    u->config.genesisAccounts.push_back(
        {key(uni.name + "/auditor").public_key(), ledger::Role::Auditor, "AUD", uni.name + " audit service"});

    audit::NodeRegistry registry;
    gateway::RouteTable routes;
    for (std::size_t i = 0; i < uni.nodes; ++i) {
        auto id = uni.name + "-n" + std::to_string(i);
        auto dept = department_label(i);
        u->nodes.push_back(std::make_unique<chain::PrivateNode>(id, dept, u->config, key("node/" + id)));
        u->departments.push_back(dept);
        registry[id] = u->nodes.back()->node_key().public_key();
        routes.departments[dept] = id;
        nodeIndex_[id] = u->nodes.back().get();
    }
    routes.fallback = u->nodes.back()->id();
    auto hubId = uni.name + "-hub";
    u->hubNode = std::make_unique<chain::PrivateNode>(hubId, "hub", u->config, key("node/" + hubId),
                                                      chain::NodeOptions{8192, 256, false});
    nodeIndex_[hubId] = u->hubNode.get();

    consortium::Membership members;
    for (const auto& other : config_.universities) members[other.name] = key("member-" + other.name).public_key();
    members[kMinistry] = key(std::string("member-") + kMinistry).public_key();
    u->member = std::make_unique<consortium::Member>(uni.name, ordering_->public_key(), members);
    u->hub = std::make_unique<hub::HubNode>(uni.name, key("member-" + uni.name), *u->hubNode, *u->member,
                                            [this](const consortium::Submission& s) { return ordering_->submit(s); });
    u->auditor = std::make_unique<audit::Auditor>(key(uni.name + "/auditor"), registry);

    gateway::GatewayOptions gopts;
    gopts.pwhashOps = crypto_pwhash_OPSLIMIT_MIN;
    gopts.pwhashMemBytes = crypto_pwhash_MEMLIMIT_MIN;
    u->gateway = std::make_unique<gateway::Gateway>(
        routes, [this](const std::string& id) { return reachable(id) ? find_node(id) : nullptr; },
        [this] { return now_; }, gopts);
    u->gateway->set_verifier(ministry_.get());
    auto* raw = u.get();
    u->gateway->set_audit({u->auditor.get(), [this, raw] { return audit_handles(*raw); }, 64});
    u->gateway->enroll("registrar", default_password("registrar"), key(uni.name + "/registrar").public_key(),
                       "registrar");
    u->gateway->enroll("auditor", default_password("auditor"), key(uni.name + "/auditor").public_key(), "registrar");

    wire_peers(*u);
    universities_.push_back(std::move(u));
}

// Ring lattice over the university's nodes (departments then hub): each node
// links to the floor(maxPeers/2) nearest on either side, or to everyone when
// that fits within maxPeers.
void Testbed::wire_peers(University& u) {
    std::vector<chain::PrivateNode*> ring;
    for (auto& n : u.nodes) ring.push_back(n.get());
    ring.push_back(u.hubNode.get());
    const std::size_t m = ring.size();
    const std::size_t reach = m - 1 <= config_.maxPeers ? m : config_.maxPeers / 2;
    for (std::size_t i = 0; i < m; ++i) {
        std::set<std::size_t> linked;
        for (std::size_t d = 1; d <= reach && d < m; ++d) {
            linked.insert((i + d) % m);
            linked.insert((i + m - d % m) % m);
        }
        linked.erase(i);
        auto& list = peers_[ring[i]->id()];
        for (auto j : linked) list.push_back(ring[j]->id());
        auto id = ring[i]->id();
        ring[i]->set_broadcaster([this, id](const ledger::Block& b) {
            for (const auto& p : peers_.at(id)) send(id, p, Message{id, p, Message::Kind::Block, b, {}});
        });
    }
}

University& Testbed::university(const std::string& name) {
    for (auto& u : universities_)
        if (u->name == name) return *u;
    throw Error(Errc::UnknownTarget, "unknown university " + name);
}

chain::PrivateNode* Testbed::find_node(const std::string& id) const {
    auto it = nodeIndex_.find(id);
    return it == nodeIndex_.end() ? nullptr : it->second;
}

std::vector<chain::PrivateNode*> Testbed::all_nodes() const {
    std::vector<chain::PrivateNode*> out;
    for (const auto& u : universities_) {
        for (const auto& n : u->nodes) out.push_back(n.get());
        out.push_back(u->hubNode.get());
    }
    return out;
}

const std::vector<std::string>& Testbed::peers(const std::string& nodeId) const {
    auto it = peers_.find(nodeId);
    if (it == peers_.end()) throw Error(Errc::UnknownTarget, "unknown node " + nodeId);
    return it->second;
}

bool Testbed::reachable(const std::string& nodeId) const {
    auto it = crashedUntil_.find(nodeId);
    return it == crashedUntil_.end() || now_ >= it->second;
}

std::vector<audit::NodeHandle> Testbed::audit_handles(const University& u) const {
    std::vector<audit::NodeHandle> out;
    for (const auto& n : u.nodes) out.push_back({n.get(), reachable(n->id())});
    return out;
}

std::string Testbed::university_of(const std::string& nodeId) const { return nodeId.substr(0, nodeId.find('-')); }

bool Testbed::dropped_by_faults(const std::string& node) {
    auto it = dropping_.find(node);
    if (it == dropping_.end() || now_ >= it->second.second) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < it->second.first;
}

void Testbed::send(const std::string& from, const std::string& to, Message msg) {
    ++stats_.sent;
    if (msg.kind == Message::Kind::SyncRequest) ++stats_.syncRequests;
    bool lost = !reachable(from) || !reachable(to);
    if (!lost && config_.lossRate > 0.0)
        lost = std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < config_.lossRate;
    if (!lost) lost = dropped_by_faults(from) || dropped_by_faults(to);
    if (lost) {
        ++stats_.dropped;
        return;
    }
    auto latency = std::uniform_int_distribution<std::uint64_t>(config_.latencyMin, config_.latencyMax)(rng_);
    auto& link = linkClock_[{from, to}];
    auto at = std::max(now_ + latency, link);
    link = at;
    auto index = nextMessage_++;
    messages_.emplace(index, std::move(msg));
    ++inFlight_;
    events_.push({at, seq_++, Event::Kind::Deliver, index});
}

void Testbed::deliver(const Message& msg) {
    auto* node = find_node(msg.to);
    if (!reachable(msg.to)) {
        ++stats_.dropped;
        return;
    }
    if (msg.kind == Message::Kind::SyncRequest) {
        ++stats_.delivered;
        if (const auto* b = node->find_block(msg.wanted))
            send(msg.to, msg.from, Message{msg.to, msg.from, Message::Kind::Sync, *b, {}});
        return;
    }
    if (auto lag = lagBlocks_.find(msg.to); lag != lagBlocks_.end()) {
        ++stats_.dropped;
        auto hash = msg.block.hash();
        if (!node->find_block(hash) && lagIgnored_[msg.to].insert(hash).second &&
            lagIgnored_[msg.to].size() >= lag->second) {
            lagBlocks_.erase(lag);
            lagShadow_[msg.to] = std::move(lagIgnored_[msg.to]);
            lagIgnored_.erase(msg.to);
            faultLog_.push_back({now_, "LagNode", msg.to, "ended"});
        }
        return;
    }
    if (auto shadow = lagShadow_.find(msg.to); shadow != lagShadow_.end() && msg.kind == Message::Kind::Block &&
                                                shadow->second.count(msg.block.hash())) {
        ++stats_.dropped;
        return;
    }
    ++stats_.delivered;
    auto result = node->import_block(msg.block);
    if (result.status == chain::ImportStatus::SideBranch) ++stats_.sideBranches;
    if (result.reorg) ++stats_.reorgs;
    switch (result.status) {
        case chain::ImportStatus::Applied:
        case chain::ImportStatus::SideBranch:
            for (const auto& p : peers_.at(msg.to))
                if (p != msg.from) send(msg.to, p, Message{msg.to, p, Message::Kind::Block, msg.block, {}});
            break;
        case chain::ImportStatus::Queued:
            send(msg.to, msg.from,
                 Message{msg.to, msg.from, Message::Kind::SyncRequest, {}, msg.block.header.parentHash});
            break;
        default: break;
    }
}

void Testbed::inject_fault(FaultSpec fault) {
    const auto& nodeId = fault_node(fault.kind);
    if (!find_node(nodeId)) throw Error(Errc::UnknownTarget, "unknown node '" + nodeId + "'");
    std::visit(overloaded{[](const TamperRow& f) {
                              if (!state::parse_table(f.table))
                                  throw Error(Errc::UnknownTarget, "unknown table '" + f.table + "'");
                          },
                          [](const DropMessages& f) {
                              if (!(f.fraction >= 0.0 && f.fraction <= 1.0))
                                  throw Error(Errc::ConfigInvalid, "fraction must be in [0, 1]");
                          },
                          [](const auto&) {}},
               fault.kind);
    auto index = faults_.size();
    faults_.push_back(std::move(fault));
    if (faults_[index].scheduledAt <= now_)
        apply_fault(index);
    else
        events_.push({faults_[index].scheduledAt, seq_++, Event::Kind::Fault, index});
}

void Testbed::apply_fault(std::size_t index) {
    const auto& fault = faults_[index];
    const auto& nodeId = fault_node(fault.kind);
    FaultRecord rec{now_, std::string(fault_kind_name(fault.kind)), nodeId, "applied"};
    std::visit(overloaded{[&](const TamperRow& f) {
                              try {
                                  find_node(f.node)->database().write_direct(state::table_from_name(f.table),
                                                                             state::RowKey::parse(f.rowKey), f.field,
                                                                             f.newValue);
                                  rec.detail = "applied " + f.table + " " + f.rowKey + " " + f.field + "=" + f.newValue;
                              } catch (const Error& e) {
                                  rec.detail = std::string("failed: ") + e.what();
                              }
                          },
                          [&](const DropMessages& f) {
                              dropping_[f.node] = {f.fraction, now_ + f.window};
                              events_.push({now_ + f.window, seq_++, Event::Kind::FaultEnd, index});
                          },
                          [&](const CrashNode& f) {
                              crashedUntil_[f.node] = now_ + f.window;
                              events_.push({now_ + f.window, seq_++, Event::Kind::FaultEnd, index});
                          },
                          [&](const LagNode& f) {
                              if (f.blocks > 0) lagBlocks_[f.node] = f.blocks;
                              rec.detail = "applied " + std::to_string(f.blocks) + " blocks";
                          }},
               fault.kind);
    faultLog_.push_back(std::move(rec));
}

void Testbed::end_fault(std::size_t index) {
    const auto& fault = faults_[index];
    faultLog_.push_back({now_, std::string(fault_kind_name(fault.kind)), fault_node(fault.kind), "ended"});
}

void Testbed::tick() {
    for (auto& u : universities_) {
        u->hub->service_channels();
        for (auto& n : u->nodes)
            if (reachable(n->id()) && !n->mempool().empty()) n->produce_block(now_);
    }
}

void Testbed::run_events_until(std::uint64_t t) {
    while (true) {
        bool haveEvent = !events_.empty() && events_.top().at <= t;
        bool haveTick = nextTick_ <= t;
        if (!haveEvent && !haveTick) break;
        if (haveEvent && (!haveTick || events_.top().at <= nextTick_)) {
            auto ev = events_.top();
            events_.pop();
            now_ = std::max(now_, ev.at);
            switch (ev.kind) {
                case Event::Kind::Deliver: {
                    auto node = messages_.extract(ev.index);
                    --inFlight_;
                    deliver(node.mapped());
                    break;
                }
                case Event::Kind::Fault: apply_fault(ev.index); break;
                case Event::Kind::FaultEnd: end_fault(ev.index); break;
            }
        } else {
            now_ = std::max(now_, nextTick_);
            nextTick_ += config_.clockStep;
            tick();
        }
    }
    now_ = std::max(now_, t);
}

void Testbed::advance(std::uint64_t ms) { run_events_until(now_ + ms); }

bool Testbed::converged() const {
    for (const auto& u : universities_) {
        std::optional<ledger::Hash256> tip;
        auto check = [&](const chain::PrivateNode& n) {
            if (!reachable(n.id()) || lagBlocks_.count(n.id())) return true;
            auto h = n.tip().hash();
            if (!tip) tip = h;
            return *tip == h;
        };
        for (const auto& n : u->nodes)
            if (!check(*n)) return false;
        if (!check(*u->hubNode)) return false;
    }
    return true;
}

// Anti-entropy: every live node offers its tip to its peers; a peer that is
// behind answers with sync requests for the missing ancestors.
void Testbed::announce_tips() {
    for (auto* n : all_nodes()) {
        if (!reachable(n->id())) continue;
        for (const auto& p : peers_.at(n->id()))
            send(n->id(), p, Message{n->id(), p, Message::Kind::Sync, n->tip(), {}});
    }
}

void Testbed::break_ties() {
    for (auto& u : universities_) {
        std::set<ledger::Hash256> distinct;
        chain::PrivateNode* first = nullptr;
        for (const auto& n : u->nodes) {
            if (!reachable(n->id()) || lagBlocks_.count(n->id())) continue;
            distinct.insert(n->tip().hash());
            if (!first) first = n.get();
        }
        if (reachable(u->hubNode->id())) distinct.insert(u->hubNode->tip().hash());
        if (distinct.size() > 1 && first) first->produce_empty_block(now_);
    }
}

bool Testbed::settle(std::uint64_t limitMs) {
    const auto deadline = now_ + limitMs;
    auto idle = [&] {
        if (inFlight_ != 0) return false;
        for (auto* n : all_nodes())
            if (reachable(n->id()) && !n->mempool().empty()) return false;
        return true;
    };
    auto tips = [&] {
        std::vector<ledger::Hash256> out;
        for (auto* n : all_nodes()) out.push_back(n->tip().hash());
        return out;
    };
    std::optional<std::vector<ledger::Hash256>> announced;
    while (now_ < deadline) {
        advance(config_.clockStep);
        if (!idle()) continue;
        if (converged()) return true;
        auto current = tips();
        // Announcing changed nothing: equal-length branches under first-seen
        // fork choice. One node extends its branch to end the tie.
        if (announced && *announced == current) break_ties();
        announced = std::move(current);
        announce_tips();
    }
    return idle() && converged();
}

}  // namespace educhain::harness
