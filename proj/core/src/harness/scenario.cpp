#include "educhain/harness/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "educhain/chain/replay.hpp"
#include "educhain/error.hpp"
#include "educhain/state/checksum.hpp"
#include "educhain/state/schema.hpp"

namespace educhain::harness {

namespace {

using ledger::Role;

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined: return nullptr;
        case YAML::NodeType::Sequence: {
            json out = json::array();
            for (const auto& item : node) out.push_back(yaml_to_json(item));
            return out;
        }
        case YAML::NodeType::Map: {
            json out = json::object();
            for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return out;
        }
        case YAML::NodeType::Scalar: break;
    }
    const auto& text = node.Scalar();
    if (node.Tag() == "!") return text;  // quoted
    static const std::regex kUnsigned("[0-9]+"), kSigned("-[0-9]+"), kReal("-?[0-9]+\\.[0-9]+");
    if (std::regex_match(text, kUnsigned)) return std::stoull(text);
    if (std::regex_match(text, kSigned)) return std::stoll(text);
    if (std::regex_match(text, kReal)) return std::stod(text);
    if (text == "true") return true;
    if (text == "false") return false;
    if (text == "null" || text == "~") return nullptr;
    return text;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::ConfigInvalid, what); }

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string str(const json& p, const std::string& key) {
    if (!p.contains(key) || p.at(key).is_null()) invalid("missing '" + key + "'");
    return as_text(p.at(key));
}

std::string str_or(const json& p, const std::string& key, const std::string& fallback) {
    return p.contains(key) && !p.at(key).is_null() ? as_text(p.at(key)) : fallback;
}

std::uint64_t uint_of(const json& p, const std::string& key) {
    if (!p.contains(key) || !p.at(key).is_number_unsigned()) invalid("'" + key + "' must be an unsigned integer");
    return p.at(key).get<std::uint64_t>();
}

std::uint64_t uint_or(const json& p, const std::string& key, std::uint64_t fallback) {
    return p.contains(key) ? uint_of(p, key) : fallback;
}

double real_of(const json& v, const std::string& key) {
    if (!v.is_number()) invalid("'" + key + "' must be a number");
    return v.get<double>();
}

std::vector<std::string> strings(const json& p, const std::string& key) {
    std::vector<std::string> out;
    if (!p.contains(key)) return out;
    const auto& v = p.at(key);
    if (!v.is_array()) return {as_text(v)};
    for (const auto& item : v) out.push_back(as_text(item));
    return out;
}

void apply_network(NetworkConfig& cfg, const json& n) {
    if (!n.is_object()) invalid("network must be a map");
    for (const auto& [key, value] : n.items()) {
        if (key == "universities") {
            cfg.universities.clear();
            if (value.is_number_unsigned()) {
                for (std::uint64_t i = 1; i <= value.get<std::uint64_t>(); ++i)
                    cfg.universities.push_back({"U" + std::to_string(i), uint_or(n, "nodesPerUniversity", 5)});
            } else if (value.is_array()) {
                for (const auto& u : value)
                    cfg.universities.push_back({str(u, "name"), uint_or(u, "nodes", uint_or(n, "nodesPerUniversity", 5))});
            } else {
                invalid("universities must be a count or a list");
            }
        } else if (key == "nodesPerUniversity") {
            if (!n.contains("universities"))
                for (auto& u : cfg.universities) u.nodes = uint_of(n, key);
        } else if (key == "latency") {
            cfg.latencyMin = uint_or(value, "min", cfg.latencyMin);
            cfg.latencyMax = uint_or(value, "max", cfg.latencyMax);
        } else if (key == "lossRate") {
            cfg.lossRate = real_of(value, key);
        } else if (key == "seed") {
            cfg.rngSeed = uint_of(n, key);
        } else if (key == "clockStep") {
            cfg.clockStep = uint_of(n, key);
        } else if (key == "maxPeers") {
            cfg.maxPeers = static_cast<std::uint32_t>(uint_of(n, key));
        } else if (key == "difficulty") {
            cfg.chainConfig.initialTarget = ledger::Target::from_difficulty(uint_of(n, key));
        } else if (key == "maxTxPerBlock") {
            cfg.chainConfig.maxTxPerBlock = static_cast<std::uint32_t>(uint_of(n, key));
        } else {
            invalid("unknown network key '" + key + "'");
        }
    }
}

const std::vector<std::pair<std::string, std::string>> kActions{
    {"login", "as, password?: log in through the gateway"},
    {"register_account", "as, login, role, subject, department, password?: RegisterAccount + enrollment"},
    {"register_student", "as, studentId, name, program"},
    {"register_students", "as, prefix, count, program: bulk RegisterStudent (ids <prefix><5 digits>)"},
    {"register_course", "as, courseId, title, term, owner"},
    {"grade", "as, studentId, courseId, term, score, letter?"},
    {"grades_bulk", "as, prefix, count, courses, term: seeded UpsertGrade per student and course"},
    {"update_profile", "as, studentId, field, value"},
    {"attach", "as, studentId, courseId, content, mediaLabel?"},
    {"export", "as, courses, studentId?, password?: transcript export"},
    {"wait", "ms: advance the logical clock"},
    {"settle", "limit?: advance until quiet and converged"},
    {"publish", "university, period, ordinal: hub commitment batch"},
    {"verify", "university, studentId, period, type?, via?, perturb?: POST /verify"},
    {"transfer", "host, home, studentId, courses, tamper? (payload | payload+digest)"},
    {"audit", "university?, as?, tables?: POST /audit/run"},
    {"fault", "kind, node, ...: TamperRow | DropMessages | CrashNode | LagNode"},
    {"check", "what: chain_integrity | replay_equivalence | converged | digest_differs | digest_equal | "
              "onchain_repairs | row | stat | mempools_empty"},
};

std::string letter_for(std::uint64_t score) {
    if (score >= 90) return "A";
    if (score >= 80) return "B";
    if (score >= 70) return "C";
    if (score >= 60) return "D";
    return "F";
}

std::string bulk_id(const std::string& prefix, std::uint64_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%05llu", static_cast<unsigned long long>(i));
    return prefix + buf;
}

std::string perturb(const std::string& v) {
    if (v.empty()) return "x";
    if (std::isdigit(static_cast<unsigned char>(v.back())))
        return v.substr(0, v.size() - 1) + static_cast<char>('0' + (v.back() - '0' + 1) % 10);
    return v + "x";
}

json gateway_result(const gateway::Response& r) {
    json out{{"status", r.status}};
    for (const char* k : {"error", "txHash", "digest", "status"})
        if (r.body.contains(k)) out[std::string(k) == "status" ? "result" : k] = r.body.at(k);
    return out;
}

chain::PrivateNode& best_node(const Testbed& tb, const University& u) {
    chain::PrivateNode* best = nullptr;
    for (const auto& n : u.nodes)
        if (tb.reachable(n->id()) && (!best || n->height() > best->height())) best = n.get();
    if (!best) throw Error(Errc::ChainUnavailable, "no reachable node in " + u.name);
    return *best;
}

class Runner {
public:
    Runner(Testbed& tb, const ScenarioScript& script) : tb_(tb), script_(script), rng_(tb.config().rngSeed) {}

    RunReport run();

private:
    struct Actor {
        std::string university;
        std::string login;
    };

    Actor parse_actor(const std::string& as) const {
        auto at = as.find('@');
        if (at == std::string::npos) return {tb_.university(0).name, as};
        return {as.substr(at + 1), as.substr(0, at)};
    }
    ledger::KeyPair actor_key(const Actor& a) const { return tb_.key(a.university + "/" + a.login); }
    gateway::Client& client(const std::string& as, bool autoLogin = true);

    json execute(const ScenarioStep& step, StepRecord& rec);
    json write(const json& p, const std::string& method, const std::string& path, const ledger::RecordOp& op,
               json extra = json::object());
    json do_check(const json& p, StepRecord& rec);
    json do_verify(const json& p);
    json do_transfer(const json& p);
    json do_audit(const json& p);
    json do_fault(const json& p);

    void assert_that(StepRecord& rec, std::string what, bool ok, json expected, json actual) {
        rec.assertions.push_back({std::move(what), ok, std::move(expected), std::move(actual)});
    }

    Testbed& tb_;
    const ScenarioScript& script_;
    std::mt19937_64 rng_;
    std::uint64_t start_ = 0;
    std::map<std::string, std::unique_ptr<gateway::Client>> clients_;
};

gateway::Client& Runner::client(const std::string& as, bool autoLogin) {
    auto a = parse_actor(as);
    auto id = a.login + "@" + a.university;
    auto it = clients_.find(id);
    if (it == clients_.end()) {
        auto& u = tb_.university(a.university);
        it = clients_.emplace(id, std::make_unique<gateway::Client>(*u.gateway, actor_key(a))).first;
    }
    if (autoLogin && it->second->token().empty()) it->second->login(a.login, Testbed::default_password(a.login));
    return *it->second;
}

json Runner::write(const json& p, const std::string& method, const std::string& path, const ledger::RecordOp& op,
                   json extra) {
    auto& c = client(str(p, "as"));
    return gateway_result(c.write(method, path, op, tb_.now(), std::move(extra)));
}

json Runner::do_verify(const json& p) {
    auto& issuer = tb_.university(str(p, "university"));
    auto studentId = str(p, "studentId");
    auto period = str(p, "period");
    auto type = str_or(p, "type", "Transcript");
    json credential;
    for (const auto& c : issuer.hub->snapshot_credentials(period)) {
        if (c.record.subjectId == studentId && consortium::credential_type_name(c.record.credentialType) == type)
            credential = ledger::credential_fields_to_json(c.fields);
    }
    if (credential.is_null()) return {{"error", "NoSuchCredential"}};
    if (p.contains("perturb")) {
        auto field = str(p, "perturb");
        if (!credential.contains(field)) return {{"error", "NoSuchField"}};
        credential[field] = perturb(credential[field].get<std::string>());
    }
    auto& via = tb_.university(str_or(p, "via", issuer.name));
    auto r = via.gateway->handle({"POST", "/verify", {}, {}, {{"credential", credential}}});
    json out{{"status", r.status}};
    for (const char* k : {"issuer", "seq", "error"})
        if (r.body.contains(k)) out[k] = r.body.at(k);
    if (r.body.contains("status")) out["result"] = r.body.at("status");
    return out;
}

json Runner::do_transfer(const json& p) {
    auto& host = tb_.university(str(p, "host"));
    auto& home = tb_.university(str(p, "home"));
    auto courses = strings(p, "courses");
    std::set<std::string> scope(courses.begin(), courses.end());
    std::string channel;
    try {
        channel = host.hub->open_transfer(home.name, str(p, "studentId"), scope);
    } catch (const Error& e) {
        return {{"error", std::string(to_string(e.code()))}};
    }
    home.hub->service_channels();
    json out{{"channelId", channel}};
    try {
        auto tamper = str_or(p, "tamper", "");
        if (tamper.empty()) {
            auto fields = host.hub->receive_transfer(channel);
            auto period = ledger::FieldReader::decode(fields.encode()).string("period");
            auto commitment = host.member->lookup_commitment(str(p, "studentId"), consortium::CredentialType::Transcript,
                                                             period, home.name);
            out["result"] = "ok";
            out["period"] = period;
            auto digest = ledger::digest_sha256(fields.encode());
            const auto* ch = host.member->channel(channel);
            out["payloadDigestMatches"] = ch && ch->response && ch->response->payloadDigest == digest;
            out["matchesCommitment"] = commitment && commitment->record.digest == digest;
            return out;
        }
        if (tamper != "payload" && tamper != "payload+digest") invalid("tamper must be payload or payload+digest");
        const auto* ch = host.member->channel(channel);
        if (!ch || !ch->response) return {{"error", "UnknownChannel"}};
        // Altered transcript re-sealed to the host, as an in-flight substitution.
        auto genuine = host.hub->receive_transfer(channel);
        auto reader = ledger::FieldReader::decode(genuine.encode());
        ledger::FieldMap altered;
        bool changed = false;
        for (const auto& [name, value] : reader.fields()) {
            auto v = to_string(value);
            if (!changed && name.size() > 6 && name.compare(name.size() - 6, 6, ".score") == 0) {
                v = perturb(v);
                changed = true;
            }
            altered.set_string(name, v);
        }
        auto tampered = *ch->response;
        auto plain = altered.encode();
        tampered.payload =
            ledger::seal_to(host.hub->member_key().public_key(), plain, ledger::digest_sha256("tamper|" + channel));
        if (tamper == "payload+digest") tampered.payloadDigest = ledger::digest_sha256(plain);
        host.hub->open_response(ch->request, tampered);
        out["result"] = "accepted";
    } catch (const Error& e) {
        out["error"] = std::string(to_string(e.code()));
    }
    return out;
}

json Runner::do_audit(const json& p) {
    auto& u = tb_.university(str_or(p, "university", tb_.university(0).name));
    auto& c = client(str_or(p, "as", "auditor@" + u.name));
    json body = json::object();
    if (p.contains("tables")) body["tables"] = strings(p, "tables");
    auto r = c.call("POST", "/audit/run", body);
    json out{{"status", r.status}};
    if (r.status != 200) {
        out["error"] = r.body.value("error", "");
        return out;
    }
    std::set<std::string> divergent, missing, sources;
    json rows = json::array();
    std::uint64_t repairs = 0, levels = 0, synced = 0;
    bool ambiguous = false;
    json abstentions = json::array();
    for (const auto& rep : r.body["reports"]) {
        for (const auto& n : rep["divergentNodes"]) divergent.insert(n.get<std::string>());
        for (const auto& n : rep["missingBlocks"]) missing.insert(n.get<std::string>());
        for (const auto& [node, list] : rep["localizedRows"].items())
            for (const auto& f : list) rows.push_back(node + ":" + f["rowKey"].get<std::string>());
        repairs += rep["repairsApplied"].get<std::uint64_t>();
        for (const auto& [node, l] : rep["narrowingLevels"].items()) levels = std::max(levels, l.get<std::uint64_t>());
        synced += rep["blocksSynced"].get<std::uint64_t>();
        sources.insert(rep["adjudicationSource"].get<std::string>());
        ambiguous = ambiguous || rep["voteAmbiguous"].get<bool>();
        if (abstentions.empty()) abstentions = rep["abstentions"];
    }
    out["divergentNodes"] = divergent;
    out["missingBlocks"] = missing;
    out["localizedRows"] = rows;
    out["repairsApplied"] = repairs;
    out["narrowingLevels"] = levels;
    out["blocksSynced"] = synced;
    out["sources"] = sources;
    out["voteAmbiguous"] = ambiguous;
    out["abstentions"] = abstentions;
    return out;
}

json Runner::do_fault(const json& p) {
    auto kind = str(p, "kind");
    FaultSpec fault;
    fault.scheduledAt = p.contains("at") ? start_ + uint_of(p, "at") : tb_.now();
    auto node = str(p, "node");
    if (kind == "TamperRow")
        fault.kind = TamperRow{node, str(p, "table"), str(p, "rowKey"), str(p, "field"), str(p, "value")};
    else if (kind == "DropMessages")
        fault.kind = DropMessages{node, p.contains("fraction") ? real_of(p.at("fraction"), "fraction") : 1.0,
                                 uint_of(p, "window")};
    else if (kind == "CrashNode")
        fault.kind = CrashNode{node, uint_of(p, "window")};
    else if (kind == "LagNode")
        fault.kind = LagNode{node, uint_of(p, "blocks")};
    else
        invalid("unknown fault kind '" + kind + "'");
    try {
        tb_.inject_fault(std::move(fault));
    } catch (const Error& e) {
        return {{"error", std::string(to_string(e.code()))}};
    }
    return {{"result", "scheduled"}};
}

json Runner::do_check(const json& p, StepRecord& rec) {
    auto what = str(p, "what");
    if (what == "chain_integrity") {
        auto r = check_chain_integrity(tb_);
        assert_that(rec, what, r.violations.empty(), json::array(), r.violations);
        return {{"blocks", r.blocks}, {"violations", r.violations.size()}};
    }
    if (what == "replay_equivalence") {
        auto m = replay_mismatches(tb_);
        assert_that(rec, what, m.empty(), json::array(), m);
        return {{"mismatches", m.size()}};
    }
    if (what == "converged") {
        bool ok = tb_.converged();
        assert_that(rec, what, ok, true, ok);
        return {{"converged", ok}};
    }
    if (what == "mempools_empty") {
        json pending = json::object();
        for (auto* n : tb_.all_nodes())
            if (!n->mempool().empty()) pending[n->id()] = n->mempool().size();
        assert_that(rec, what, pending.empty(), json::object(), pending);
        return {{"pending", pending.size()}};
    }
    if (what == "digest_differs" || what == "digest_equal") {
        auto table = state::table_from_name(str(p, "table"));
        std::string uname = p.contains("node") ? str(p, "node").substr(0, str(p, "node").find('-'))
                                               : str_or(p, "university", tb_.university(0).name);
        auto& u = tb_.university(uname);
        auto& best = best_node(tb_, u);
        auto oracle = state::table_digest(chain::replay_state(best.chain(), u.config), table).hex();
        json digests = json::object();
        bool ok = true;
        if (what == "digest_differs") {
            auto* n = tb_.find_node(str(p, "node"));
            if (!n) invalid("unknown node " + str(p, "node"));
            auto d = state::table_digest(n->database(), table).hex();
            digests[n->id()] = d;
            ok = d != oracle;
        } else {
            for (const auto& n : u.nodes) {
                if (!tb_.reachable(n->id())) continue;
                auto d = state::table_digest(n->database(), table).hex();
                digests[n->id()] = d;
                ok = ok && d == oracle;
            }
        }
        assert_that(rec, what, ok, {{"oracle", oracle}}, digests);
        return {{"oracle", oracle}, {"digests", digests}};
    }
    if (what == "onchain_repairs") {
        auto& u = tb_.university(str_or(p, "university", tb_.university(0).name));
        std::uint64_t count = 0;
        for (const auto& b : best_node(tb_, u).chain())
            for (const auto& tx : b.txs) count += std::holds_alternative<ledger::AuditRepair>(tx.op);
        auto want = uint_of(p, "count");
        assert_that(rec, what, count == want, want, count);
        return {{"count", count}};
    }
    if (what == "row") {
        auto* n = tb_.find_node(str(p, "node"));
        if (!n) invalid("unknown node " + str(p, "node"));
        auto row = n->database().find(state::table_from_name(str(p, "table")), state::RowKey::parse(str(p, "rowKey")));
        auto field = str(p, "field");
        json actual = row && row->count(field) ? json(row->at(field)) : json(nullptr);
        auto want = str(p, "value");
        assert_that(rec, what, actual == want, want, actual);
        return {{"value", actual}};
    }
    if (what == "stat") {
        auto name = str(p, "name");
        const auto& s = tb_.stats();
        std::map<std::string, std::uint64_t> stats{{"sent", s.sent},         {"delivered", s.delivered},
                                                   {"dropped", s.dropped},   {"syncRequests", s.syncRequests},
                                                   {"sideBranches", s.sideBranches}, {"reorgs", s.reorgs}};
        if (!stats.count(name)) invalid("unknown stat '" + name + "'");
        auto v = stats.at(name);
        auto atLeast = uint_or(p, "atLeast", 0);
        auto atMost = uint_or(p, "atMost", std::numeric_limits<std::uint64_t>::max());
        assert_that(rec, what + ":" + name, v >= atLeast && v <= atMost, {{"atLeast", atLeast}, {"atMost", atMost}},
                    v);
        return {{name, v}};
    }
    invalid("unknown check '" + what + "'");
}

json Runner::execute(const ScenarioStep& step, StepRecord& rec) {
    const auto& p = step.params;
    const auto& a = step.action;
    if (a == "login") {
        auto& c = client(str(p, "as"), false);
        auto actor = parse_actor(str(p, "as"));
        return gateway_result(c.login(actor.login, str_or(p, "password", Testbed::default_password(actor.login))));
    }
    if (a == "register_account") {
        auto actor = parse_actor(str(p, "as"));
        auto login = str(p, "login");
        auto role = ledger::parse_role(str(p, "role"));
        if (!role) invalid("unknown role " + str(p, "role"));
        auto key = tb_.key(actor.university + "/" + login);
        return write(p, "POST", "/accounts",
                     ledger::RegisterAccount{key.public_key(), *role, str(p, "subject"), str_or(p, "displayName", login)},
                     {{"loginId", login},
                      {"password", str_or(p, "password", Testbed::default_password(login))},
                      {"department", str(p, "department")}});
    }
    if (a == "register_student")
        return write(p, "POST", "/students", ledger::RegisterStudent{str(p, "studentId"), str(p, "name"), str(p, "program")});
    if (a == "register_students") {
        auto count = uint_of(p, "count");
        auto prefix = str_or(p, "prefix", "S");
        std::uint64_t ok = 0;
        json firstError;
        for (std::uint64_t i = 0; i < count; ++i) {
            auto r = write(p, "POST", "/students",
                           ledger::RegisterStudent{bulk_id(prefix, i), "Student " + std::to_string(i), str(p, "program")});
            if (r["status"] == 200) ++ok;
            else if (firstError.is_null()) firstError = r;
        }
        json out{{"submitted", ok}, {"status", ok == count ? 200 : firstError["status"].get<int>()}};
        if (!firstError.is_null()) out["firstError"] = firstError;
        return out;
    }
    if (a == "register_course")
        return write(p, "POST", "/courses",
                     ledger::RegisterCourse{str(p, "courseId"), str(p, "title"), str(p, "term"), str(p, "owner")});
    if (a == "grade") {
        auto score = uint_of(p, "score");
        return write(p, "POST", "/grades",
                     ledger::UpsertGrade{str(p, "studentId"), str(p, "courseId"), str(p, "term"),
                                         static_cast<std::uint32_t>(score), str_or(p, "letter", letter_for(score))});
    }
    if (a == "grades_bulk") {
        auto count = uint_of(p, "count");
        auto prefix = str_or(p, "prefix", "S");
        auto courses = strings(p, "courses");
        std::uint64_t ok = 0, total = 0;
        json firstError;
        for (std::uint64_t i = 0; i < count; ++i)
            for (const auto& course : courses) {
                auto score = rng_() % 101;
                ++total;
                auto r = write(p, "POST", "/grades",
                               ledger::UpsertGrade{bulk_id(prefix, i), course, str(p, "term"),
                                                   static_cast<std::uint32_t>(score), letter_for(score)});
                if (r["status"] == 200) ++ok;
                else if (firstError.is_null()) firstError = r;
            }
        json out{{"submitted", ok}, {"status", ok == total ? 200 : firstError["status"].get<int>()}};
        if (!firstError.is_null()) out["firstError"] = firstError;
        return out;
    }
    if (a == "update_profile")
        return write(p, "PUT", "/profile", ledger::UpdateProfile{str(p, "studentId"), str(p, "field"), str(p, "value")});
    if (a == "attach") {
        auto content = str(p, "content");
        return write(p, "POST", "/attachments",
                     ledger::AttachFile{str(p, "studentId"), str(p, "courseId"), ledger::digest_sha256(content),
                                        content.size(), str_or(p, "mediaLabel", "text/plain")},
                     {{"content", to_hex(as_bytes(content))}});
    }
    if (a == "export") {
        auto actor = parse_actor(str(p, "as"));
        json body{{"courses", strings(p, "courses")},
                  {"password", str_or(p, "password", Testbed::default_password(actor.login))}};
        if (p.contains("studentId")) body["studentId"] = str(p, "studentId");
        auto r = client(str(p, "as")).call("POST", "/transcript/export", body);
        auto out = gateway_result(r);
        if (r.status == 200) out["courses"] = r.body["rows"].size();
        return out;
    }
    if (a == "wait") {
        tb_.advance(uint_of(p, "ms"));
        return {{"now", tb_.now() - start_}};
    }
    if (a == "settle") {
        bool ok = tb_.settle(uint_or(p, "limit", 60'000));
        assert_that(rec, "settled", ok, true, ok);
        return {{"settled", ok}};
    }
    if (a == "publish") {
        auto& u = tb_.university(str(p, "university"));
        auto period = str(p, "period");
        auto batch = u.hub->snapshot_credentials(period);
        try {
            auto seq = u.hub->publish_commitments(period, uint_of(p, "ordinal"), batch);
            return {{"seq", seq}, {"count", batch.size()}};
        } catch (const Error& e) {
            return {{"error", std::string(to_string(e.code()))}};
        }
    }
    if (a == "verify") return do_verify(p);
    if (a == "transfer") return do_transfer(p);
    if (a == "audit") return do_audit(p);
    if (a == "fault") return do_fault(p);
    if (a == "check") return do_check(p, rec);
    invalid("unknown action '" + a + "'");
}

RunReport Runner::run() {
    RunReport report;
    report.scenario = script_.name;
    report.seed = tb_.config().rngSeed;
    start_ = tb_.now();
    for (const auto& step : script_.steps) {
        if (step.at && start_ + *step.at > tb_.now()) tb_.advance(start_ + *step.at - tb_.now());
        StepRecord rec{step.index, step.action, tb_.now() - start_, {}, {}};
        try {
            rec.result = execute(step, rec);
        } catch (const Error& e) {
            rec.result = {{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
            assert_that(rec, "step executes", false, "no error", e.what());
        }
        auto expect = step.expect;
        static const std::set<std::string> kWrites{"register_account", "register_student", "register_students",
                                                   "register_course", "grade", "grades_bulk", "update_profile",
                                                   "attach", "export", "login"};
        if (expect.empty() && kWrites.count(step.action)) expect = {{"status", 200}};
        for (const auto& [key, want] : expect.items()) {
            json got = rec.result.contains(key) ? rec.result.at(key) : json(nullptr);
            assert_that(rec, "expect." + key, got == want, want, got);
        }
        report.steps.push_back(rec);
        auto failed = std::find_if(rec.assertions.begin(), rec.assertions.end(), [](const auto& x) { return !x.passed; });
        if (failed != rec.assertions.end()) {
            report.passed = false;
            std::ostringstream diff;
            diff << "step " << step.index << " (" << step.action << ") " << failed->what << "\n"
                 << "- expected: " << failed->expected.dump() << "\n"
                 << "+ actual:   " << failed->actual.dump();
            report.failure = diff.str();
            break;
        }
    }
    report.faults = tb_.fault_log();
    for (auto& f : report.faults) f.at -= std::min(f.at, start_);
    report.messages = tb_.stats();
    for (auto* n : tb_.all_nodes()) {
        NodeSummary s{n->height(), n->tip().hash().hex(), {}};
        for (auto t : state::kAllTables)
            s.digests[std::string(state::table_name(t))] = state::table_digest(n->database(), t).hex();
        report.nodes[n->id()] = std::move(s);
    }
    report.finalTime = tb_.now() - start_;
    return report;
}

}  // namespace

ScenarioScript parse_scenario(const std::string& yamlText) {
    YAML::Node root;
    try {
        root = YAML::Load(yamlText);
    } catch (const YAML::Exception& e) {
        invalid(std::string("YAML: ") + e.what());
    }
    auto doc = yaml_to_json(root);
    if (!doc.is_object()) invalid("a scenario is a YAML map");
    ScenarioScript s;
    s.name = str(doc, "name");
    s.description = str_or(doc, "description", "");
    if (doc.contains("network")) apply_network(s.network, doc["network"]);
    if (!doc.contains("steps") || !doc["steps"].is_array()) invalid("'steps' must be a list");
    std::set<std::string> known;
    for (const auto& [name, summary] : kActions) known.insert(name);
    std::size_t i = 0;
    for (const auto& raw : doc["steps"]) {
        ScenarioStep step;
        step.index = i++;
        if (!raw.is_object() || !raw.contains("do"))
            invalid("step " + std::to_string(step.index) + " needs a 'do' key");
        step.action = as_text(raw["do"]);
        if (!known.count(step.action))
            invalid("step " + std::to_string(step.index) + ": unknown action '" + step.action + "'");
        for (const auto& [key, value] : raw.items()) {
            if (key == "do") continue;
            if (key == "at" && step.action != "fault") {
                if (!value.is_number_unsigned()) invalid("step " + std::to_string(step.index) + ": 'at' must be ms");
                step.at = value.get<std::uint64_t>();
            } else if (key == "expect") {
                if (!value.is_object()) invalid("step " + std::to_string(step.index) + ": 'expect' must be a map");
                step.expect = value;
            } else {
                step.params[key] = value;
            }
        }
        s.steps.push_back(std::move(step));
    }
    return s;
}

ScenarioScript load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot read scenario " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void apply_network_overrides(NetworkConfig& config, const std::string& yamlText) {
    YAML::Node root;
    try {
        root = YAML::Load(yamlText);
    } catch (const YAML::Exception& e) {
        invalid(std::string("YAML: ") + e.what());
    }
    auto doc = yaml_to_json(root);
    if (doc.is_null()) return;
    apply_network(config, doc.contains("network") ? doc["network"] : doc);
}

std::vector<std::pair<std::string, std::string>> action_catalog() { return kActions; }

std::size_t RunReport::assertion_count() const {
    std::size_t n = 0;
    for (const auto& s : steps) n += s.assertions.size();
    return n;
}

json RunReport::to_json() const {
    json j;
    j["scenario"] = scenario;
    j["seed"] = seed;
    j["passed"] = passed;
    j["failure"] = failure ? json(*failure) : json(nullptr);
    j["steps"] = json::array();
    for (const auto& s : steps) {
        json asserts = json::array();
        for (const auto& a : s.assertions)
            asserts.push_back({{"what", a.what}, {"passed", a.passed}, {"expected", a.expected}, {"actual", a.actual}});
        j["steps"].push_back(
            {{"index", s.index}, {"action", s.action}, {"at", s.at}, {"result", s.result}, {"assertions", asserts}});
    }
    j["faults"] = json::array();
    for (const auto& f : faults) j["faults"].push_back({{"at", f.at}, {"kind", f.kind}, {"node", f.node}, {"detail", f.detail}});
    j["messages"] = {{"sent", messages.sent},
                     {"delivered", messages.delivered},
                     {"dropped", messages.dropped},
                     {"syncRequests", messages.syncRequests},
                     {"sideBranches", messages.sideBranches},
                     {"reorgs", messages.reorgs}};
    j["nodes"] = json::object();
    for (const auto& [id, n] : nodes) j["nodes"][id] = {{"height", n.height}, {"tip", n.tip}, {"digests", n.digests}};
    j["finalTime"] = finalTime;
    j["assertions"] = assertion_count();
    return j;
}

std::string RunReport::text() const { return to_json().dump(2) + "\n"; }

RunReport run_scenario(Testbed& testbed, const ScenarioScript& script) { return Runner(testbed, script).run(); }

RunReport run_scenario(const ScenarioScript& script) {
    Testbed tb(script.network);
    return run_scenario(tb, script);
}

void require_passed(const RunReport& report) {
    if (!report.passed) throw Error(Errc::AssertionFailed, report.failure.value_or("unknown failure"));
}

IntegrityResult check_chain_integrity(const Testbed& testbed) {
    IntegrityResult out;
    for (auto* n : testbed.all_nodes()) {
        const auto& chain = n->chain();
        out.blocks += chain.size();
        for (std::size_t i = 1; i < chain.size(); ++i)
            if (chain[i].header.parentHash != chain[i - 1].hash())
                out.violations.push_back(n->id() + ": block " + std::to_string(i) + " parentHash mismatch");
        try {
            chain::replay_chain(chain, n->config());
        } catch (const Error& e) {
            out.violations.push_back(n->id() + ": " + e.what());
        }
    }
    return out;
}

std::vector<std::string> replay_mismatches(const Testbed& testbed) {
    std::vector<std::string> out;
    for (auto* n : testbed.all_nodes()) {
        auto replayed = chain::replay_state(n->chain(), n->config());
        for (auto t : state::kAllTables)
            if (state::table_digest(replayed, t) != state::table_digest(n->database(), t))
                out.push_back(n->id() + "/" + std::string(state::table_name(t)));
    }
    return out;
}

}  // namespace educhain::harness
