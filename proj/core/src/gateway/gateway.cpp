#include "educhain/gateway/gateway.hpp"

#include <sodium.h>

#include <algorithm>
#include <limits>

#include "educhain/ledger/canonical.hpp"
#include "educhain/state/final_state_db.hpp"
#include "educhain/state/schema.hpp"
#include "educhain/state/transcript.hpp"

namespace educhain::gateway {

namespace {

using ledger::OpKind;
using ledger::RecordOp;
using ledger::Role;

constexpr bool Y = true;
constexpr bool N = false;

//                                  Anon Stu Staff Reg Aud
const std::vector<EndpointPolicy> kPolicies{
    {"POST", "/login", "login", {Y, Y, Y, Y, Y}},
    {"POST", "/logout", "drop session", {N, Y, Y, Y, Y}},
    {"GET", "/session", "session info and next nonce", {N, Y, Y, Y, Y}},
    {"GET", "/profile", "query(students)", {N, Y, N, Y, Y}},
    {"PUT", "/profile", "UpdateProfile tx", {N, Y, N, Y, N}},
    {"GET", "/grades", "query(grades)", {N, Y, Y, Y, Y}},
    {"POST", "/grades", "UpsertGrade tx", {N, N, Y, N, N}},
    {"POST", "/attachments", "put_content + AttachFile tx", {N, N, Y, N, N}},
    {"GET", "/content/{cid}", "content store read", {N, Y, Y, Y, Y}},
    {"POST", "/transcript/export", "export_transcript", {N, Y, N, Y, N}},
    {"GET", "/oplog", "operation log page", {N, Y, Y, Y, Y}},
    {"POST", "/verify", "lookup_commitment", {Y, Y, Y, Y, Y}},
    {"POST", "/audit/run", "run_audit_round", {N, N, N, N, Y}},
    {"GET", "/audit/reports", "audit reports", {N, N, N, N, Y}},
    {"POST", "/accounts", "RegisterAccount tx + enrollment", {N, N, N, Y, N}},
    {"POST", "/students", "RegisterStudent tx", {N, N, N, Y, N}},
    {"POST", "/courses", "RegisterCourse tx", {N, N, N, Y, N}},
    {"GET", "/tx/{hash}", "transaction status", {N, Y, Y, Y, Y}},
};

bool path_matches(std::string_view pattern, std::string_view path) {
    auto brace = pattern.find('{');
    if (brace == std::string_view::npos) return pattern == path;
    auto prefix = pattern.substr(0, brace);
    return path.size() > prefix.size() && path.substr(0, prefix.size()) == prefix &&
           path.substr(prefix.size()).find('/') == std::string_view::npos;
}

std::string path_param(std::string_view pattern, std::string_view path) {
    return std::string(path.substr(pattern.find('{')));
}

// Op field names for a kind, taken from the canonical encoder itself.
RecordOp default_op(OpKind kind) {
    switch (kind) {
        case OpKind::RegisterAccount: return ledger::RegisterAccount{};
        case OpKind::RegisterStudent: return ledger::RegisterStudent{};
        case OpKind::RegisterCourse: return ledger::RegisterCourse{};
        case OpKind::UpdateProfile: return ledger::UpdateProfile{};
        case OpKind::UpsertGrade: return ledger::UpsertGrade{};
        case OpKind::AttachFile: return ledger::AttachFile{};
        case OpKind::AuditRepair: return ledger::AuditRepair{};
    }
    return ledger::RegisterStudent{};
}

bool is_uint_field(const std::string& name) { return name == "score" || name == "size"; }
bool is_hex_field(const std::string& name) { return name == "accountKey" || name == "cid"; }

json op_to_json(const RecordOp& op) {
    auto reader = ledger::FieldReader::decode(ledger::op_fields(op).encode());
    json out = json::object();
    for (const auto& [name, value] : reader.fields()) {
        if (name == "kind") continue;
        if (is_uint_field(name))
            out[name] = reader.uint(name);
        else if (is_hex_field(name))
            out[name] = to_hex(reader.hex(name));
        else
            out[name] = reader.string(name);
    }
    return out;
}

const json& require(const json& body, const std::string& name) {
    if (!body.is_object() || !body.contains(name)) throw Error(Errc::SchemaViolation, "missing field '" + name + "'");
    return body.at(name);
}

std::string require_string(const json& body, const std::string& name) {
    const auto& v = require(body, name);
    if (!v.is_string()) throw Error(Errc::SchemaViolation, "field '" + name + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t require_uint(const json& body, const std::string& name) {
    const auto& v = require(body, name);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw Error(Errc::SchemaViolation, "field '" + name + "' must be an unsigned integer");
    return v.get<std::uint64_t>();
}

RecordOp op_from_json(OpKind kind, const json& body) {
    ledger::FieldMap m;
    m.set_string("kind", ledger::op_kind_name(kind));
    auto names = ledger::FieldReader::decode(ledger::op_fields(default_op(kind)).encode());
    for (const auto& [name, unused] : names.fields()) {
        if (name == "kind") continue;
        if (is_uint_field(name))
            m.set_uint(name, require_uint(body, name));
        else if (is_hex_field(name))
            m.set_hex(name, from_hex(require_string(body, name)));
        else
            m.set_string(name, require_string(body, name));
    }
    try {
        return ledger::op_from_fields(ledger::FieldReader::decode(m.encode()));
    } catch (const Error& e) {
        throw Error(Errc::SchemaViolation, e.what());
    }
}

json row_json(const state::Row& row) {
    json out = json::object();
    for (const auto& [k, v] : row) out[k] = v;
    return out;
}

json rows_json(const std::vector<state::Row>& rows) {
    json out = json::array();
    for (const auto& r : rows) out.push_back(row_json(r));
    return out;
}

// Per-term score summary for charts: course count, min, max, mean.
json term_summary(const std::vector<state::Row>& grades) {
    struct Acc {
        std::size_t n = 0;
        std::uint64_t sum = 0;
        std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
        std::uint64_t hi = 0;
    };
    std::map<std::string, Acc> byTerm;
    for (const auto& row : grades) {
        std::uint64_t score = std::stoull(row.at("score"));
        auto& a = byTerm[row.at("term")];
        ++a.n;
        a.sum += score;
        a.lo = std::min(a.lo, score);
        a.hi = std::max(a.hi, score);
    }
    json out = json::array();
    for (const auto& [term, a] : byTerm)
        out.push_back({{"term", term},
                       {"courses", a.n},
                       {"minScore", a.lo},
                       {"maxScore", a.hi},
                       {"meanScore", static_cast<double>(a.sum) / static_cast<double>(a.n)}});
    return out;
}

std::string query_or(const Request& req, const std::string& name, const std::string& fallback = {}) {
    auto it = req.query.find(name);
    return it == req.query.end() ? fallback : it->second;
}

std::size_t query_size(const Request& req, const std::string& name, std::size_t fallback) {
    auto it = req.query.find(name);
    if (it == req.query.end()) return fallback;
    try {
        std::size_t used = 0;
        auto v = std::stoull(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw Error(Errc::BadRequest, "query parameter '" + name + "' must be a non-negative integer");
    }
}

Response ok(json body) { return {200, std::move(body)}; }

}  // namespace

std::string_view principal_name(Principal p) noexcept {
    switch (p) {
        case Principal::Anonymous: return "Anonymous";
        case Principal::Student: return "Student";
        case Principal::Staff: return "Staff";
        case Principal::Registrar: return "Registrar";
        case Principal::Auditor: return "Auditor";
    }
    return "Anonymous";
}

Principal principal_of(Role role) noexcept {
    switch (role) {
        case Role::Student: return Principal::Student;
        case Role::Staff: return Principal::Staff;
        case Role::Registrar: return Principal::Registrar;
        case Role::Auditor: return Principal::Auditor;
    }
    return Principal::Anonymous;
}

const std::vector<EndpointPolicy>& endpoint_policies() { return kPolicies; }

const EndpointPolicy* find_policy(std::string_view method, std::string_view path) {
    for (const auto& p : kPolicies)
        if (p.method == method && path_matches(p.path, path)) return &p;
    return nullptr;
}

int http_status(Errc code) noexcept {
    switch (code) {
        case Errc::Unauthenticated:
        case Errc::BadCredentials:
        case Errc::AccountLocked: return 401;
        case Errc::PermissionDenied: return 403;
        case Errc::NotFound:
        case Errc::UnknownChannel: return 404;
        case Errc::BadNonce:
        case Errc::AlreadyPublished:
        case Errc::StaleFix: return 409;
        case Errc::BadRequest: return 400;
        case Errc::NoNodeAvailable:
        case Errc::NoNodesReachable:
        case Errc::ChainUnavailable:
        case Errc::MempoolFull:
        case Errc::NotAcceptingTransactions: return 503;
        default: return 422;
    }
}

Response error_response(Errc code, const std::string& message) {
    return {http_status(code), {{"error", std::string(to_string(code))}, {"message", message}}};
}

Gateway::Gateway(RouteTable routes, NodeResolver resolve, Clock clock, GatewayOptions options)
    : routes_(std::move(routes)), resolve_(std::move(resolve)), clock_(std::move(clock)), options_(options) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
    char buf[crypto_pwhash_STRBYTES];
    auto salt = ledger::random_bytes(16);
    if (crypto_pwhash_str_alg(buf, to_hex(salt).c_str(), 32, options_.pwhashOps, options_.pwhashMemBytes,
                              crypto_pwhash_ALG_ARGON2ID13) != 0)
        throw std::runtime_error("password hashing failed");
    dummyHash_ = buf;
}

void Gateway::enroll(const std::string& accountId, const std::string& password, const ledger::PublicKey& key,
                     const std::string& department) {
    char buf[crypto_pwhash_STRBYTES];
    if (crypto_pwhash_str_alg(buf, password.data(), password.size(), options_.pwhashOps, options_.pwhashMemBytes,
                              crypto_pwhash_ALG_ARGON2ID13) != 0)
        throw std::runtime_error("password hashing failed");
    std::lock_guard lock(mu_);
    credentials_[accountId] = Credential{buf, key, department, 0};
}

bool Gateway::enrolled(const std::string& accountId) const {
    std::lock_guard lock(mu_);
    return credentials_.count(accountId) != 0;
}

// Same hashing work whether or not the account exists; lockout counts every
// failure, including re-prompts.
bool Gateway::check_password(Credential* cred, const std::string& password) {
    const auto& hash = cred ? cred->hash : dummyHash_;
    bool good = crypto_pwhash_str_verify(hash.c_str(), password.data(), password.size()) == 0;
    if (!cred) return false;
    if (cred->failures >= options_.maxFailedLogins) throw Error(Errc::AccountLocked, "too many failed attempts");
    if (good) {
        cred->failures = 0;
        return true;
    }
    if (++cred->failures >= options_.maxFailedLogins) throw Error(Errc::AccountLocked, "too many failed attempts");
    return false;
}

Session Gateway::login(const std::string& accountId, const std::string& password) {
    Credential snapshot;
    {
        std::lock_guard lock(mu_);
        auto it = credentials_.find(accountId);
        Credential* cred = it == credentials_.end() ? nullptr : &it->second;
        if (!check_password(cred, password)) throw Error(Errc::BadCredentials, "unknown account or wrong password");
        snapshot = *cred;
    }
    Session s;
    s.accountId = accountId;
    s.key = snapshot.key;
    s.department = snapshot.department;
    {
        std::lock_guard nodeLock(nodeMu_);
        auto choice = route(snapshot.department);
        const auto* info = choice.node->state().account(ledger::AccountId::of(snapshot.key));
        if (!info) throw Error(Errc::BadCredentials, "unknown account or wrong password");
        s.role = info->role;
        s.subjectId = info->subjectId;
        s.expiry = clock_() + options_.sessionTtlMs;
    }
    s.token = to_hex(ledger::random_bytes(32));
    std::lock_guard lock(mu_);
    sessions_[s.token] = s;
    return s;
}

RouteChoice Gateway::route(const std::string& department) const {
    auto it = routes_.departments.find(department);
    if (it == routes_.departments.end()) throw Error(Errc::NoNodeAvailable, "no node serves department '" + department + "'");
    if (auto* node = resolve_(it->second)) return {it->second, node, false};
    if (!routes_.fallback.empty() && routes_.fallback != it->second)
        if (auto* node = resolve_(routes_.fallback)) return {routes_.fallback, node, true};
    throw Error(Errc::NoNodeAvailable, "node '" + it->second + "' and the fallback are unreachable");
}

std::optional<Session> Gateway::session_for(const std::string& token) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(token);
    if (it == sessions_.end()) return std::nullopt;
    if (clock_() >= it->second.expiry) {
        sessions_.erase(it);
        return std::nullopt;
    }
    return it->second;
}

Response Gateway::handle(const Request& req) {
    try {
        const auto* policy = find_policy(req.method, req.path);
        if (!policy) return error_response(Errc::NotFound, "no endpoint " + req.method + " " + req.path);
        std::optional<Session> session;
        if (!req.token.empty()) session = session_for(req.token);
        auto who = session ? principal_of(session->role) : Principal::Anonymous;
        if (!policy->allows(who)) {
            if (who == Principal::Anonymous)
                return error_response(Errc::Unauthenticated, req.token.empty() ? "session required"
                                                                               : "session expired or unknown");
            return error_response(Errc::PermissionDenied,
                                  std::string(principal_name(who)) + " may not call " + req.method + " " + policy->path);
        }
        return dispatch(req, *policy, session ? &*session : nullptr);
    } catch (const Error& e) {
        return error_response(e.code(), e.what());
    } catch (const json::exception& e) {
        return error_response(Errc::BadRequest, e.what());
    }
}

Response Gateway::dispatch(const Request& req, const EndpointPolicy& policy, const Session* s) {
    const auto& p = policy.path;
    if (p == "/login") return do_login(req);
    if (p == "/verify") return verify(req);
    if (p == "/logout") {
        std::lock_guard lock(mu_);
        sessions_.erase(s->token);
        return ok({{"status", "ok"}});
    }
    if (p == "/session") return get_session(*s);
    if (p == "/audit/run") return run_audit(req);
    if (p == "/audit/reports") return audit_reports(req);

    std::lock_guard nodeLock(nodeMu_);
    if (p == "/profile" && req.method == "GET") return get_profile(req, *s);
    if (p == "/profile") return submit_write(req, *s, op_from_json(OpKind::UpdateProfile, req.body));
    if (p == "/grades" && req.method == "GET") return get_grades(req, *s);
    if (p == "/grades") return submit_write(req, *s, op_from_json(OpKind::UpsertGrade, req.body));
    if (p == "/attachments") return post_attachment(req, *s);
    if (p == "/content/{cid}") return get_content(req, *s);
    if (p == "/transcript/export") return export_transcript(req, *s);
    if (p == "/oplog") return get_oplog(req, *s);
    if (p == "/accounts") return post_account(req, *s);
    if (p == "/students") return submit_write(req, *s, op_from_json(OpKind::RegisterStudent, req.body));
    if (p == "/courses") return submit_write(req, *s, op_from_json(OpKind::RegisterCourse, req.body));
    if (p == "/tx/{hash}") return get_tx(req, *s);
    return error_response(Errc::NotFound, "unhandled endpoint " + p);
}

Response Gateway::do_login(const Request& req) {
    auto s = login(require_string(req.body, "accountId"), require_string(req.body, "password"));
    return ok({{"token", s.token},
               {"role", std::string(ledger::role_name(s.role))},
               {"subjectId", s.subjectId},
               {"department", s.department},
               {"expiry", s.expiry}});
}

Response Gateway::get_session(const Session& s) {
    std::lock_guard nodeLock(nodeMu_);
    auto choice = route(s.department);
    return ok({{"accountId", s.accountId},
               {"role", std::string(ledger::role_name(s.role))},
               {"subjectId", s.subjectId},
               {"department", s.department},
               {"publicKey", s.key.hex()},
               {"nonce", choice.node->next_nonce(ledger::AccountId::of(s.key))},
               {"expiry", s.expiry},
               {"nodeId", choice.nodeId},
               {"failover", choice.failover}});
}

Response Gateway::get_profile(const Request& req, const Session& s) {
    auto choice = route(s.department);
    state::Predicate pred;
    if (s.role == Role::Student)
        pred.emplace_back("studentId", s.subjectId);
    else if (auto id = query_or(req, "studentId"); !id.empty())
        pred.emplace_back("studentId", id);
    auto rows = state::query(choice.node->database(), "students", pred);
    return ok({{"rows", rows_json(rows)}, {"nodeId", choice.nodeId}, {"failover", choice.failover}});
}

Response Gateway::get_grades(const Request& req, const Session& s) {
    auto choice = route(s.department);
    const auto& db = choice.node->database();
    state::Predicate pred;
    for (const char* f : {"studentId", "courseId", "term"})
        if (auto v = query_or(req, f); !v.empty()) pred.emplace_back(f, v);
    if (s.role == Role::Student) {
        std::erase_if(pred, [](const auto& kv) { return kv.first == "studentId"; });
        pred.emplace_back("studentId", s.subjectId);
    }
    auto rows = state::query(db, "grades", pred);
    if (s.role == Role::Staff) {
        const auto& st = choice.node->state();
        std::erase_if(rows, [&](const state::Row& r) { return st.course_owner(r.at("courseId")) != s.subjectId; });
    }
    return ok({{"rows", rows_json(rows)},
               {"summary", term_summary(rows)},
               {"nodeId", choice.nodeId},
               {"failover", choice.failover}});
}

Response Gateway::submit_write(const Request& req, const Session& s, RecordOp op) {
    ledger::Transaction tx;
    tx.sender = ledger::AccountId::of(s.key);
    tx.nonce = require_uint(req.body, "nonce");
    tx.timestamp = require_uint(req.body, "timestamp");
    tx.op = std::move(op);
    try {
        tx.signature = ledger::Signature::from_hex(require_string(req.body, "signature"));
    } catch (const Error& e) {
        throw Error(Errc::SchemaViolation, e.what());
    }
    if (auto why = ledger::check_op_shape(tx.op)) throw Error(Errc::SchemaViolation, *why);

    auto choice = route(s.department);
    auto result = choice.node->submit_transaction(tx);
    if (!result.accepted) {
        auto code = result.error.value_or(Errc::SchemaViolation);
        auto resp = error_response(code, result.reason);
        resp.body["txHash"] = result.txHash.hex();
        return resp;
    }
    json body{{"status", "pending"},
              {"txHash", result.txHash.hex()},
              {"nodeId", choice.nodeId},
              {"failover", choice.failover}};
    if (auto h = choice.node->tx_height(result.txHash)) {
        body["status"] = "included";
        body["blockNumber"] = *h;
    }
    return ok(std::move(body));
}

Response Gateway::post_attachment(const Request& req, const Session& s) {
    auto op = op_from_json(OpKind::AttachFile, req.body);
    const auto& attach = std::get<ledger::AttachFile>(op);
    Bytes content;
    try {
        content = from_hex(require_string(req.body, "content"));
    } catch (const Error& e) {
        throw Error(Errc::SchemaViolation, std::string("content: ") + e.what());
    }
    if (ledger::digest_sha256(content) != attach.cid)
        throw Error(Errc::SchemaViolation, "cid is not the sha256 of the content");
    if (content.size() != attach.size) throw Error(Errc::SchemaViolation, "size does not match the content");

    auto resp = submit_write(req, s, op);
    if (resp.status != 200) return resp;
    // Content-addressed, so every replica of the department can hold it.
    std::set<std::string> targets{routes_.fallback};
    for (const auto& [dept, id] : routes_.departments) targets.insert(id);
    for (const auto& id : targets)
        if (auto* node = id.empty() ? nullptr : resolve_(id)) node->content().put(content);
    resp.body["cid"] = attach.cid.hex();
    return resp;
}

Response Gateway::post_account(const Request& req, const Session& s) {
    auto loginId = require_string(req.body, "loginId");
    auto password = require_string(req.body, "password");
    auto department = require_string(req.body, "department");
    if (loginId.empty() || password.empty()) throw Error(Errc::SchemaViolation, "loginId and password are required");
    if (!routes_.departments.count(department))
        throw Error(Errc::SchemaViolation, "unknown department '" + department + "'");
    if (enrolled(loginId)) throw Error(Errc::SchemaViolation, "login '" + loginId + "' already enrolled");
    auto op = op_from_json(OpKind::RegisterAccount, req.body);
    auto key = std::get<ledger::RegisterAccount>(op).accountKey;
    auto resp = submit_write(req, s, std::move(op));
    if (resp.status == 200) {
        enroll(loginId, password, key, department);
        resp.body["loginId"] = loginId;
    }
    return resp;
}

Response Gateway::export_transcript(const Request& req, const Session& s) {
    {
        std::lock_guard lock(mu_);
        auto it = credentials_.find(s.accountId);
        if (!check_password(it == credentials_.end() ? nullptr : &it->second, require_string(req.body, "password")))
            throw Error(Errc::BadCredentials, "password re-check failed");
    }
    auto studentId = s.role == Role::Student ? s.subjectId : require_string(req.body, "studentId");
    const auto& courses = require(req.body, "courses");
    if (!courses.is_array() || courses.empty()) throw Error(Errc::SchemaViolation, "courses must be a non-empty array");
    std::set<std::string> scope;
    for (const auto& c : courses) {
        if (!c.is_string()) throw Error(Errc::SchemaViolation, "course ids must be strings");
        scope.insert(c.get<std::string>());
    }
    auto choice = route(s.department);
    auto doc = state::export_transcript(choice.node->database(), studentId, scope, clock_(),
                                        ledger::AccountId::of(s.key));
    json rows = json::array();
    for (const auto& r : doc.rows)
        rows.push_back({{"courseId", r.courseId},
                        {"title", r.title},
                        {"term", r.term},
                        {"score", r.score},
                        {"letter", r.letter}});
    return ok({{"studentId", doc.studentId},
               {"studentName", doc.studentName},
               {"issuedAt", doc.issuedAt},
               {"rows", rows},
               {"digest", doc.digest.hex()},
               {"document", to_hex(doc.encode())},
               {"nodeId", choice.nodeId},
               {"failover", choice.failover}});
}

Response Gateway::get_oplog(const Request& req, const Session& s) {
    auto choice = route(s.department);
    auto offset = query_size(req, "offset", 0);
    auto limit = std::min<std::size_t>(query_size(req, "limit", 50), 500);
    bool everything = s.role == Role::Registrar || s.role == Role::Auditor;
    auto self = ledger::AccountId::of(s.key);

    json entries = json::array();
    std::size_t matched = 0;
    for (const auto& e : choice.node->database().op_log()) {
        if (!everything && e.actor != self) continue;
        if (matched++ < offset || entries.size() >= limit) continue;
        json row{{"seq", e.seq},
                 {"actor", e.actor.hex()},
                 {"opKind", e.opKind},
                 {"startTime", e.startTime},
                 {"txHash", e.txHash.hex()},
                 {"blockNumber", e.blockNumber},
                 {"status", e.status}};
        entries.push_back(std::move(row));
    }
    return ok({{"entries", entries}, {"total", matched}, {"offset", offset}, {"nodeId", choice.nodeId}});
}

Response Gateway::get_content(const Request& req, const Session& s) {
    auto choice = route(s.department);
    ledger::Hash256 cid;
    try {
        cid = ledger::Hash256::from_hex(path_param("/content/{cid}", req.path));
    } catch (const Error& e) {
        throw Error(Errc::BadRequest, e.what());
    }
    auto data = choice.node->content().get(cid);
    if (!data) throw Error(Errc::NotFound, "no content " + cid.hex());
    return ok({{"cid", cid.hex()}, {"size", data->size()}, {"content", to_hex(*data)}});
}

Response Gateway::get_tx(const Request& req, const Session& s) {
    auto choice = route(s.department);
    ledger::Hash256 hash;
    try {
        hash = ledger::Hash256::from_hex(path_param("/tx/{hash}", req.path));
    } catch (const Error& e) {
        throw Error(Errc::BadRequest, e.what());
    }
    if (auto h = choice.node->tx_height(hash))
        return ok({{"txHash", hash.hex()}, {"status", "included"}, {"blockNumber", *h}});
    const auto& pool = choice.node->mempool().entries();
    bool pending = std::any_of(pool.begin(), pool.end(), [&](const auto& tx) { return tx.hash() == hash; });
    if (!pending) throw Error(Errc::NotFound, "unknown transaction " + hash.hex());
    return ok({{"txHash", hash.hex()}, {"status", "pending"}});
}

Response Gateway::verify(const Request& req) {
    if (!verifier_) throw Error(Errc::NoNodeAvailable, "no consortium member bound for verification");
    auto fields = ledger::credential_fields_from_json(require(req.body, "credential"));
    auto reader = ledger::FieldReader::decode(fields.encode());
    for (const char* f : {"credentialType", "studentId", "period", "issuer"})
        if (!reader.has(f)) throw Error(Errc::SchemaViolation, std::string("credential lacks '") + f + "'");
    auto digest = ledger::digest_sha256(fields.encode());
    auto type = consortium::parse_credential_type(reader.string("credentialType"));
    if (!type) return ok({{"status", "NotFound"}, {"digest", digest.hex()}});
    auto found = verifier_->lookup_commitment(reader.string("studentId"), *type, reader.string("period"),
                                              reader.string("issuer"));
    if (!found || found->record.digest != digest) return ok({{"status", "NotFound"}, {"digest", digest.hex()}});
    return ok({{"status", "Verified"},
               {"issuer", found->record.issuer},
               {"seq", found->seq},
               {"digest", digest.hex()}});
}

Response Gateway::run_audit(const Request& req) {
    if (!audit_.auditor || !audit_.nodes) throw Error(Errc::NoNodesReachable, "no auditor bound");
    std::vector<state::TableId> tables;
    if (req.body.contains("tables")) {
        for (const auto& t : req.body.at("tables")) tables.push_back(state::table_from_name(t.get<std::string>()));
    } else {
        tables.assign(state::kAllTables.begin(), state::kAllTables.end());
    }
    std::lock_guard nodeLock(nodeMu_);
    audit::AuditOptions opts;
    opts.chunkSize = audit_.chunkSize;
    opts.timestamp = clock_();
    auto reports = audit_.auditor->run_round(audit_.nodes(), tables, opts);
    json out = json::array();
    for (const auto& r : reports) out.push_back(r.to_json());
    return ok({{"reports", out}});
}

Response Gateway::audit_reports(const Request& req) {
    if (!audit_.auditor) throw Error(Errc::NoNodesReachable, "no auditor bound");
    auto round = query_or(req, "roundId");
    std::lock_guard nodeLock(nodeMu_);
    json out = json::array();
    for (const auto& r : audit_.auditor->reports())
        if (round.empty() || r.roundId == round) out.push_back(r.to_json());
    return ok({{"reports", out}});
}

ledger::RecordOp write_op_from_json(ledger::OpKind kind, const json& body) { return op_from_json(kind, body); }

json signed_write_body(const ledger::Transaction& tx) {
    auto body = op_to_json(tx.op);
    body["nonce"] = tx.nonce;
    body["timestamp"] = tx.timestamp;
    body["signature"] = tx.signature.hex();
    return body;
}

Response Client::login(const std::string& accountId, const std::string& password) {
    auto resp = gateway_.handle({"POST", "/login", {}, {}, {{"accountId", accountId}, {"password", password}}});
    if (resp.status == 200) token_ = resp.body.at("token").get<std::string>();
    return resp;
}

Response Client::call(const std::string& method, const std::string& path, json body,
                      std::map<std::string, std::string> query) {
    return gateway_.handle({method, path, std::move(query), token_, std::move(body)});
}

Response Client::write(const std::string& method, const std::string& path, const ledger::RecordOp& op,
                       std::uint64_t timestamp, json extra) {
    auto session = call("GET", "/session");
    std::uint64_t nonce = session.status == 200 ? session.body.at("nonce").get<std::uint64_t>() : 0;
    auto tx = ledger::Transaction::make_signed(key_, nonce, op, timestamp);
    auto body = signed_write_body(tx);
    for (const auto& [k, v] : extra.items()) body[k] = v;
    return call(method, path, std::move(body));
}

}  // namespace educhain::gateway
