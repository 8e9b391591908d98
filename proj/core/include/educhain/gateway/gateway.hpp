#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "educhain/audit/audit.hpp"
#include "educhain/chain/private_node.hpp"
#include "educhain/consortium/log.hpp"
#include "educhain/error.hpp"
#include "educhain/ledger/keys.hpp"
#include "educhain/ledger/transaction.hpp"

namespace educhain::gateway {

using nlohmann::json;

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string token;  // bearer token; empty when absent
    json body = json::object();
};

struct Response {
    int status = 200;
    json body = json::object();
};

// Callers of an endpoint: no session, or a session with one of the four roles.
enum class Principal : std::uint8_t { Anonymous, Student, Staff, Registrar, Auditor };
inline constexpr std::size_t kPrincipalCount = 5;
std::string_view principal_name(Principal p) noexcept;
Principal principal_of(ledger::Role role) noexcept;

struct EndpointPolicy {
    std::string method;
    std::string path;  // "{x}" marks a trailing path parameter
    std::string backing;
    std::array<bool, kPrincipalCount> allowed;  // indexed by Principal

    bool allows(Principal p) const { return allowed[static_cast<std::size_t>(p)]; }
};

// The allow/deny table enforced before any request reaches a node. Mirrored
// in docs/permissions.md.
const std::vector<EndpointPolicy>& endpoint_policies();
const EndpointPolicy* find_policy(std::string_view method, std::string_view path);

// HTTP status for an error code; error bodies carry {"error": name, "message"}.
int http_status(Errc code) noexcept;
Response error_response(Errc code, const std::string& message);

struct RouteTable {
    std::map<std::string, std::string> departments;  // department -> nodeId
    std::string fallback;                             // nodeId
};

// nullptr means the node is currently unreachable.
using NodeResolver = std::function<chain::PrivateNode*(const std::string& nodeId)>;
using Clock = std::function<std::uint64_t()>;

struct RouteChoice {
    std::string nodeId;
    chain::PrivateNode* node = nullptr;
    bool failover = false;
};

struct Session {
    std::string token;  // hex of 32 random bytes
    std::string accountId;
    ledger::Role role = ledger::Role::Student;
    std::string subjectId;
    std::string department;
    ledger::PublicKey key;
    std::uint64_t expiry = 0;  // clock ms
};

struct GatewayOptions {
    std::uint64_t sessionTtlMs = 30 * 60 * 1000;
    unsigned maxFailedLogins = 10;
    // Argon2id cost; tests and the harness lower these.
    unsigned long long pwhashOps = 2;
    std::size_t pwhashMemBytes = 64u << 20;
};

struct AuditBinding {
    audit::Auditor* auditor = nullptr;
    std::function<std::vector<audit::NodeHandle>()> nodes;
    std::size_t chunkSize = 64;
};

// Front-end server logic, transport-free: handle() maps a JSON request to a
// JSON response. Users sign their own transactions; the gateway only checks
// the session, the role table and the payload shape before routing.
class Gateway {
public:
    Gateway(RouteTable routes, NodeResolver resolve, Clock clock, GatewayOptions options = {});

    void set_verifier(const consortium::Member* member) { verifier_ = member; }
    void set_audit(AuditBinding binding) { audit_ = std::move(binding); }

    // Stores a salted Argon2id digest for a login name bound to a signing key.
    void enroll(const std::string& accountId, const std::string& password, const ledger::PublicKey& key,
                const std::string& department);
    bool enrolled(const std::string& accountId) const;

    // Throws BadCredentials, AccountLocked or NoNodeAvailable.
    Session login(const std::string& accountId, const std::string& password);

    // Mapped node, else the fallback once. Throws NoNodeAvailable.
    RouteChoice route(const std::string& department) const;

    Response handle(const Request& request);

    // Serializes node access between handle() and whatever drives block
    // production concurrently (the HTTP demo server).
    std::recursive_mutex& node_lock() noexcept { return nodeMu_; }

private:
    struct Credential {
        std::string hash;
        ledger::PublicKey key;
        std::string department;
        unsigned failures = 0;
    };

    bool check_password(Credential* cred, const std::string& password);
    std::optional<Session> session_for(const std::string& token);

    Response dispatch(const Request& req, const EndpointPolicy& policy, const Session* session);
    Response do_login(const Request& req);
    Response get_session(const Session& s);
    Response get_profile(const Request& req, const Session& s);
    Response get_grades(const Request& req, const Session& s);
    Response submit_write(const Request& req, const Session& s, ledger::RecordOp op);
    Response post_attachment(const Request& req, const Session& s);
    Response post_account(const Request& req, const Session& s);
    Response export_transcript(const Request& req, const Session& s);
    Response get_oplog(const Request& req, const Session& s);
    Response get_content(const Request& req, const Session& s);
    Response get_tx(const Request& req, const Session& s);
    Response verify(const Request& req);
    Response run_audit(const Request& req);
    Response audit_reports(const Request& req);

    RouteTable routes_;
    NodeResolver resolve_;
    Clock clock_;
    GatewayOptions options_;
    const consortium::Member* verifier_ = nullptr;
    AuditBinding audit_;
    std::string dummyHash_;

    mutable std::mutex mu_;  // credentials and sessions
    std::map<std::string, Credential> credentials_;
    std::map<std::string, Session> sessions_;
    std::recursive_mutex nodeMu_;
};

// Client side: the JSON body of a signed write. Field names mirror the
// canonical encoding; "kind" and "sender" are implied by the endpoint and
// the session.
json signed_write_body(const ledger::Transaction& tx);
// The op carried by a write body. Throws SchemaViolation.
ledger::RecordOp write_op_from_json(ledger::OpKind kind, const json& body);

// Minimal in-process client used by the CLI and the harness: keeps the
// session token and the account's signing key, and fills nonces.
class Client {
public:
    Client(Gateway& gateway, ledger::KeyPair key) : gateway_(gateway), key_(std::move(key)) {}

    Response login(const std::string& accountId, const std::string& password);
    Response call(const std::string& method, const std::string& path, json body = json::object(),
                  std::map<std::string, std::string> query = {});
    // Signs `op` with the next nonce and posts it to the endpoint.
    Response write(const std::string& method, const std::string& path, const ledger::RecordOp& op,
                   std::uint64_t timestamp, json extra = json::object());

    const std::string& token() const noexcept { return token_; }
    const ledger::KeyPair& key() const noexcept { return key_; }

private:
    Gateway& gateway_;
    ledger::KeyPair key_;
    std::string token_;
};

}  // namespace educhain::gateway
