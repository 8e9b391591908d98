#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace educhain {

// Machine-readable error codes shared by every module. The gateway maps
// these onto HTTP statuses and echoes the name in error bodies.
enum class Errc {
    UnsupportedValue,
    MalformedEncoding,
    MalformedKey,
    MalformedSignature,
    SearchExhausted,
    InvalidChain,
    UnknownAccount,
    PermissionDenied,
    BadNonce,
    BadSignature,
    MempoolFull,
    NotAcceptingTransactions,
    UnknownTable,
    UnknownField,
    NotFound,
    UnknownStudent,
    MissingGrade,
    BadChunkSize,
    SchemaViolation,
    UnknownMember,
    MalformedPayload,
    UnknownChannel,
    WrongResponder,
    DigestMismatch,
    DecryptionFailed,
    AlreadyPublished,
    UnknownSubject,
    ScopeUnavailable,
    NoNodesReachable,
    TablesEqual,
    ChainUnavailable,
    StaleFix,
    BadCredentials,
    AccountLocked,
    NoNodeAvailable,
    ConfigInvalid,
    UnknownTarget,
    AssertionFailed,
    BadSnapshot,
    Unauthenticated,
    BadRequest,
};

std::string_view to_string(Errc code) noexcept;
std::optional<Errc> parse_errc(std::string_view name) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace educhain
