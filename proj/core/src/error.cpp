#include "educhain/error.hpp"

#include "educhain/bytes.hpp"

namespace educhain {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::UnsupportedValue: return "UnsupportedValue";
        case Errc::MalformedEncoding: return "MalformedEncoding";
        case Errc::MalformedKey: return "MalformedKey";
        case Errc::MalformedSignature: return "MalformedSignature";
        case Errc::SearchExhausted: return "SearchExhausted";
        case Errc::InvalidChain: return "InvalidChain";
        case Errc::UnknownAccount: return "UnknownAccount";
        case Errc::PermissionDenied: return "PermissionDenied";
        case Errc::BadNonce: return "BadNonce";
        case Errc::BadSignature: return "BadSignature";
        case Errc::MempoolFull: return "MempoolFull";
        case Errc::NotAcceptingTransactions: return "NotAcceptingTransactions";
        case Errc::UnknownTable: return "UnknownTable";
        case Errc::UnknownField: return "UnknownField";
        case Errc::NotFound: return "NotFound";
        case Errc::UnknownStudent: return "UnknownStudent";
        case Errc::MissingGrade: return "MissingGrade";
        case Errc::BadChunkSize: return "BadChunkSize";
        case Errc::SchemaViolation: return "SchemaViolation";
        case Errc::UnknownMember: return "UnknownMember";
        case Errc::MalformedPayload: return "MalformedPayload";
        case Errc::UnknownChannel: return "UnknownChannel";
        case Errc::WrongResponder: return "WrongResponder";
        case Errc::DigestMismatch: return "DigestMismatch";
        case Errc::DecryptionFailed: return "DecryptionFailed";
        case Errc::AlreadyPublished: return "AlreadyPublished";
        case Errc::UnknownSubject: return "UnknownSubject";
        case Errc::ScopeUnavailable: return "ScopeUnavailable";
        case Errc::NoNodesReachable: return "NoNodesReachable";
        case Errc::TablesEqual: return "TablesEqual";
        case Errc::ChainUnavailable: return "ChainUnavailable";
        case Errc::StaleFix: return "StaleFix";
        case Errc::BadCredentials: return "BadCredentials";
        case Errc::AccountLocked: return "AccountLocked";
        case Errc::NoNodeAvailable: return "NoNodeAvailable";
        case Errc::ConfigInvalid: return "ConfigInvalid";
        case Errc::UnknownTarget: return "UnknownTarget";
        case Errc::AssertionFailed: return "AssertionFailed";
        case Errc::BadSnapshot: return "BadSnapshot";
        case Errc::Unauthenticated: return "Unauthenticated";
        case Errc::BadRequest: return "BadRequest";
    }
    return "Unknown";
}

std::optional<Errc> parse_errc(std::string_view name) noexcept {
    for (int i = 0; i <= static_cast<int>(Errc::BadRequest); ++i)
        if (to_string(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
    return std::nullopt;
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code) {}

std::string to_hex(ByteView data) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

namespace {

int nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

Bytes from_hex(std::string_view hex) {
    if (hex.size() >= 2 && hex[0] == '0' && (hex[1] == 'x' || hex[1] == 'X')) hex.remove_prefix(2);
    if (hex.size() % 2 != 0) throw Error(Errc::MalformedEncoding, "odd-length hex string");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = nibble(hex[2 * i]);
        int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw Error(Errc::MalformedEncoding, "non-hex character");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

}  // namespace educhain
