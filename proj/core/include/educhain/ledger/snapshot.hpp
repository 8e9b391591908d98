#pragma once

#include <filesystem>
#include <string_view>

#include "educhain/bytes.hpp"
#include "educhain/ledger/canonical.hpp"

namespace educhain::ledger {

// Snapshot container shared by the state store and the consortium log:
//
//   "ECSNAP" u32be(version) canonical({"kind": <kind>, "body": <body>})
//
// Deterministic: identical content always produces identical bytes.
inline constexpr std::uint32_t kSnapshotVersion = 1;

Bytes wrap_snapshot(std::string_view kind, const FieldMap& body);
// Throws Error(BadSnapshot) on a wrong magic, version or kind.
FieldReader unwrap_snapshot(ByteView data, std::string_view kind);

void write_file(const std::filesystem::path& path, ByteView data);
Bytes read_file(const std::filesystem::path& path);

// Zero-padded decimal index, used as the key of list-like nested maps so
// that bytewise key order equals numeric order.
std::string index_key(std::size_t i);

}  // namespace educhain::ledger
