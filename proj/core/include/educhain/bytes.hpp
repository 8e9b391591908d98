#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace educhain {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline Bytes to_bytes(std::string_view s) {
    return {s.begin(), s.end()};
}

inline std::string to_string(ByteView b) {
    return {b.begin(), b.end()};
}

// Lowercase, no prefix.
std::string to_hex(ByteView data);

// Accepts upper or lower case; throws Error(MalformedEncoding) on odd length
// or non-hex characters. An optional "0x" prefix is tolerated.
Bytes from_hex(std::string_view hex);

}  // namespace educhain
