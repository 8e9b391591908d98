#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include "educhain/bytes.hpp"

namespace educhain::ledger {

// Fixed-width digest. Hex rendering is lowercase without prefix.
template <std::size_t N>
class Digest {
public:
    static constexpr std::size_t kSize = N;

    constexpr Digest() = default;
    explicit constexpr Digest(const std::array<std::uint8_t, N>& bytes) : bytes_(bytes) {}

    // Throws Error(MalformedEncoding) unless `data` is exactly N bytes.
    static Digest from_bytes(ByteView data);
    static Digest from_hex(std::string_view hex) { return from_bytes(educhain::from_hex(hex)); }

    const std::array<std::uint8_t, N>& bytes() const noexcept { return bytes_; }
    ByteView view() const noexcept { return {bytes_.data(), bytes_.size()}; }
    std::string hex() const { return to_hex(view()); }

    bool is_zero() const noexcept {
        for (auto b : bytes_)
            if (b != 0) return false;
        return true;
    }

    friend auto operator<=>(const Digest&, const Digest&) = default;

private:
    std::array<std::uint8_t, N> bytes_{};
};

using Hash256 = Digest<32>;
using Hash128 = Digest<16>;

// FIPS 180-4 SHA-256.
Hash256 digest_sha256(ByteView data);
inline Hash256 digest_sha256(std::string_view data) { return digest_sha256(as_bytes(data)); }

// RFC 1321 MD5. Used only for replica checksums, never for authentication.
Hash128 digest_md5(ByteView data);
inline Hash128 digest_md5(std::string_view data) { return digest_md5(as_bytes(data)); }

// Incremental MD5 for digesting long row sequences without concatenating them.
class Md5Stream {
public:
    Md5Stream();
    ~Md5Stream();
    Md5Stream(const Md5Stream&) = delete;
    Md5Stream& operator=(const Md5Stream&) = delete;

    void update(ByteView data);
    Hash128 finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace educhain::ledger

template <std::size_t N>
struct std::hash<educhain::ledger::Digest<N>> {
    std::size_t operator()(const educhain::ledger::Digest<N>& d) const noexcept {
        std::size_t h = 0;
        for (std::size_t i = 0; i < sizeof(std::size_t) && i < N; ++i)
            h = (h << 8) | d.bytes()[i];
        return h;
    }
};
