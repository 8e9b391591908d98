#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

#include "educhain/bytes.hpp"
#include "educhain/ledger/digest.hpp"

namespace educhain::ledger {

// Ed25519 public key.
class PublicKey {
public:
    static constexpr std::size_t kSize = 32;

    PublicKey() = default;
    // Throws Error(MalformedKey) on wrong length or a non-curve point.
    static PublicKey from_bytes(ByteView data);
    static PublicKey from_hex(std::string_view hex);

    ByteView view() const noexcept { return {bytes_.data(), bytes_.size()}; }
    std::string hex() const { return to_hex(view()); }

    friend auto operator<=>(const PublicKey&, const PublicKey&) = default;

private:
    std::array<std::uint8_t, kSize> bytes_{};
};

class Signature {
public:
    static constexpr std::size_t kSize = 64;

    Signature() = default;
    // Throws Error(MalformedSignature) on wrong length.
    static Signature from_bytes(ByteView data);
    static Signature from_hex(std::string_view hex);

    ByteView view() const noexcept { return {bytes_.data(), bytes_.size()}; }
    std::string hex() const { return to_hex(view()); }
    std::array<std::uint8_t, kSize>& mutable_bytes() noexcept { return bytes_; }

    friend auto operator<=>(const Signature&, const Signature&) = default;

private:
    std::array<std::uint8_t, kSize> bytes_{};
};

// Account identifier: SHA-256 of the public key bytes.
struct AccountId {
    Hash256 digest;

    static AccountId of(const PublicKey& key) { return {digest_sha256(key.view())}; }
    static AccountId from_hex(std::string_view hex) { return {Hash256::from_hex(hex)}; }
    std::string hex() const { return digest.hex(); }
    // First 8 hex chars, for logs and reports.
    std::string short_hex() const { return digest.hex().substr(0, 8); }

    friend auto operator<=>(const AccountId&, const AccountId&) = default;
};

class KeyPair {
public:
    static KeyPair generate();
    // Deterministic key derivation; the harness uses this so that seeded runs
    // reproduce byte-identical chains.
    static KeyPair from_seed(const Hash256& seed);

    KeyPair(const KeyPair&) = default;
    KeyPair& operator=(const KeyPair&) = default;
    ~KeyPair();

    const PublicKey& public_key() const noexcept { return public_; }
    AccountId account() const { return AccountId::of(public_); }
    Signature sign(ByteView message) const;

    // Opens a payload produced by seal_to() for this key's public half.
    // Returns nullopt when the payload was not sealed to this key or was
    // modified in flight.
    std::optional<Bytes> open_sealed(ByteView sealed) const;

private:
    KeyPair() = default;

    PublicKey public_;
    std::array<std::uint8_t, 64> secret_{};
};

bool verify_signature(const PublicKey& key, ByteView message, const Signature& signature);

// 32 bytes from the OS CSPRNG, for key files that store the seed.
Hash256 random_seed();

// Anonymous public-key encryption to `recipient` (X25519 + XSalsa20-Poly1305,
// the libsodium sealed-box construction). The ephemeral key is derived from
// `ephemeral_seed` so seeded simulations stay reproducible; callers outside
// the harness pass a random seed.
Bytes seal_to(const PublicKey& recipient, ByteView plaintext, const Hash256& ephemeral_seed);
Bytes seal_to(const PublicKey& recipient, ByteView plaintext);

// Cryptographically random bytes.
Bytes random_bytes(std::size_t n);

}  // namespace educhain::ledger
