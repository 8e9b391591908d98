#include "educhain/ledger/keys.hpp"

#include <sodium.h>

#include <algorithm>
#include <stdexcept>

#include "educhain/error.hpp"

namespace educhain::ledger {

namespace {

void ensure_sodium() {
    static const bool ready = [] {
        if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
        return true;
    }();
    (void)ready;
}

// X25519 keys for sealing are derived from the Ed25519 signing keys, so each
// participant publishes a single key.
std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_public(const PublicKey& key) {
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> out{};
    if (crypto_sign_ed25519_pk_to_curve25519(out.data(), key.view().data()) != 0)
        throw Error(Errc::MalformedKey, "public key cannot be converted for encryption");
    return out;
}

std::array<std::uint8_t, crypto_box_NONCEBYTES> seal_nonce(const std::uint8_t* ephemeral_pk,
                                                           const std::uint8_t* recipient_pk) {
    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, ephemeral_pk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_update(&st, recipient_pk, crypto_box_PUBLICKEYBYTES);
    crypto_generichash_final(&st, nonce.data(), nonce.size());
    return nonce;
}

}  // namespace

PublicKey PublicKey::from_bytes(ByteView data) {
    ensure_sodium();
    if (data.size() != kSize) throw Error(Errc::MalformedKey, "public key must be 32 bytes");
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> probe{};
    if (crypto_sign_ed25519_pk_to_curve25519(probe.data(), data.data()) != 0)
        throw Error(Errc::MalformedKey, "not a valid Ed25519 point");
    PublicKey k;
    std::copy(data.begin(), data.end(), k.bytes_.begin());
    return k;
}

PublicKey PublicKey::from_hex(std::string_view hex) {
    Bytes b;
    try {
        b = educhain::from_hex(hex);
    } catch (const Error&) {
        throw Error(Errc::MalformedKey, "public key is not hex");
    }
    return from_bytes(b);
}

Signature Signature::from_bytes(ByteView data) {
    if (data.size() != kSize) throw Error(Errc::MalformedSignature, "signature must be 64 bytes");
    Signature s;
    std::copy(data.begin(), data.end(), s.bytes_.begin());
    return s;
}

Signature Signature::from_hex(std::string_view hex) {
    Bytes b;
    try {
        b = educhain::from_hex(hex);
    } catch (const Error&) {
        throw Error(Errc::MalformedSignature, "signature is not hex");
    }
    return from_bytes(b);
}

Hash256 random_seed() {
    ensure_sodium();
    std::array<std::uint8_t, Hash256::kSize> bytes{};
    randombytes_buf(bytes.data(), bytes.size());
    return Hash256::from_bytes(bytes);
}

KeyPair KeyPair::generate() {
    ensure_sodium();
    KeyPair kp;
    std::array<std::uint8_t, 32> pk{};
    crypto_sign_keypair(pk.data(), kp.secret_.data());
    kp.public_ = PublicKey::from_bytes(pk);
    return kp;
}

KeyPair KeyPair::from_seed(const Hash256& seed) {
    ensure_sodium();
    KeyPair kp;
    std::array<std::uint8_t, 32> pk{};
    crypto_sign_seed_keypair(pk.data(), kp.secret_.data(), seed.bytes().data());
    kp.public_ = PublicKey::from_bytes(pk);
    return kp;
}

KeyPair::~KeyPair() { sodium_memzero(secret_.data(), secret_.size()); }

Signature KeyPair::sign(ByteView message) const {
    Signature sig;
    crypto_sign_detached(sig.mutable_bytes().data(), nullptr, message.data(), message.size(), secret_.data());
    return sig;
}

bool verify_signature(const PublicKey& key, ByteView message, const Signature& signature) {
    ensure_sodium();
    return crypto_sign_verify_detached(signature.view().data(), message.data(), message.size(),
                                       key.view().data()) == 0;
}

Bytes seal_to(const PublicKey& recipient, ByteView plaintext, const Hash256& ephemeral_seed) {
    ensure_sodium();
    auto rpk = curve_public(recipient);
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk{};
    crypto_box_seed_keypair(epk.data(), esk.data(), ephemeral_seed.bytes().data());
    auto nonce = seal_nonce(epk.data(), rpk.data());

    Bytes out(epk.size() + crypto_box_MACBYTES + plaintext.size());
    std::copy(epk.begin(), epk.end(), out.begin());
    int rc = crypto_box_easy(out.data() + epk.size(), plaintext.data(), plaintext.size(), nonce.data(),
                             rpk.data(), esk.data());
    sodium_memzero(esk.data(), esk.size());
    if (rc != 0) throw std::runtime_error("crypto_box_easy failed");
    return out;
}

Bytes seal_to(const PublicKey& recipient, ByteView plaintext) {
    auto seed = random_bytes(32);
    return seal_to(recipient, plaintext, Hash256::from_bytes(seed));
}

std::optional<Bytes> KeyPair::open_sealed(ByteView sealed) const {
    ensure_sodium();
    if (sealed.size() < crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES) return std::nullopt;
    auto rpk = curve_public(public_);
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> rsk{};
    crypto_sign_ed25519_sk_to_curve25519(rsk.data(), secret_.data());
    const std::uint8_t* epk = sealed.data();
    auto nonce = seal_nonce(epk, rpk.data());
    Bytes plain(sealed.size() - crypto_box_PUBLICKEYBYTES - crypto_box_MACBYTES);
    int rc = crypto_box_open_easy(plain.data(), sealed.data() + crypto_box_PUBLICKEYBYTES,
                                  sealed.size() - crypto_box_PUBLICKEYBYTES, nonce.data(), epk, rsk.data());
    sodium_memzero(rsk.data(), rsk.size());
    if (rc != 0) return std::nullopt;
    return plain;
}

Bytes random_bytes(std::size_t n) {
    ensure_sodium();
    Bytes out(n);
    randombytes_buf(out.data(), out.size());
    return out;
}

}  // namespace educhain::ledger
