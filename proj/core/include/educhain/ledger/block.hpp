#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "educhain/ledger/digest.hpp"
#include "educhain/ledger/keys.hpp"
#include "educhain/ledger/transaction.hpp"

namespace educhain::ledger {

// 256-bit proof-of-work threshold, stored big-endian. A header is sealed when
// its hash, read as a big-endian integer, is <= the target.
class Target {
public:
    Target() = default;

    // floor(2^256 / difficulty), clamped to 2^256 - 1 for difficulty 1.
    static Target from_difficulty(std::uint64_t difficulty);
    static Target max();
    // 2^exponent for exponent in [0, 255].
    static Target power_of_two(unsigned exponent);
    static Target from_hex(std::string_view hex);

    bool accepts(const Hash256& hash) const noexcept;
    bool is_zero() const noexcept;
    std::string hex() const { return to_hex({bytes_.data(), bytes_.size()}); }
    const std::array<std::uint8_t, 32>& bytes() const noexcept { return bytes_; }

    friend auto operator<=>(const Target&, const Target&) = default;

private:
    std::array<std::uint8_t, 32> bytes_{};
};

struct BlockHeader {
    std::uint64_t chainId = 0;
    std::uint64_t height = 0;
    Hash256 parentHash;
    Hash256 txRoot;
    std::uint64_t timestamp = 0;  // unix ms
    Target target;
    std::uint64_t powNonce = 0;
    AccountId minerId;
    Bytes extraData;

    FieldMap fields() const;
    Bytes encode() const { return fields().encode(); }
    static BlockHeader from_fields(const FieldReader& reader);

    friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

// digest_sha256(canonical encoding of the header, powNonce included).
Hash256 block_hash(const BlockHeader& header);

// SHA-256 over the concatenated canonical transaction encodings.
Hash256 compute_tx_root(std::span<const Transaction> txs);

struct Block {
    BlockHeader header;
    std::vector<Transaction> txs;

    Hash256 hash() const { return block_hash(header); }
    Bytes encode() const;
    static Block decode(ByteView data);

    friend bool operator==(const Block&, const Block&) = default;
};

// Genesis parameters, fixed at network creation and identical on every node.
//
// The reference deployment's genesis listing also carried Ethereum fork
// activation switches (homestead/eip150/eip155/eip158/byzantium at block 0).
// They have no behaviour outside an Ethereum client and are not modelled.
struct ChainConfig {
    std::uint64_t chainId = 5421;
    Target initialTarget = Target::from_difficulty(0x400);
    std::uint32_t maxTxPerBlock = 1024;
    Bytes genesisExtraData{0x54, 0x21};
    std::uint64_t genesisNonce = 0xdeadbeefdeadbeefULL;
    std::uint32_t maxPeers = 7;
    std::uint64_t genesisTimestamp = 0;
    // Bootstrap key registry (registrar, auditor, node operators).
    std::vector<RegisterAccount> genesisAccounts;

    // Throws Error(ConfigInvalid).
    void validate() const;
};

Block make_genesis(const ChainConfig& config);

// Searches powNonce upward from 0 until block_hash(header) <= target. Only
// powNonce differs between input and output. Throws Error(SearchExhausted)
// after `max_attempts` hashes.
BlockHeader pow_seal(BlockHeader header, const Target& target,
                     std::uint64_t max_attempts = std::numeric_limits<std::uint64_t>::max());

enum class ViolationKind {
    BadParentLink,
    BadHeight,
    BadTxRoot,
    InsufficientWork,
    TimestampRegression,
    TooManyTxs,
    BadTxSignature,
    UnknownSigner,
    WrongChainId,
    BadTx,
};

std::string_view violation_name(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::optional<std::size_t> txIndex;
    std::string detail;

    std::string to_string() const;
    friend bool operator==(const Violation&, const Violation&) = default;
};

// Public key lookup for transaction senders as of the parent block.
using KeyLookup = std::function<std::optional<PublicKey>(const AccountId&)>;

// Checks, in order: parent-hash linkage, height, txRoot, proof-of-work,
// timestamp monotonicity, tx count, and every tx signature. Keys registered
// by RegisterAccount transactions earlier in the same block are visible to
// later transactions. Returns every violation found; empty means valid.
std::vector<Violation> validate_block(const Block& block, const BlockHeader& parent, const ChainConfig& config,
                                      const KeyLookup& keys);

}  // namespace educhain::ledger
