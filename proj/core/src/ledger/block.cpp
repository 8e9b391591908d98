#include "educhain/ledger/block.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <map>

#include <boost/multiprecision/cpp_int.hpp>

#include "educhain/error.hpp"
#include "educhain/ledger/snapshot.hpp"

namespace educhain::ledger {

namespace mp = boost::multiprecision;

Target Target::from_difficulty(std::uint64_t difficulty) {
    if (difficulty == 0) throw Error(Errc::ConfigInvalid, "difficulty must be positive");
    mp::uint512_t full = mp::uint512_t(1) << 256;
    mp::uint512_t q = full / difficulty;
    mp::uint512_t cap = (mp::uint512_t(1) << 256) - 1;
    if (q > cap) q = cap;
    Target t;
    for (int i = 31; i >= 0; --i) {
        t.bytes_[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(q & 0xff);
        q >>= 8;
    }
    return t;
}

Target Target::max() {
    Target t;
    t.bytes_.fill(0xff);
    return t;
}

Target Target::power_of_two(unsigned exponent) {
    if (exponent > 255) throw Error(Errc::ConfigInvalid, "target exponent out of range");
    Target t;
    t.bytes_[31 - exponent / 8] = static_cast<std::uint8_t>(1u << (exponent % 8));
    return t;
}

Target Target::from_hex(std::string_view hex) {
    auto b = educhain::from_hex(hex);
    if (b.size() != 32) throw Error(Errc::MalformedEncoding, "target must be 32 bytes");
    Target t;
    std::copy(b.begin(), b.end(), t.bytes_.begin());
    return t;
}

bool Target::accepts(const Hash256& hash) const noexcept {
    // Both are big-endian, so lexicographic byte order is numeric order.
    return hash.bytes() <= bytes_;
}

bool Target::is_zero() const noexcept {
    return std::all_of(bytes_.begin(), bytes_.end(), [](auto b) { return b == 0; });
}

FieldMap BlockHeader::fields() const {
    FieldMap m;
    m.set_uint("chainId", chainId)
        .set_uint("height", height)
        .set_hex("parentHash", parentHash.view())
        .set_hex("txRoot", txRoot.view())
        .set_uint("timestamp", timestamp)
        .set_string("target", target.hex())
        .set_uint("powNonce", powNonce)
        .set_hex("minerId", minerId.digest.view())
        .set_hex("extraData", extraData);
    return m;
}

BlockHeader BlockHeader::from_fields(const FieldReader& r) {
    BlockHeader h;
    h.chainId = r.uint("chainId");
    h.height = r.uint("height");
    h.parentHash = Hash256::from_bytes(r.hex("parentHash"));
    h.txRoot = Hash256::from_bytes(r.hex("txRoot"));
    h.timestamp = r.uint("timestamp");
    h.target = Target::from_hex(r.string("target"));
    h.powNonce = r.uint("powNonce");
    h.minerId = AccountId{Hash256::from_bytes(r.hex("minerId"))};
    h.extraData = r.hex("extraData");
    return h;
}

Hash256 block_hash(const BlockHeader& header) { return digest_sha256(header.encode()); }

Hash256 compute_tx_root(std::span<const Transaction> txs) {
    Bytes all;
    for (const auto& tx : txs) {
        auto enc = tx.encode();
        all.insert(all.end(), enc.begin(), enc.end());
    }
    return digest_sha256(all);
}

Bytes Block::encode() const {
    FieldMap txmap;
    for (std::size_t i = 0; i < txs.size(); ++i) txmap.set_raw(index_key(i), txs[i].encode());
    FieldMap m;
    m.set_map("header", header.fields()).set_map("txs", txmap);
    return m.encode();
}

Block Block::decode(ByteView data) {
    auto r = FieldReader::decode(data);
    Block b;
    b.header = BlockHeader::from_fields(r.nested("header"));
    auto txr = r.nested("txs");
    std::size_t i = 0;
    for (const auto& [name, value] : txr.fields()) {
        if (name != index_key(i)) throw Error(Errc::MalformedEncoding, "transaction index keys not dense");
        b.txs.push_back(Transaction::decode(value));
        ++i;
    }
    return b;
}

void ChainConfig::validate() const {
    if (chainId == 0) throw Error(Errc::ConfigInvalid, "chainId must be > 0");
    if (initialTarget.is_zero()) throw Error(Errc::ConfigInvalid, "target must be > 0");
    if (maxTxPerBlock == 0) throw Error(Errc::ConfigInvalid, "maxTxPerBlock must be > 0");
    if (maxPeers == 0) throw Error(Errc::ConfigInvalid, "maxPeers must be > 0");
    for (const auto& acct : genesisAccounts)
        if (auto why = check_op_shape(RecordOp{acct})) throw Error(Errc::ConfigInvalid, *why);
}

Block make_genesis(const ChainConfig& config) {
    Block g;
    g.header.chainId = config.chainId;
    g.header.height = 0;
    Bytes alloc;
    for (const auto& acct : config.genesisAccounts) {
        auto enc = encode_op(acct);
        alloc.insert(alloc.end(), enc.begin(), enc.end());
    }
    g.header.txRoot = digest_sha256(alloc);
    g.header.timestamp = config.genesisTimestamp;
    g.header.target = config.initialTarget;
    g.header.powNonce = config.genesisNonce;
    g.header.extraData = config.genesisExtraData;
    return g;
}

BlockHeader pow_seal(BlockHeader header, const Target& target, std::uint64_t max_attempts) {
    if (target.is_zero()) throw Error(Errc::SearchExhausted, "zero target can never be met");

    // Everything except powNonce is fixed during the search; pre-encode the
    // fields sorting before and after it.
    header.powNonce = 0;
    auto fields = header.fields();
    Bytes prefix, suffix;
    {
        FieldMap before, after;
        for (const auto& [name, value] : fields.fields()) {
            if (name < "powNonce") before.set_raw(name, value);
            else if (name > "powNonce") after.set_raw(name, value);
        }
        prefix = before.encode();
        suffix = after.encode();
    }
    static constexpr std::string_view kName = "powNonce";

    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    std::array<std::uint8_t, 32> out{};
    auto put_u32 = [](std::uint8_t* p, std::uint32_t v) {
        p[0] = static_cast<std::uint8_t>(v >> 24);
        p[1] = static_cast<std::uint8_t>(v >> 16);
        p[2] = static_cast<std::uint8_t>(v >> 8);
        p[3] = static_cast<std::uint8_t>(v);
    };
    std::uint8_t head[4 + kName.size() + 4];
    put_u32(head, static_cast<std::uint32_t>(kName.size()));
    std::copy(kName.begin(), kName.end(), head + 4);

    for (std::uint64_t attempt = 0; attempt < max_attempts; ++attempt) {
        auto digits = std::to_string(attempt);
        put_u32(head + 4 + kName.size(), static_cast<std::uint32_t>(digits.size()));
        EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
        EVP_DigestUpdate(ctx, prefix.data(), prefix.size());
        EVP_DigestUpdate(ctx, head, sizeof head);
        EVP_DigestUpdate(ctx, digits.data(), digits.size());
        EVP_DigestUpdate(ctx, suffix.data(), suffix.size());
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx, out.data(), &len);
        if (target.accepts(Hash256(out))) {
            EVP_MD_CTX_free(ctx);
            header.powNonce = attempt;
            return header;
        }
    }
    EVP_MD_CTX_free(ctx);
    throw Error(Errc::SearchExhausted, "no nonce below target within " + std::to_string(max_attempts) + " attempts");
}

std::string_view violation_name(ViolationKind kind) noexcept {
    switch (kind) {
        case ViolationKind::BadParentLink: return "BadParentLink";
        case ViolationKind::BadHeight: return "BadHeight";
        case ViolationKind::BadTxRoot: return "BadTxRoot";
        case ViolationKind::InsufficientWork: return "InsufficientWork";
        case ViolationKind::TimestampRegression: return "TimestampRegression";
        case ViolationKind::TooManyTxs: return "TooManyTxs";
        case ViolationKind::BadTxSignature: return "BadTxSignature";
        case ViolationKind::UnknownSigner: return "UnknownSigner";
        case ViolationKind::WrongChainId: return "WrongChainId";
        case ViolationKind::BadTx: return "BadTx";
    }
    return "Unknown";
}

std::string Violation::to_string() const {
    std::string s(violation_name(kind));
    if (txIndex) s += "(" + std::to_string(*txIndex) + ")";
    if (!detail.empty()) s += ": " + detail;
    return s;
}

std::vector<Violation> validate_block(const Block& block, const BlockHeader& parent, const ChainConfig& config,
                                      const KeyLookup& keys) {
    std::vector<Violation> v;
    const auto& h = block.header;
    if (h.parentHash != block_hash(parent)) v.push_back({ViolationKind::BadParentLink, std::nullopt, {}});
    if (h.height != parent.height + 1)
        v.push_back({ViolationKind::BadHeight, std::nullopt,
                     "expected " + std::to_string(parent.height + 1) + ", got " + std::to_string(h.height)});
    if (h.txRoot != compute_tx_root(block.txs)) v.push_back({ViolationKind::BadTxRoot, std::nullopt, {}});
    if (h.target != config.initialTarget)
        v.push_back({ViolationKind::InsufficientWork, std::nullopt, "header target differs from chain target"});
    else if (!config.initialTarget.accepts(block_hash(h)))
        v.push_back({ViolationKind::InsufficientWork, std::nullopt, {}});
    if (h.timestamp < parent.timestamp) v.push_back({ViolationKind::TimestampRegression, std::nullopt, {}});
    if (block.txs.size() > config.maxTxPerBlock)
        v.push_back({ViolationKind::TooManyTxs, std::nullopt, std::to_string(block.txs.size())});
    if (h.chainId != config.chainId) v.push_back({ViolationKind::WrongChainId, std::nullopt, {}});

    std::map<AccountId, PublicKey> in_block;
    for (std::size_t i = 0; i < block.txs.size(); ++i) {
        const auto& tx = block.txs[i];
        std::optional<PublicKey> key;
        if (auto it = in_block.find(tx.sender); it != in_block.end()) key = it->second;
        else key = keys(tx.sender);
        if (!key) {
            v.push_back({ViolationKind::UnknownSigner, i, tx.sender.short_hex()});
            continue;
        }
        if (!tx.signature_valid(*key)) {
            v.push_back({ViolationKind::BadTxSignature, i, {}});
            continue;
        }
        if (const auto* reg = std::get_if<RegisterAccount>(&tx.op))
            in_block.emplace(AccountId::of(reg->accountKey), reg->accountKey);
    }
    return v;
}

}  // namespace educhain::ledger
