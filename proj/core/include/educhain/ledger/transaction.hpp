#pragma once

#include <cstdint>

#include "educhain/ledger/canonical.hpp"
#include "educhain/ledger/digest.hpp"
#include "educhain/ledger/keys.hpp"
#include "educhain/ledger/record_op.hpp"

namespace educhain::ledger {

struct Transaction {
    AccountId sender;
    std::uint64_t nonce = 0;
    RecordOp op;
    std::uint64_t timestamp = 0;  // unix ms
    Signature signature;

    // Fields covered by the signature: sender, nonce, op, timestamp.
    FieldMap signing_fields() const;
    Bytes signing_bytes() const { return signing_fields().encode(); }

    // signing_fields() plus "signature".
    FieldMap fields() const;
    Bytes encode() const { return fields().encode(); }
    static Transaction decode(ByteView data);
    static Transaction from_fields(const FieldReader& reader);

    Hash256 hash() const { return digest_sha256(encode()); }
    bool signature_valid(const PublicKey& key) const {
        return verify_signature(key, signing_bytes(), signature);
    }

    static Transaction make_signed(const KeyPair& key, std::uint64_t nonce, RecordOp op,
                                   std::uint64_t timestamp);

    friend bool operator==(const Transaction&, const Transaction&) = default;
};

}  // namespace educhain::ledger
