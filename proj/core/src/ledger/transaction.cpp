#include "educhain/ledger/transaction.hpp"

namespace educhain::ledger {

FieldMap Transaction::signing_fields() const {
    FieldMap m;
    m.set_hex("sender", sender.digest.view())
        .set_uint("nonce", nonce)
        .set_map("op", op_fields(op))
        .set_uint("timestamp", timestamp);
    return m;
}

FieldMap Transaction::fields() const {
    auto m = signing_fields();
    m.set_hex("signature", signature.view());
    return m;
}

Transaction Transaction::from_fields(const FieldReader& r) {
    Transaction tx;
    tx.sender = AccountId{Hash256::from_bytes(r.hex("sender"))};
    tx.nonce = r.uint("nonce");
    tx.op = op_from_fields(r.nested("op"));
    tx.timestamp = r.uint("timestamp");
    tx.signature = Signature::from_bytes(r.hex("signature"));
    return tx;
}

Transaction Transaction::decode(ByteView data) { return from_fields(FieldReader::decode(data)); }

Transaction Transaction::make_signed(const KeyPair& key, std::uint64_t nonce, RecordOp op,
                                     std::uint64_t timestamp) {
    Transaction tx;
    tx.sender = key.account();
    tx.nonce = nonce;
    tx.op = std::move(op);
    tx.timestamp = timestamp;
    tx.signature = key.sign(tx.signing_bytes());
    return tx;
}

}  // namespace educhain::ledger
