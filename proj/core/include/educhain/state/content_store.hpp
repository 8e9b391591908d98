#pragma once

#include <map>
#include <mutex>
#include <optional>

#include "educhain/bytes.hpp"
#include "educhain/ledger/digest.hpp"

namespace educhain::state {

// Content-addressed blob store: every key is the SHA-256 of its value.
// Thread-safe; puts are idempotent so concurrent writers cannot disagree.
class ContentStore {
public:
    ledger::Hash256 put(ByteView data);
    std::optional<Bytes> get(const ledger::Hash256& cid) const;
    // Throws Error(NotFound).
    Bytes at(const ledger::Hash256& cid) const;
    bool contains(const ledger::Hash256& cid) const;
    std::size_t size() const;

private:
    mutable std::mutex mu_;
    std::map<ledger::Hash256, Bytes> blobs_;
};

}  // namespace educhain::state
