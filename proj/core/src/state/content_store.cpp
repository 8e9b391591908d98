#include "educhain/state/content_store.hpp"

#include "educhain/error.hpp"

namespace educhain::state {

ledger::Hash256 ContentStore::put(ByteView data) {
    auto cid = ledger::digest_sha256(data);
    std::lock_guard lock(mu_);
    blobs_.try_emplace(cid, data.begin(), data.end());
    return cid;
}

std::optional<Bytes> ContentStore::get(const ledger::Hash256& cid) const {
    std::lock_guard lock(mu_);
    auto it = blobs_.find(cid);
    if (it == blobs_.end()) return std::nullopt;
    return it->second;
}

Bytes ContentStore::at(const ledger::Hash256& cid) const {
    auto blob = get(cid);
    if (!blob) throw Error(Errc::NotFound, "no content " + cid.hex());
    return *std::move(blob);
}

bool ContentStore::contains(const ledger::Hash256& cid) const {
    std::lock_guard lock(mu_);
    return blobs_.count(cid) != 0;
}

std::size_t ContentStore::size() const {
    std::lock_guard lock(mu_);
    return blobs_.size();
}

}  // namespace educhain::state
