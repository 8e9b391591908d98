#include "educhain/ledger/digest.hpp"

#include <openssl/evp.h>

#include <algorithm>

#include "educhain/error.hpp"

namespace educhain::ledger {

template <std::size_t N>
Digest<N> Digest<N>::from_bytes(ByteView data) {
    if (data.size() != N)
        throw Error(Errc::MalformedEncoding,
                    "expected " + std::to_string(N) + "-byte digest, got " + std::to_string(data.size()));
    std::array<std::uint8_t, N> a{};
    std::copy(data.begin(), data.end(), a.begin());
    return Digest<N>(a);
}

template class Digest<32>;
template class Digest<16>;

namespace {

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* ctx) const noexcept { EVP_MD_CTX_free(ctx); }
};
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

template <std::size_t N>
Digest<N> one_shot(const EVP_MD* md, ByteView data) {
    std::array<std::uint8_t, N> out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1 || len != N)
        throw std::runtime_error("EVP_Digest failed");
    return Digest<N>(out);
}

}  // namespace

Hash256 digest_sha256(ByteView data) { return one_shot<32>(EVP_sha256(), data); }

Hash128 digest_md5(ByteView data) { return one_shot<16>(EVP_md5(), data); }

struct Md5Stream::Impl {
    MdCtx ctx{EVP_MD_CTX_new()};
};

Md5Stream::Md5Stream() : impl_(std::make_unique<Impl>()) {
    if (!impl_->ctx || EVP_DigestInit_ex(impl_->ctx.get(), EVP_md5(), nullptr) != 1)
        throw std::runtime_error("EVP_DigestInit_ex failed");
}

Md5Stream::~Md5Stream() = default;

void Md5Stream::update(ByteView data) {
    if (!data.empty()) EVP_DigestUpdate(impl_->ctx.get(), data.data(), data.size());
}

Hash128 Md5Stream::finish() {
    std::array<std::uint8_t, 16> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(impl_->ctx.get(), out.data(), &len);
    return Hash128(out);
}

}  // namespace educhain::ledger
