#include "educhain/ledger/snapshot.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "educhain/error.hpp"

namespace educhain::ledger {

namespace {
constexpr std::string_view kMagic = "ECSNAP";
}

std::string index_key(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%08zu", i);
    return buf;
}

Bytes wrap_snapshot(std::string_view kind, const FieldMap& body) {
    Bytes out(kMagic.begin(), kMagic.end());
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(kSnapshotVersion >> shift));
    FieldMap outer;
    outer.set_string("kind", kind).set_map("body", body);
    auto enc = outer.encode();
    out.insert(out.end(), enc.begin(), enc.end());
    return out;
}

FieldReader unwrap_snapshot(ByteView data, std::string_view kind) {
    if (data.size() < kMagic.size() + 4 || !std::equal(kMagic.begin(), kMagic.end(), data.begin()))
        throw Error(Errc::BadSnapshot, "missing snapshot magic");
    std::uint32_t version = 0;
    for (std::size_t i = 0; i < 4; ++i) version = (version << 8) | data[kMagic.size() + i];
    if (version != kSnapshotVersion) throw Error(Errc::BadSnapshot, "unsupported version " + std::to_string(version));
    try {
        auto outer = FieldReader::decode(data.subspan(kMagic.size() + 4));
        if (outer.string("kind") != kind)
            throw Error(Errc::BadSnapshot, "expected a '" + std::string(kind) + "' snapshot");
        return outer.nested("body");
    } catch (const Error& e) {
        if (e.code() == Errc::BadSnapshot) throw;
        throw Error(Errc::BadSnapshot, e.what());
    }
}

void write_file(const std::filesystem::path& path, ByteView data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace educhain::ledger
