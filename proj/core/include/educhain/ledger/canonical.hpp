#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "educhain/bytes.hpp"

namespace educhain::ledger {

// Canonical encoding, the bit-exact signing and wire format:
//
//   encoding := field*            (fields sorted by name, bytewise ascending)
//   field    := u32be(len(name)) name u32be(len(value)) value
//
// Integers are rendered as decimal ASCII ("-" prefix for negatives), binary
// values as lowercase hex ASCII, and nested maps are encoded recursively and
// embedded as an opaque value. An empty map encodes to zero bytes.
//
// Decoding requires the reader to know each field's type, since strings and
// integers are indistinguishable on the wire.
class FieldMap {
public:
    FieldMap& set_string(std::string name, std::string_view value);
    FieldMap& set_uint(std::string name, std::uint64_t value);
    FieldMap& set_int(std::string name, std::int64_t value);
    FieldMap& set_hex(std::string name, ByteView value);
    FieldMap& set_map(std::string name, const FieldMap& nested);
    FieldMap& set_raw(std::string name, Bytes value);

    bool empty() const noexcept { return fields_.empty(); }
    std::size_t size() const noexcept { return fields_.size(); }
    bool contains(const std::string& name) const { return fields_.count(name) != 0; }
    const std::map<std::string, Bytes>& fields() const noexcept { return fields_; }

    Bytes encode() const;

    friend bool operator==(const FieldMap&, const FieldMap&) = default;

private:
    std::map<std::string, Bytes> fields_;
};

inline Bytes canonical_encode(const FieldMap& m) { return m.encode(); }

// Strict decoder: rejects unsorted or duplicate names, truncated lengths and
// trailing bytes with Error(MalformedEncoding).
class FieldReader {
public:
    static FieldReader decode(ByteView data);

    bool has(const std::string& name) const { return fields_.count(name) != 0; }
    const Bytes& raw(const std::string& name) const;
    std::string string(const std::string& name) const;
    std::uint64_t uint(const std::string& name) const;
    std::int64_t integer(const std::string& name) const;
    Bytes hex(const std::string& name) const;
    FieldReader nested(const std::string& name) const;

    const std::map<std::string, Bytes>& fields() const noexcept { return fields_; }

private:
    std::map<std::string, Bytes> fields_;
};

// Builds a credential field map from a flat JSON object. Strings map to
// string values and integral numbers to decimal values; anything else
// (objects, arrays, floats, booleans, null) throws Error(UnsupportedValue).
FieldMap credential_fields_from_json(const nlohmann::json& object);

// Inverse of the above for display; integers are recognized only where the
// caller names them.
nlohmann::json credential_fields_to_json(const FieldMap& fields);

}  // namespace educhain::ledger
