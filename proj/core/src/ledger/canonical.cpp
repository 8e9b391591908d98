#include "educhain/ledger/canonical.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

#include "educhain/error.hpp"

namespace educhain::ledger {

namespace {

void put_u32(Bytes& out, std::size_t v) {
    if (v > 0xffffffffu) throw Error(Errc::UnsupportedValue, "field longer than 2^32-1 bytes");
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(ByteView data, std::size_t& pos) {
    if (data.size() - pos < 4) throw Error(Errc::MalformedEncoding, "truncated length prefix");
    std::uint32_t v = (std::uint32_t{data[pos]} << 24) | (std::uint32_t{data[pos + 1]} << 16) |
                      (std::uint32_t{data[pos + 2]} << 8) | std::uint32_t{data[pos + 3]};
    pos += 4;
    return v;
}

}  // namespace

FieldMap& FieldMap::set_string(std::string name, std::string_view value) {
    fields_[std::move(name)] = to_bytes(value);
    return *this;
}

FieldMap& FieldMap::set_uint(std::string name, std::uint64_t value) {
    return set_string(std::move(name), std::to_string(value));
}

FieldMap& FieldMap::set_int(std::string name, std::int64_t value) {
    return set_string(std::move(name), std::to_string(value));
}

FieldMap& FieldMap::set_hex(std::string name, ByteView value) {
    return set_string(std::move(name), to_hex(value));
}

FieldMap& FieldMap::set_map(std::string name, const FieldMap& nested) {
    fields_[std::move(name)] = nested.encode();
    return *this;
}

FieldMap& FieldMap::set_raw(std::string name, Bytes value) {
    fields_[std::move(name)] = std::move(value);
    return *this;
}

Bytes FieldMap::encode() const {
    std::size_t total = 0;
    for (const auto& [name, value] : fields_) total += 8 + name.size() + value.size();
    Bytes out;
    out.reserve(total);
    // std::map orders std::string keys bytewise, which is the canonical order.
    for (const auto& [name, value] : fields_) {
        put_u32(out, name.size());
        out.insert(out.end(), name.begin(), name.end());
        put_u32(out, value.size());
        out.insert(out.end(), value.begin(), value.end());
    }
    return out;
}

FieldReader FieldReader::decode(ByteView data) {
    FieldReader r;
    std::size_t pos = 0;
    const std::string* prev = nullptr;
    while (pos < data.size()) {
        auto name_len = get_u32(data, pos);
        if (data.size() - pos < name_len) throw Error(Errc::MalformedEncoding, "truncated field name");
        std::string name(reinterpret_cast<const char*>(data.data() + pos), name_len);
        pos += name_len;
        auto value_len = get_u32(data, pos);
        if (data.size() - pos < value_len) throw Error(Errc::MalformedEncoding, "truncated field value");
        Bytes value(data.begin() + static_cast<std::ptrdiff_t>(pos),
                    data.begin() + static_cast<std::ptrdiff_t>(pos + value_len));
        pos += value_len;
        if (prev && !(*prev < name))
            throw Error(Errc::MalformedEncoding, "field names not in canonical order at '" + name + "'");
        auto [it, inserted] = r.fields_.emplace(std::move(name), std::move(value));
        prev = &it->first;
    }
    return r;
}

const Bytes& FieldReader::raw(const std::string& name) const {
    auto it = fields_.find(name);
    if (it == fields_.end()) throw Error(Errc::MalformedEncoding, "missing field '" + name + "'");
    return it->second;
}

std::string FieldReader::string(const std::string& name) const { return to_string(raw(name)); }

std::uint64_t FieldReader::uint(const std::string& name) const {
    auto s = string(name);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size() || (s.size() > 1 && s[0] == '0'))
        throw Error(Errc::MalformedEncoding, "field '" + name + "' is not a canonical unsigned integer");
    return v;
}

std::int64_t FieldReader::integer(const std::string& name) const {
    auto s = string(name);
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
        throw Error(Errc::MalformedEncoding, "field '" + name + "' is not an integer");
    if (std::to_string(v) != s)
        throw Error(Errc::MalformedEncoding, "field '" + name + "' is not a canonical integer");
    return v;
}

Bytes FieldReader::hex(const std::string& name) const {
    auto s = string(name);
    for (char c : s)
        if (c >= 'A' && c <= 'F') throw Error(Errc::MalformedEncoding, "uppercase hex in '" + name + "'");
    return from_hex(s);
}

FieldReader FieldReader::nested(const std::string& name) const { return decode(raw(name)); }

FieldMap credential_fields_from_json(const nlohmann::json& object) {
    if (!object.is_object()) throw Error(Errc::UnsupportedValue, "credential fields must be a JSON object");
    FieldMap m;
    for (const auto& [key, value] : object.items()) {
        if (value.is_string())
            m.set_string(key, value.get<std::string>());
        else if (value.is_number_unsigned())
            m.set_uint(key, value.get<std::uint64_t>());
        else if (value.is_number_integer())
            m.set_int(key, value.get<std::int64_t>());
        else
            throw Error(Errc::UnsupportedValue, "field '" + key + "' is not a string or integer");
    }
    return m;
}

nlohmann::json credential_fields_to_json(const FieldMap& fields) {
    auto out = nlohmann::json::object();
    for (const auto& [name, value] : fields.fields()) out[name] = to_string(value);
    return out;
}

}  // namespace educhain::ledger
