#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fwforge {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// 4-byte ASCII tag used for magic numbers and key identifiers.
using Tag4 = std::array<std::uint8_t, 4>;

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline Bytes read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw IoError("cannot open " + p.string());
    Bytes data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed on " + p.string());
    return data;
}

inline void write_file(const std::filesystem::path& p, ByteView data) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + p.string());
    f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!f) throw IoError("write failed on " + p.string());
}

} // namespace detail

inline std::uint32_t read_u32le(ByteView data, std::size_t offset) {
    return static_cast<std::uint32_t>(data[offset]) |
           static_cast<std::uint32_t>(data[offset + 1]) << 8 |
           static_cast<std::uint32_t>(data[offset + 2]) << 16 |
           static_cast<std::uint32_t>(data[offset + 3]) << 24;
}

inline void write_u32le(Bytes& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value & 0xff));
    out.push_back(static_cast<std::uint8_t>((value >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((value >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((value >> 24) & 0xff));
}

inline Tag4 make_tag(std::string_view s) {
    Tag4 tag{};
    for (std::size_t i = 0; i < tag.size() && i < s.size(); ++i)
        tag[i] = static_cast<std::uint8_t>(s[i]);
    return tag;
}

/// Printable form of a tag; trailing NULs dropped, non-printables hex-escaped.
inline std::string tag_str(const Tag4& tag) {
    std::size_t len = tag.size();
    while (len > 0 && tag[len - 1] == 0) --len;
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        if (tag[i] >= 0x20 && tag[i] < 0x7f) {
            out.push_back(static_cast<char>(tag[i]));
        } else {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\x%02x", tag[i]);
            out += buf;
        }
    }
    return out;
}

inline bool tag_is_zero(const Tag4& tag) {
    return tag[0] == 0 && tag[1] == 0 && tag[2] == 0 && tag[3] == 0;
}

inline std::string to_hex(ByteView data) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (auto b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

/// Decode a hex string; nullopt on odd length or non-hex characters.
inline std::optional<Bytes> from_hex(std::string_view s) {
    if (s.size() % 2 != 0) return std::nullopt;
    Bytes out;
    out.reserve(s.size() / 2);
    for (std::size_t i = 0; i < s.size(); i += 2) {
        int hi = hex_nibble(s[i]);
        int lo = hex_nibble(s[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<std::uint8_t>(hi << 4 | lo));
    }
    return out;
}

} // namespace fwforge
