#pragma once

// IM*H firmware container format: fixed 192-byte header, block_count 16-byte
// chunk entries, RSA signature, payload. All integers little-endian.

#include <cstdint>
#include <string>
#include <vector>

#include "fwforge/bytes.hpp"

namespace fwforge {

inline constexpr std::size_t kFixedHeaderSize = 192;
inline constexpr std::size_t kChunkEntrySize = 16;
inline constexpr char kMagic[5] = "IM*H";

// Bit 0 of ChunkEntry::attributes marks a chunk that was stored encrypted.
inline constexpr std::uint32_t kChunkAttrEncrypted = 0x1;

class ContainerError : public Error {
public:
    enum class Code {
        BadMagic,
        TruncatedHeader,
        SizeMismatch,
        InconsistentHeader,
        InvariantViolation,
    };

    ContainerError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct ChunkEntry {
    Tag4 name{};
    std::uint32_t start_offset = 0;
    std::uint32_t output_size = 0;
    std::uint32_t attributes = 0;

    bool operator==(const ChunkEntry&) const = default;
};

struct FirmwareHeader {
    Tag4 magic = make_tag(kMagic);
    std::uint32_t format_version = 0;
    std::array<std::uint8_t, 8> reserved_a{};
    std::uint32_t header_size = kFixedHeaderSize;
    std::uint32_t rsa_sig_size = 0;
    std::uint32_t payload_size = 0;
    std::array<std::uint8_t, 4> reserved_b{};
    std::array<std::uint8_t, 8> reserved_c{};
    Tag4 auth_key_id{};
    Tag4 enc_key_id{};
    std::array<std::uint8_t, 16> scramble_key{};
    std::array<std::uint8_t, 32> image_name{};
    std::array<std::uint8_t, 48> reserved_d{};
    std::array<std::uint8_t, 12> reserved_e{};
    std::uint32_t block_count = 0;
    std::array<std::uint8_t, 32> payload_digest{};
    std::vector<ChunkEntry> chunks;

    bool operator==(const FirmwareHeader&) const = default;

    bool is_encrypted() const { return !tag_is_zero(enc_key_id); }

    /// Image name with trailing NUL/space padding removed.
    std::string image_name_str() const {
        std::size_t len = image_name.size();
        while (len > 0 && (image_name[len - 1] == 0 || image_name[len - 1] == ' '))
            --len;
        return std::string(reinterpret_cast<const char*>(image_name.data()), len);
    }

    std::uint64_t total_size() const {
        return static_cast<std::uint64_t>(header_size) + rsa_sig_size + payload_size;
    }
};

struct FirmwareContainer {
    FirmwareHeader header;
    Bytes signature;
    Bytes payload;

    bool operator==(const FirmwareContainer&) const = default;
};

enum class FileKind {
    EncryptedImage,
    SignedPlainFile,
    NotAContainer,
};

inline const char* file_kind_str(FileKind k) {
    switch (k) {
        case FileKind::EncryptedImage: return "encrypted-image";
        case FileKind::SignedPlainFile: return "signed-plain-file";
        case FileKind::NotAContainer: return "not-a-container";
    }
    return "?";
}

namespace detail {

inline void copy_out(ByteView data, std::size_t offset, std::uint8_t* dst, std::size_t n) {
    std::memcpy(dst, data.data() + offset, n);
}

} // namespace detail

/// Serializes the header region only (header_size bytes).
inline Bytes serialize_header(const FirmwareHeader& h) {
    if (h.chunks.size() != h.block_count)
        throw ContainerError(ContainerError::Code::InvariantViolation,
                             "chunk list length does not match block_count");
    if (h.header_size != kFixedHeaderSize + kChunkEntrySize * static_cast<std::uint64_t>(h.block_count))
        throw ContainerError(ContainerError::Code::InvariantViolation,
                             "header_size does not equal 192 + 16*block_count");
    Bytes out;
    out.reserve(h.header_size);
    out.insert(out.end(), h.magic.begin(), h.magic.end());
    write_u32le(out, h.format_version);
    out.insert(out.end(), h.reserved_a.begin(), h.reserved_a.end());
    write_u32le(out, h.header_size);
    write_u32le(out, h.rsa_sig_size);
    write_u32le(out, h.payload_size);
    out.insert(out.end(), h.reserved_b.begin(), h.reserved_b.end());
    out.insert(out.end(), h.reserved_c.begin(), h.reserved_c.end());
    out.insert(out.end(), h.auth_key_id.begin(), h.auth_key_id.end());
    out.insert(out.end(), h.enc_key_id.begin(), h.enc_key_id.end());
    out.insert(out.end(), h.scramble_key.begin(), h.scramble_key.end());
    out.insert(out.end(), h.image_name.begin(), h.image_name.end());
    out.insert(out.end(), h.reserved_d.begin(), h.reserved_d.end());
    out.insert(out.end(), h.reserved_e.begin(), h.reserved_e.end());
    write_u32le(out, h.block_count);
    out.insert(out.end(), h.payload_digest.begin(), h.payload_digest.end());
    for (const auto& c : h.chunks) {
        out.insert(out.end(), c.name.begin(), c.name.end());
        write_u32le(out, c.start_offset);
        write_u32le(out, c.output_size);
        write_u32le(out, c.attributes);
    }
    return out;
}

/// Parses a container from the prefix of `data`. Trailing bytes after the
/// declared sizes are ignored; callers can compare total_size() against the
/// input length to warn about them.
inline FirmwareContainer parse_container(ByteView data) {
    using Code = ContainerError::Code;
    if (data.size() < 4)
        throw ContainerError(Code::TruncatedHeader, "input shorter than magic");
    FirmwareHeader h;
    detail::copy_out(data, 0, h.magic.data(), 4);
    if (std::memcmp(h.magic.data(), kMagic, 4) != 0)
        throw ContainerError(Code::BadMagic, "magic is not IM*H");
    if (data.size() < kFixedHeaderSize)
        throw ContainerError(Code::TruncatedHeader, "input shorter than fixed header");

    h.format_version = read_u32le(data, 4);
    detail::copy_out(data, 8, h.reserved_a.data(), h.reserved_a.size());
    h.header_size = read_u32le(data, 16);
    h.rsa_sig_size = read_u32le(data, 20);
    h.payload_size = read_u32le(data, 24);
    detail::copy_out(data, 28, h.reserved_b.data(), h.reserved_b.size());
    detail::copy_out(data, 32, h.reserved_c.data(), h.reserved_c.size());
    detail::copy_out(data, 40, h.auth_key_id.data(), 4);
    detail::copy_out(data, 44, h.enc_key_id.data(), 4);
    detail::copy_out(data, 48, h.scramble_key.data(), h.scramble_key.size());
    detail::copy_out(data, 64, h.image_name.data(), h.image_name.size());
    detail::copy_out(data, 96, h.reserved_d.data(), h.reserved_d.size());
    detail::copy_out(data, 144, h.reserved_e.data(), h.reserved_e.size());
    h.block_count = read_u32le(data, 156);
    detail::copy_out(data, 160, h.payload_digest.data(), h.payload_digest.size());

    const std::uint64_t want_header =
        kFixedHeaderSize + kChunkEntrySize * static_cast<std::uint64_t>(h.block_count);
    if (h.header_size != want_header)
        throw ContainerError(Code::InconsistentHeader,
                             "header_size " + std::to_string(h.header_size) +
                                 " != 192 + 16*block_count (" + std::to_string(want_header) + ")");
    if (data.size() < want_header)
        throw ContainerError(Code::TruncatedHeader, "input shorter than declared header_size");

    h.chunks.reserve(h.block_count);
    std::size_t off = kFixedHeaderSize;
    for (std::uint32_t i = 0; i < h.block_count; ++i, off += kChunkEntrySize) {
        ChunkEntry c;
        detail::copy_out(data, off, c.name.data(), 4);
        c.start_offset = read_u32le(data, off + 4);
        c.output_size = read_u32le(data, off + 8);
        c.attributes = read_u32le(data, off + 12);
        const std::uint64_t end = static_cast<std::uint64_t>(c.start_offset) + c.output_size;
        if (end > 0xffffffffull || end > h.payload_size)
            throw ContainerError(Code::SizeMismatch,
                                 "chunk " + tag_str(c.name) + " exceeds payload bounds");
        h.chunks.push_back(c);
    }

    const std::uint64_t total = h.total_size();
    if (total > data.size())
        throw ContainerError(Code::SizeMismatch, "declared sizes exceed input length");

    FirmwareContainer c;
    c.header = std::move(h);
    c.signature.assign(data.begin() + static_cast<std::ptrdiff_t>(c.header.header_size),
                       data.begin() + static_cast<std::ptrdiff_t>(c.header.header_size +
                                                                  c.header.rsa_sig_size));
    c.payload.assign(data.begin() + static_cast<std::ptrdiff_t>(c.header.header_size +
                                                                c.header.rsa_sig_size),
                     data.begin() + static_cast<std::ptrdiff_t>(total));
    return c;
}

inline Bytes serialize_container(const FirmwareContainer& c) {
    if (c.signature.size() != c.header.rsa_sig_size)
        throw ContainerError(ContainerError::Code::InvariantViolation,
                             "signature length does not match rsa_sig_size");
    if (c.payload.size() != c.header.payload_size)
        throw ContainerError(ContainerError::Code::InvariantViolation,
                             "payload length does not match payload_size");
    for (const auto& ch : c.header.chunks) {
        const std::uint64_t end = static_cast<std::uint64_t>(ch.start_offset) + ch.output_size;
        if (end > c.header.payload_size)
            throw ContainerError(ContainerError::Code::InvariantViolation,
                                 "chunk " + tag_str(ch.name) + " exceeds payload bounds");
    }
    Bytes out = serialize_header(c.header);
    out.insert(out.end(), c.signature.begin(), c.signature.end());
    out.insert(out.end(), c.payload.begin(), c.payload.end());
    return out;
}

/// Total classification: a parse failure of any sort means NotAContainer.
inline FileKind classify_file(ByteView data) {
    try {
        FirmwareContainer c = parse_container(data);
        return c.header.is_encrypted() ? FileKind::EncryptedImage : FileKind::SignedPlainFile;
    } catch (const ContainerError&) {
        return FileKind::NotAContainer;
    }
}

} // namespace fwforge
