#pragma once

// Minimal ELF reader: ident, header, program headers, dynamic segment.
// Handles 32- and 64-bit files in either byte order. Every access is
// bounds-checked against the input buffer; malformed structure never reads
// out of bounds.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fwforge/bytes.hpp"

namespace fwforge {

class ElfError : public Error {
public:
    enum class Code {
        NotElf,
        Malformed,
    };

    ElfError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class ElfMachine {
    ARM,
    AArch64,
    X86,
    X86_64,
    Other,
};

enum class ElfType {
    Executable,
    SharedObject,
    Relocatable,
    Other,
};

inline const char* elf_machine_str(ElfMachine m) {
    switch (m) {
        case ElfMachine::ARM: return "arm";
        case ElfMachine::AArch64: return "aarch64";
        case ElfMachine::X86: return "x86";
        case ElfMachine::X86_64: return "x86_64";
        case ElfMachine::Other: return "other";
    }
    return "?";
}

inline const char* elf_type_str(ElfType t) {
    switch (t) {
        case ElfType::Executable: return "executable";
        case ElfType::SharedObject: return "shared-object";
        case ElfType::Relocatable: return "relocatable";
        case ElfType::Other: return "other";
    }
    return "?";
}

struct ElfSummary {
    std::string path;
    ElfMachine machine = ElfMachine::Other;
    std::uint16_t machine_code = 0;
    ElfType elf_type = ElfType::Other;
    bool is_64bit = false;
    bool is_big_endian = false;
    bool is_pie = false;
    std::vector<std::string> needed; // NEEDED names, first occurrence kept
    std::optional<std::string> interpreter;
};

namespace elf_detail {

constexpr std::uint16_t ET_REL = 1;
constexpr std::uint16_t ET_EXEC = 2;
constexpr std::uint16_t ET_DYN = 3;

constexpr std::uint16_t EM_386 = 3;
constexpr std::uint16_t EM_ARM = 40;
constexpr std::uint16_t EM_X86_64 = 62;
constexpr std::uint16_t EM_AARCH64 = 183;

constexpr std::uint32_t PT_LOAD = 1;
constexpr std::uint32_t PT_DYNAMIC = 2;
constexpr std::uint32_t PT_INTERP = 3;

constexpr std::int64_t DT_NULL = 0;
constexpr std::int64_t DT_NEEDED = 1;
constexpr std::int64_t DT_STRTAB = 5;
constexpr std::int64_t DT_FLAGS_1 = 0x6ffffffb;
constexpr std::uint64_t DF_1_PIE = 0x08000000;

class Reader {
public:
    Reader(ByteView data, bool big_endian) : data_(data), be_(big_endian) {}

    std::uint16_t u16(std::uint64_t off) const {
        check(off, 2);
        return be_ ? static_cast<std::uint16_t>(data_[off] << 8 | data_[off + 1])
                   : static_cast<std::uint16_t>(data_[off] | data_[off + 1] << 8);
    }

    std::uint32_t u32(std::uint64_t off) const {
        check(off, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = be_ ? (v << 8 | data_[off + static_cast<std::uint64_t>(i)])
                    : (v | static_cast<std::uint32_t>(data_[off + static_cast<std::uint64_t>(i)])
                               << (8 * i));
        return v;
    }

    std::uint64_t u64(std::uint64_t off) const {
        check(off, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = be_ ? (v << 8 | data_[off + static_cast<std::uint64_t>(i)])
                    : (v | static_cast<std::uint64_t>(data_[off + static_cast<std::uint64_t>(i)])
                               << (8 * i));
        return v;
    }

    /// NUL-terminated string starting at off, bounded by the buffer.
    std::string str(std::uint64_t off) const {
        if (off >= data_.size())
            throw ElfError(ElfError::Code::Malformed, "string offset out of bounds");
        std::string out;
        for (std::uint64_t i = off; i < data_.size() && data_[i] != 0; ++i)
            out.push_back(static_cast<char>(data_[i]));
        return out;
    }

    std::size_t size() const { return data_.size(); }

private:
    void check(std::uint64_t off, std::uint64_t n) const {
        if (off > data_.size() || n > data_.size() - off)
            throw ElfError(ElfError::Code::Malformed, "read beyond end of file");
    }

    ByteView data_;
    bool be_;
};

struct Segment {
    std::uint32_t type = 0;
    std::uint64_t offset = 0;
    std::uint64_t vaddr = 0;
    std::uint64_t filesz = 0;
};

/// Translate a virtual address to a file offset via the PT_LOAD map.
inline std::optional<std::uint64_t> vaddr_to_offset(const std::vector<Segment>& segs,
                                                    std::uint64_t vaddr) {
    for (const auto& s : segs) {
        if (s.type != PT_LOAD) continue;
        if (vaddr >= s.vaddr && vaddr < s.vaddr + s.filesz)
            return s.offset + (vaddr - s.vaddr);
    }
    return std::nullopt;
}

} // namespace elf_detail

inline ElfSummary inspect_binary(ByteView data, const std::string& path = {}) {
    using namespace elf_detail;
    using Code = ElfError::Code;

    if (data.size() < 4 || data[0] != 0x7f || data[1] != 'E' || data[2] != 'L' || data[3] != 'F')
        throw ElfError(Code::NotElf, "missing ELF magic");
    if (data.size() < 16)
        throw ElfError(Code::Malformed, "truncated e_ident");

    const std::uint8_t ei_class = data[4];
    const std::uint8_t ei_data = data[5];
    if (ei_class != 1 && ei_class != 2)
        throw ElfError(Code::Malformed, "bad EI_CLASS");
    if (ei_data != 1 && ei_data != 2)
        throw ElfError(Code::Malformed, "bad EI_DATA");

    ElfSummary s;
    s.path = path;
    s.is_64bit = ei_class == 2;
    s.is_big_endian = ei_data == 2;
    Reader r(data, s.is_big_endian);

    const std::uint64_t ehdr_size = s.is_64bit ? 64 : 52;
    if (data.size() < ehdr_size)
        throw ElfError(Code::Malformed, "truncated ELF header");

    const std::uint16_t e_type = r.u16(16);
    const std::uint16_t e_machine = r.u16(18);
    const std::uint64_t e_entry = s.is_64bit ? r.u64(24) : r.u32(24);
    const std::uint64_t e_phoff = s.is_64bit ? r.u64(32) : r.u32(28);
    const std::uint16_t e_phentsize = r.u16(s.is_64bit ? 54 : 42);
    const std::uint16_t e_phnum = r.u16(s.is_64bit ? 56 : 44);

    s.machine_code = e_machine;
    switch (e_machine) {
        case EM_ARM: s.machine = ElfMachine::ARM; break;
        case EM_AARCH64: s.machine = ElfMachine::AArch64; break;
        case EM_386: s.machine = ElfMachine::X86; break;
        case EM_X86_64: s.machine = ElfMachine::X86_64; break;
        default: s.machine = ElfMachine::Other; break;
    }
    switch (e_type) {
        case ET_EXEC: s.elf_type = ElfType::Executable; break;
        case ET_DYN: s.elf_type = ElfType::SharedObject; break;
        case ET_REL: s.elf_type = ElfType::Relocatable; break;
        default: s.elf_type = ElfType::Other; break;
    }

    if (e_phnum == 0) return s; // no segments, nothing dynamic to report

    const std::uint64_t min_phent = s.is_64bit ? 56 : 32;
    if (e_phentsize < min_phent)
        throw ElfError(Code::Malformed, "program header entry too small");
    if (e_phoff > data.size() ||
        static_cast<std::uint64_t>(e_phentsize) * e_phnum > data.size() - e_phoff)
        throw ElfError(Code::Malformed, "program header table out of bounds");

    std::vector<Segment> segments;
    std::optional<Segment> dynamic;
    for (std::uint16_t i = 0; i < e_phnum; ++i) {
        const std::uint64_t base = e_phoff + static_cast<std::uint64_t>(i) * e_phentsize;
        Segment seg;
        seg.type = r.u32(base);
        if (s.is_64bit) {
            seg.offset = r.u64(base + 8);
            seg.vaddr = r.u64(base + 16);
            seg.filesz = r.u64(base + 32);
        } else {
            seg.offset = r.u32(base + 4);
            seg.vaddr = r.u32(base + 8);
            seg.filesz = r.u32(base + 20);
        }
        if (seg.offset > data.size() || seg.filesz > data.size() - seg.offset)
            throw ElfError(Code::Malformed, "segment exceeds file size");
        if (seg.type == PT_INTERP && seg.filesz > 0) {
            std::string interp = r.str(seg.offset);
            s.interpreter = interp;
        }
        if (seg.type == PT_DYNAMIC) dynamic = seg;
        segments.push_back(seg);
    }

    bool flag_pie = false;
    if (dynamic && dynamic->filesz > 0) {
        const std::uint64_t entry_size = s.is_64bit ? 16 : 8;
        std::optional<std::uint64_t> strtab_vaddr;
        std::vector<std::uint64_t> needed_offsets;
        for (std::uint64_t off = dynamic->offset;
             off + entry_size <= dynamic->offset + dynamic->filesz; off += entry_size) {
            const std::int64_t tag = s.is_64bit ? static_cast<std::int64_t>(r.u64(off))
                                                : static_cast<std::int32_t>(r.u32(off));
            const std::uint64_t val = s.is_64bit ? r.u64(off + 8) : r.u32(off + 4);
            if (tag == DT_NULL) break;
            if (tag == DT_NEEDED) needed_offsets.push_back(val);
            if (tag == DT_STRTAB) strtab_vaddr = val;
            if (tag == DT_FLAGS_1 && (val & DF_1_PIE)) flag_pie = true;
        }
        if (!needed_offsets.empty()) {
            if (!strtab_vaddr)
                throw ElfError(Code::Malformed, "DT_NEEDED without DT_STRTAB");
            auto strtab_off = vaddr_to_offset(segments, *strtab_vaddr);
            if (!strtab_off)
                throw ElfError(Code::Malformed, "DT_STRTAB not covered by any PT_LOAD");
            for (auto name_off : needed_offsets) {
                std::string name = r.str(*strtab_off + name_off);
                if (name.empty()) continue;
                if (std::find(s.needed.begin(), s.needed.end(), name) == s.needed.end())
                    s.needed.push_back(name);
            }
        }
    }

    // ET_DYN with an entry point and an interpreter is a PIE executable;
    // DF_1_PIE settles it when set.
    if (s.elf_type == ElfType::SharedObject &&
        ((e_entry != 0 && s.interpreter.has_value()) || flag_pie))
        s.is_pie = true;

    return s;
}

} // namespace fwforge
