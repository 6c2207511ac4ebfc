#pragma once

// Key dictionary with a 1-to-n structure: one 4-byte identifier maps to an
// ordered list of candidate keys, tried in file order by the decryptor.
//
// File format: UTF-8 text, one record per line,
//   identifier<TAB>version_label<TAB>hex_material[<TAB>role]
// '#' starts a comment line. role is "auth" or "cipher"; when omitted,
// identifiers beginning "PR" default to auth, everything else to cipher.

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fwforge/bytes.hpp"

namespace fwforge {

class KeystoreError : public Error {
public:
    enum class Code {
        MalformedLine,
        BadHex,
        BadIdentifier,
        DuplicateVersionLabel,
        IoError,
    };

    KeystoreError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class KeyRole {
    AuthPublic,
    PayloadCipher,
};

inline const char* key_role_str(KeyRole r) {
    return r == KeyRole::AuthPublic ? "auth" : "cipher";
}

struct KeyRecord {
    Tag4 identifier{};
    std::string version_label;
    KeyRole role = KeyRole::PayloadCipher;
    Bytes material;

    bool operator==(const KeyRecord&) const = default;
};

class KeyStore {
public:
    void add(KeyRecord rec) {
        if (!labels_.insert(rec.version_label).second)
            throw KeystoreError(KeystoreError::Code::DuplicateVersionLabel,
                                "duplicate version label: " + rec.version_label);
        records_.push_back(std::move(rec));
    }

    /// All records for `id`, in insertion order; empty if unknown.
    std::vector<KeyRecord> lookup(const Tag4& id) const {
        std::vector<KeyRecord> out;
        for (const auto& r : records_)
            if (r.identifier == id) out.push_back(r);
        return out;
    }

    std::vector<KeyRecord> lookup(std::string_view id) const { return lookup(make_tag(id)); }

    const KeyRecord* find_version(std::string_view version_label) const {
        for (const auto& r : records_)
            if (r.version_label == version_label) return &r;
        return nullptr;
    }

    const std::vector<KeyRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool operator==(const KeyStore& other) const { return records_ == other.records_; }

private:
    std::vector<KeyRecord> records_;
    std::set<std::string> labels_;
};

namespace detail {

inline KeyRole default_role(const Tag4& id) {
    return (id[0] == 'P' && id[1] == 'R') ? KeyRole::AuthPublic : KeyRole::PayloadCipher;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

} // namespace detail

inline KeyStore load_keystore(std::string_view text) {
    using Code = KeystoreError::Code;
    KeyStore store;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto at = [&] { return " at line " + std::to_string(lineno); };
        std::size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        auto fields = detail::split_tabs(line);
        if (fields.size() < 3 || fields.size() > 4)
            throw KeystoreError(Code::MalformedLine, "expected 3 or 4 tab-separated fields" + at());

        if (fields[0].size() != 4)
            throw KeystoreError(Code::BadIdentifier, "identifier must be 4 characters" + at());

        KeyRecord rec;
        rec.identifier = make_tag(fields[0]);
        rec.version_label = fields[1];
        if (rec.version_label.empty())
            throw KeystoreError(Code::MalformedLine, "empty version label" + at());

        auto material = from_hex(fields[2]);
        if (!material)
            throw KeystoreError(Code::BadHex, "invalid hex material" + at());
        rec.material = std::move(*material);

        if (fields.size() == 4) {
            if (fields[3] == "auth") rec.role = KeyRole::AuthPublic;
            else if (fields[3] == "cipher") rec.role = KeyRole::PayloadCipher;
            else throw KeystoreError(Code::MalformedLine, "unknown role '" + fields[3] + "'" + at());
        } else {
            rec.role = detail::default_role(rec.identifier);
        }

        if (rec.role == KeyRole::PayloadCipher &&
            rec.material.size() != 16 && rec.material.size() != 32)
            throw KeystoreError(Code::MalformedLine,
                                "cipher key must be 16 or 32 bytes, got " +
                                    std::to_string(rec.material.size()) + at());

        try {
            store.add(std::move(rec));
        } catch (const KeystoreError& e) {
            throw KeystoreError(e.code(), std::string(e.what()) + at());
        }
    }
    return store;
}

/// Emits the store in file format with an explicit role column, so that
/// load(save(store)) == store independent of the role heuristic.
inline std::string save_keystore(const KeyStore& store) {
    std::string out;
    for (const auto& r : store.records()) {
        out += tag_str(r.identifier);
        out += '\t';
        out += r.version_label;
        out += '\t';
        out += to_hex(r.material);
        out += '\t';
        out += key_role_str(r.role);
        out += '\n';
    }
    return out;
}

inline KeyStore load_keystore_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw KeystoreError(KeystoreError::Code::IoError, "cannot open keystore: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return load_keystore(ss.str());
}

} // namespace fwforge
