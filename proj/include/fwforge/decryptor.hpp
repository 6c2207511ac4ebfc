#pragma once

// Trial-decryption pipeline: parse the encryption key identifier, pull the
// candidate list from the keystore, and try unwrap -> decrypt -> digest-verify
// in file order until a digest matches. Padding failure or digest mismatch
// both mean "try the next key"; only a digest match counts as success.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fwforge/bytes.hpp"
#include "fwforge/container.hpp"
#include "fwforge/crypto.hpp"
#include "fwforge/keystore.hpp"

namespace fwforge {

class DecryptError : public Error {
public:
    enum class Code {
        ChunkOutOfBounds,
        IoError,
    };

    DecryptError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class DecryptStatus {
    Decrypted,
    PlainPassthrough,
    NoKeyForIdentifier,
    AllCandidatesFailed,
    ParseError,
};

inline const char* decrypt_status_str(DecryptStatus s) {
    switch (s) {
        case DecryptStatus::Decrypted: return "decrypted";
        case DecryptStatus::PlainPassthrough: return "plain-passthrough";
        case DecryptStatus::NoKeyForIdentifier: return "no-key-for-identifier";
        case DecryptStatus::AllCandidatesFailed: return "all-candidates-failed";
        case DecryptStatus::ParseError: return "parse-error";
    }
    return "?";
}

struct DecryptOutcome {
    std::string input_path;
    FileKind kind = FileKind::NotAContainer;
    DecryptStatus status = DecryptStatus::ParseError;
    std::string version_label; // winning key version when status == Decrypted
    std::string detail;        // parse error detail when status == ParseError
    std::uint32_t attempts = 0;
    std::optional<Bytes> payload_out;

    bool succeeded() const {
        return status == DecryptStatus::Decrypted || status == DecryptStatus::PlainPassthrough;
    }
};

inline DecryptOutcome decrypt_image(const FirmwareContainer& c, const KeyStore& store) {
    DecryptOutcome out;
    if (!c.header.is_encrypted()) {
        out.kind = FileKind::SignedPlainFile;
        out.status = DecryptStatus::PlainPassthrough;
        out.payload_out = c.payload;
        return out;
    }

    out.kind = FileKind::EncryptedImage;
    const auto candidates = store.lookup(c.header.enc_key_id);
    bool any_cipher = false;
    for (const auto& cand : candidates) {
        if (cand.role != KeyRole::PayloadCipher) continue; // auth keys cannot unwrap
        any_cipher = true;
        ++out.attempts;
        try {
            ImageKey key = unwrap_image_key(c.header.scramble_key, cand);
            Bytes plain = decrypt_payload(c.payload, key);
            if (verify_payload_digest(plain, c.header.payload_digest)) {
                out.status = DecryptStatus::Decrypted;
                out.version_label = cand.version_label;
                out.payload_out = std::move(plain);
                return out;
            }
        } catch (const CryptoError&) {
            // wrong key: bad padding or bad length; fall through to next candidate
        }
    }
    out.status = any_cipher ? DecryptStatus::AllCandidatesFailed
                            : DecryptStatus::NoKeyForIdentifier;
    return out;
}

/// One (name, bytes) pair per chunk entry. A zero-chunk header yields a single
/// implicit whole-payload output named after the image.
inline std::vector<std::pair<std::string, Bytes>> extract_chunks(const DecryptOutcome& o,
                                                                 const FirmwareHeader& header) {
    if (!o.succeeded() || !o.payload_out)
        throw std::invalid_argument("extract_chunks requires a recovered payload");
    const Bytes& payload = *o.payload_out;
    std::vector<std::pair<std::string, Bytes>> out;
    if (header.chunks.empty()) {
        out.emplace_back(header.image_name_str(), payload);
        return out;
    }
    for (const auto& c : header.chunks) {
        const std::uint64_t end = static_cast<std::uint64_t>(c.start_offset) + c.output_size;
        if (end > payload.size())
            throw DecryptError(DecryptError::Code::ChunkOutOfBounds,
                               "chunk " + tag_str(c.name) + " ends at " + std::to_string(end) +
                                   " beyond payload of " + std::to_string(payload.size()));
        out.emplace_back(tag_str(c.name),
                         Bytes(payload.begin() + c.start_offset,
                               payload.begin() + static_cast<std::ptrdiff_t>(end)));
    }
    return out;
}

struct IdentifierStats {
    std::uint64_t tried = 0;
    std::uint64_t succeeded = 0;

    bool operator==(const IdentifierStats&) const = default;
};

struct CorpusReport {
    std::uint64_t total_files = 0;
    std::uint64_t encrypted = 0;
    std::uint64_t decrypted = 0;
    std::uint64_t passthrough = 0;
    std::uint64_t failed_no_key = 0;
    std::uint64_t failed_all_keys = 0;
    std::uint64_t not_container = 0;
    std::map<std::string, IdentifierStats> per_identifier;
    std::vector<std::pair<std::string, std::string>> io_errors; // (path, message)

    /// "91.48%" style, two decimal places; "n/a" when nothing was encrypted.
    std::string success_ratio() const {
        if (encrypted == 0) return "n/a";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f%%",
                      100.0 * static_cast<double>(decrypted) / static_cast<double>(encrypted));
        return buf;
    }

    bool operator==(const CorpusReport&) const = default;
};

namespace detail {

inline std::string sanitize_name(const std::string& name) {
    std::string out;
    for (char ch : name)
        out.push_back(std::isalnum(static_cast<unsigned char>(ch)) ||
                              ch == '-' || ch == '_' || ch == '.'
                          ? ch
                          : '_');
    return out.empty() ? "_" : out;
}

/// Process one corpus file: classify, decrypt, write outputs. Per-file
/// failure modes end up in the outcome, not as exceptions.
inline DecryptOutcome process_corpus_file(const std::filesystem::path& in_path,
                                          const std::filesystem::path& rel,
                                          const KeyStore& store,
                                          const std::filesystem::path& out_dir,
                                          Tag4* enc_id_out = nullptr) {
    DecryptOutcome o;
    o.input_path = in_path.string();
    Bytes data = read_file(in_path);

    FirmwareContainer c;
    try {
        c = parse_container(data);
    } catch (const ContainerError& e) {
        o.kind = FileKind::NotAContainer;
        o.status = DecryptStatus::ParseError;
        o.detail = e.what();
        return o;
    }
    if (enc_id_out) *enc_id_out = c.header.enc_key_id;

    DecryptOutcome r = decrypt_image(c, store);
    r.input_path = o.input_path;
    if (!r.succeeded()) return r;

    const std::filesystem::path out_base = out_dir / rel;
    write_file(out_base.string() + ".dec", *r.payload_out);
    if (!c.header.chunks.empty()) {
        auto chunks = extract_chunks(r, c.header);
        std::map<std::string, int> seen;
        for (const auto& [name, bytes] : chunks) {
            std::string fname = out_base.string() + ".chunk." + sanitize_name(name);
            int n = seen[fname]++;
            if (n > 0) fname += "." + std::to_string(n);
            write_file(fname, bytes);
        }
    }
    return r;
}

inline void account(CorpusReport& rep, const DecryptOutcome& o, const Tag4& enc_id) {
    ++rep.total_files;
    switch (o.kind) {
        case FileKind::NotAContainer:
            ++rep.not_container;
            return;
        case FileKind::SignedPlainFile:
            ++rep.passthrough;
            return;
        case FileKind::EncryptedImage:
            break;
    }
    ++rep.encrypted;
    auto& stats = rep.per_identifier[tag_str(enc_id)];
    ++stats.tried;
    switch (o.status) {
        case DecryptStatus::Decrypted:
            ++rep.decrypted;
            ++stats.succeeded;
            break;
        case DecryptStatus::NoKeyForIdentifier:
            ++rep.failed_no_key;
            break;
        case DecryptStatus::AllCandidatesFailed:
            ++rep.failed_all_keys;
            break;
        default:
            break;
    }
}

} // namespace detail

/// Classifies and processes every regular file under corpus_dir, writing
/// recovered payloads and chunks under out_dir with the input layout
/// mirrored. Per-file I/O errors are recorded, never fatal. The report is
/// reduced in sorted path order, so counts do not depend on jobs or
/// traversal order.
inline CorpusReport batch_decrypt(const std::filesystem::path& corpus_dir, const KeyStore& store,
                                  const std::filesystem::path& out_dir, unsigned jobs = 1) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(corpus_dir))
        throw DecryptError(DecryptError::Code::IoError,
                           "corpus directory not readable: " + corpus_dir.string());

    std::vector<fs::path> rels;
    for (const auto& entry : fs::recursive_directory_iterator(corpus_dir))
        if (entry.is_regular_file())
            rels.push_back(fs::relative(entry.path(), corpus_dir));
    std::sort(rels.begin(), rels.end());

    struct Slot {
        DecryptOutcome outcome;
        Tag4 enc_id{};
        std::string io_error;
    };
    std::vector<Slot> slots(rels.size());

    const auto worker_body = [&](std::size_t i) {
        const fs::path in_path = corpus_dir / rels[i];
        Slot& slot = slots[i];
        try {
            slot.outcome =
                detail::process_corpus_file(in_path, rels[i], store, out_dir, &slot.enc_id);
        } catch (const std::exception& e) {
            slot.outcome.input_path = in_path.string();
            slot.outcome.kind = FileKind::NotAContainer;
            slot.outcome.status = DecryptStatus::ParseError;
            slot.io_error = e.what();
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < rels.size(); ++i) worker_body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const unsigned n = std::min<unsigned>(jobs, std::max<std::size_t>(rels.size(), 1));
        pool.reserve(n);
        for (unsigned t = 0; t < n; ++t)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= rels.size()) break;
                    worker_body(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    CorpusReport rep;
    for (const auto& slot : slots) {
        if (!slot.io_error.empty()) {
            ++rep.total_files;
            rep.io_errors.emplace_back(slot.outcome.input_path, slot.io_error);
            continue;
        }
        detail::account(rep, slot.outcome, slot.enc_id);
    }
    return rep;
}

} // namespace fwforge
