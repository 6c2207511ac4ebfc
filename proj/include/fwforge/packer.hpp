#pragma once

// Encryption oracle: the inverse of the decryption pipeline. Everything it
// emits is parseable and decryptable by this library, giving the test suite
// ground truth without vendor keys or vendor firmware. Deterministic from
// (seed, inputs); per-file seeds in corpus generation mix as seed XOR index.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwforge/bytes.hpp"
#include "fwforge/container.hpp"
#include "fwforge/crypto.hpp"
#include "fwforge/decryptor.hpp"
#include "fwforge/keystore.hpp"

namespace fwforge {

class PackError : public Error {
public:
    enum class Code {
        NameTooLong,
        ChunkOutOfBounds,
        BadKeyRole,
        EmptyStore,
        IoError,
    };

    PackError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

/// splitmix64: tiny deterministic generator, identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [lo, hi] by rejection-free modulo; bias is irrelevant here.
    std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
        return lo + next() % (hi - lo + 1);
    }

    Bytes bytes(std::size_t n) {
        Bytes out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(next());
        return out;
    }

private:
    std::uint64_t state_;
};

/// Private signing key plus the auth identifier to stamp into the header.
struct SigningKey {
    Tag4 auth_key_id = make_tag("PRAK");
    std::string private_key_pem;
};

/// AES-128-CBC, zero IV, PKCS#7 — inverse of decrypt_payload.
inline Bytes encrypt_payload(ByteView plain, const ImageKey& key) {
    return detail::aes128_cbc_zero_iv(plain, key, /*encrypt=*/true);
}

/// Builds a complete container image. With enc_key: derives a random image
/// key from seed, wraps it into scramble_key, encrypts the payload. Without:
/// enc_key_id stays all-zero and the payload is stored plain. With sign:
/// signs the serialized header region (which embeds the payload digest).
inline Bytes pack_image(ByteView payload, std::string_view image_name,
                        const KeyRecord* enc_key, const SigningKey* sign,
                        const std::vector<ChunkEntry>& chunk_plan, std::uint64_t seed) {
    if (image_name.size() > 32)
        throw PackError(PackError::Code::NameTooLong,
                        "image name exceeds 32 bytes: " + std::string(image_name));
    if (enc_key && enc_key->role != KeyRole::PayloadCipher)
        throw PackError(PackError::Code::BadKeyRole,
                        "encryption key must have cipher role: " + enc_key->version_label);
    for (const auto& c : chunk_plan) {
        const std::uint64_t end = static_cast<std::uint64_t>(c.start_offset) + c.output_size;
        if (end > payload.size())
            throw PackError(PackError::Code::ChunkOutOfBounds,
                            "chunk " + tag_str(c.name) + " exceeds payload of " +
                                std::to_string(payload.size()));
    }

    FirmwareContainer c;
    FirmwareHeader& h = c.header;
    h.format_version = 1;
    for (std::size_t i = 0; i < image_name.size(); ++i)
        h.image_name[i] = static_cast<std::uint8_t>(image_name[i]);
    h.payload_digest = sha256(payload);
    h.chunks = chunk_plan;
    h.block_count = static_cast<std::uint32_t>(chunk_plan.size());
    h.header_size =
        static_cast<std::uint32_t>(kFixedHeaderSize + kChunkEntrySize * chunk_plan.size());

    if (enc_key) {
        Rng rng(seed);
        ImageKey image_key;
        Bytes raw = rng.bytes(image_key.material.size());
        std::copy(raw.begin(), raw.end(), image_key.material.begin());
        h.enc_key_id = enc_key->identifier;
        h.scramble_key = wrap_image_key(image_key, *enc_key);
        c.payload = encrypt_payload(payload, image_key);
        for (auto& ch : h.chunks) ch.attributes |= kChunkAttrEncrypted;
    } else {
        c.payload.assign(payload.begin(), payload.end());
    }
    h.payload_size = static_cast<std::uint32_t>(c.payload.size());

    if (sign) {
        h.auth_key_id = sign->auth_key_id;
        // probe the signature size so the header is final before signing
        Bytes probe = detail::rsa_sign_sha256(Bytes{0}, sign->private_key_pem);
        h.rsa_sig_size = static_cast<std::uint32_t>(probe.size());
        Bytes header_bytes = serialize_header(h);
        c.signature = detail::rsa_sign_sha256(header_bytes, sign->private_key_pem);
        if (c.signature.size() != h.rsa_sig_size)
            throw PackError(PackError::Code::IoError, "signature size changed between probes");
    }

    return serialize_container(c);
}

struct CorpusSpec {
    std::uint64_t seed = 0;
    std::uint32_t n_encrypted_known = 0;
    std::uint32_t n_encrypted_unknown = 0;
    std::uint32_t n_plain = 0;
    std::uint32_t n_garbage = 0;
    std::pair<std::uint32_t, std::uint32_t> payload_size_range{64, 4096};
    std::pair<std::uint32_t, std::uint32_t> chunk_count_range{0, 4};
};

struct ManifestEntry {
    std::string path;
    std::string kind; // "encrypted" | "plain" | "garbage"
    std::optional<std::string> key_version; // ground-truth key for known-key files
};

using Manifest = std::vector<ManifestEntry>;

namespace detail {

inline std::vector<ChunkEntry> random_chunk_plan(Rng& rng, std::uint32_t count,
                                                 std::size_t payload_len) {
    std::vector<ChunkEntry> plan;
    if (count == 0 || payload_len == 0) return plan;
    // split the payload into `count` contiguous runs
    std::vector<std::uint32_t> cuts{0, static_cast<std::uint32_t>(payload_len)};
    for (std::uint32_t i = 1; i < count; ++i)
        cuts.push_back(static_cast<std::uint32_t>(rng.range(0, payload_len)));
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        ChunkEntry c;
        char name[5];
        std::snprintf(name, sizeof(name), "C%03zu", i % 1000);
        c.name = make_tag(name);
        c.start_offset = cuts[i];
        c.output_size = cuts[i + 1] - cuts[i];
        plan.push_back(c);
    }
    return plan;
}

} // namespace detail

/// Writes exactly the requested mix of files plus a manifest.json recording
/// per-file ground truth. Reproducible: same spec and seed, same bytes.
/// Unknown-key files are packed with keys that are generated and withheld
/// from the store; half reuse a store identifier (decryption exhausts the
/// candidate list), half use a fresh identifier (no candidates at all).
inline Manifest generate_corpus(const CorpusSpec& spec, const KeyStore& store,
                                const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (spec.n_encrypted_known > 0) {
        bool any_cipher = false;
        for (const auto& r : store.records())
            if (r.role == KeyRole::PayloadCipher) any_cipher = true;
        if (!any_cipher)
            throw PackError(PackError::Code::EmptyStore,
                            "corpus wants known-key files but the store has no cipher keys");
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw PackError(PackError::Code::IoError, "cannot create corpus dir: " + dir.string());

    std::vector<KeyRecord> cipher_keys;
    for (const auto& r : store.records())
        if (r.role == KeyRole::PayloadCipher) cipher_keys.push_back(r);

    Manifest manifest;
    std::uint64_t index = 0;

    const auto payload_for = [&](Rng& rng) {
        return rng.bytes(rng.range(spec.payload_size_range.first, spec.payload_size_range.second));
    };
    const auto emit = [&](const std::string& name, ByteView bytes, const std::string& kind,
                          std::optional<std::string> key_version) {
        detail::write_file(dir / name, bytes);
        manifest.push_back({name, kind, std::move(key_version)});
    };

    for (std::uint32_t i = 0; i < spec.n_encrypted_known; ++i, ++index) {
        Rng rng(spec.seed ^ index);
        const KeyRecord& key = cipher_keys[rng.range(0, cipher_keys.size() - 1)];
        Bytes payload = payload_for(rng);
        auto plan = detail::random_chunk_plan(
            rng, static_cast<std::uint32_t>(
                     rng.range(spec.chunk_count_range.first, spec.chunk_count_range.second)),
            payload.size());
        char name[32];
        std::snprintf(name, sizeof(name), "fw_%05llu_known.im",
                      static_cast<unsigned long long>(index));
        char img[16];
        std::snprintf(img, sizeof(img), "IMG_%05llu", static_cast<unsigned long long>(index));
        Bytes image = pack_image(payload, img, &key, nullptr, plan, rng.next());
        emit(name, image, "encrypted", key.version_label);
    }

    for (std::uint32_t i = 0; i < spec.n_encrypted_unknown; ++i, ++index) {
        Rng rng(spec.seed ^ index);
        KeyRecord withheld;
        if (i % 2 == 0 && !cipher_keys.empty()) {
            withheld.identifier = cipher_keys[rng.range(0, cipher_keys.size() - 1)].identifier;
        } else {
            withheld.identifier = make_tag("WHK" + std::to_string(i % 10));
        }
        withheld.version_label = "withheld";
        withheld.role = KeyRole::PayloadCipher;
        withheld.material = rng.bytes(16);
        Bytes payload = payload_for(rng);
        char name[32];
        std::snprintf(name, sizeof(name), "fw_%05llu_hidden.im",
                      static_cast<unsigned long long>(index));
        Bytes image = pack_image(payload, "WITHHELD", &withheld, nullptr, {}, rng.next());
        emit(name, image, "encrypted", std::nullopt);
    }

    for (std::uint32_t i = 0; i < spec.n_plain; ++i, ++index) {
        Rng rng(spec.seed ^ index);
        Bytes payload = payload_for(rng);
        char name[32];
        std::snprintf(name, sizeof(name), "cfg_%05llu_plain.im",
                      static_cast<unsigned long long>(index));
        Bytes image = pack_image(payload, "CONFIG", nullptr, nullptr, {}, rng.next());
        emit(name, image, "plain", std::nullopt);
    }

    for (std::uint32_t i = 0; i < spec.n_garbage; ++i, ++index) {
        Rng rng(spec.seed ^ index);
        Bytes junk = rng.bytes(rng.range(16, 1024));
        junk[0] = 'X'; // never the container magic
        char name[32];
        std::snprintf(name, sizeof(name), "junk_%05llu.bin",
                      static_cast<unsigned long long>(index));
        emit(name, junk, "garbage", std::nullopt);
    }

    return manifest;
}

} // namespace fwforge
