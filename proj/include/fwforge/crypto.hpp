#pragma once

// Cipher/digest/signature operations behind the pipeline contracts:
//  - scramble_key holds the per-image key wrapped by one AES-ECB block
//    under the keystore key (AES-128 or AES-256 by key length)
//  - payload is AES-128-CBC, zero IV, PKCS#7
//  - payload_digest is SHA-256 of the plaintext
//  - signature is RSA PKCS#1 v1.5 over SHA-256 of the header region
// Primitives come from OpenSSL; behavior is pinned by test vectors.

#include <cstdint>
#include <memory>
#include <string>

#include <openssl/evp.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include "fwforge/bytes.hpp"
#include "fwforge/keystore.hpp"

namespace fwforge {

class CryptoError : public Error {
public:
    enum class Code {
        BadKeyLength,
        BadLength,
        BadPadding,
        Internal,
    };

    CryptoError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

/// Unwrapped per-image cipher key.
struct ImageKey {
    std::array<std::uint8_t, 16> material{};

    bool operator==(const ImageKey&) const = default;
};

enum class SigVerify {
    Valid,
    Invalid,
    Unsupported,
};

namespace detail {

struct CipherCtxFree {
    void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};
struct MdCtxFree {
    void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct PkeyFree {
    void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct BioFree {
    void operator()(BIO* p) const { BIO_free(p); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using Pkey = std::unique_ptr<EVP_PKEY, PkeyFree>;
using Bio = std::unique_ptr<BIO, BioFree>;

[[noreturn]] inline void crypto_fail(const char* what) {
    throw CryptoError(CryptoError::Code::Internal, std::string("openssl: ") + what);
}

// std::span over an empty vector can yield a null data pointer; OpenSSL
// entry points want a non-null buffer even for zero-length input.
inline const std::uint8_t* nonnull(ByteView data) {
    static const std::uint8_t dummy = 0;
    return data.empty() ? &dummy : data.data();
}

inline const EVP_CIPHER* ecb_cipher_for(std::size_t key_len) {
    if (key_len == 16) return EVP_aes_128_ecb();
    if (key_len == 32) return EVP_aes_256_ecb();
    return nullptr;
}

/// One-block AES-ECB, no padding. `in` and the result are exactly 16 bytes.
inline std::array<std::uint8_t, 16> aes_ecb_block(ByteView key,
                                                  const std::array<std::uint8_t, 16>& in,
                                                  bool encrypt) {
    const EVP_CIPHER* cipher = ecb_cipher_for(key.size());
    if (!cipher)
        throw CryptoError(CryptoError::Code::BadKeyLength,
                          "store key must be 16 or 32 bytes, got " + std::to_string(key.size()));
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) crypto_fail("EVP_CIPHER_CTX_new");
    if (EVP_CipherInit_ex(ctx.get(), cipher, nullptr, key.data(), nullptr, encrypt ? 1 : 0) != 1)
        crypto_fail("EVP_CipherInit_ex");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
    std::array<std::uint8_t, 16> out{};
    int len = 0;
    if (EVP_CipherUpdate(ctx.get(), out.data(), &len, in.data(), 16) != 1 || len != 16)
        crypto_fail("EVP_CipherUpdate");
    int fin = 0;
    if (EVP_CipherFinal_ex(ctx.get(), out.data() + len, &fin) != 1 || fin != 0)
        crypto_fail("EVP_CipherFinal_ex");
    return out;
}

/// AES-128-CBC with all-zero IV and PKCS#7 padding.
inline Bytes aes128_cbc_zero_iv(ByteView data, const ImageKey& key, bool encrypt) {
    static const std::uint8_t zero_iv[16] = {};
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) crypto_fail("EVP_CIPHER_CTX_new");
    if (EVP_CipherInit_ex(ctx.get(), EVP_aes_128_cbc(), nullptr, key.material.data(), zero_iv,
                          encrypt ? 1 : 0) != 1)
        crypto_fail("EVP_CipherInit_ex");
    Bytes out(data.size() + 16);
    int len = 0;
    if (EVP_CipherUpdate(ctx.get(), out.data(), &len,
                         detail::nonnull(data), static_cast<int>(data.size())) != 1)
        crypto_fail("EVP_CipherUpdate");
    int fin = 0;
    if (EVP_CipherFinal_ex(ctx.get(), out.data() + len, &fin) != 1) {
        if (!encrypt)
            throw CryptoError(CryptoError::Code::BadPadding, "invalid PKCS#7 padding");
        crypto_fail("EVP_CipherFinal_ex");
    }
    out.resize(static_cast<std::size_t>(len) + static_cast<std::size_t>(fin));
    return out;
}

inline Pkey load_private_pem(const std::string& pem) {
    Bio bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
    if (!bio) crypto_fail("BIO_new_mem_buf");
    return Pkey(PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr));
}

/// Accepts DER SubjectPublicKeyInfo or PKCS#1 RSAPublicKey bytes.
inline Pkey load_public_der(ByteView der) {
    const unsigned char* p = der.data();
    if (EVP_PKEY* pk = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size())))
        return Pkey(pk);
    p = der.data();
    if (EVP_PKEY* pk = d2i_PublicKey(EVP_PKEY_RSA, nullptr, &p, static_cast<long>(der.size())))
        return Pkey(pk);
    return nullptr;
}

inline Bytes rsa_sign_sha256(ByteView region, const std::string& private_pem) {
    Pkey pkey = load_private_pem(private_pem);
    if (!pkey) crypto_fail("PEM_read_bio_PrivateKey");
    MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx) crypto_fail("EVP_MD_CTX_new");
    if (EVP_DigestSignInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) != 1)
        crypto_fail("EVP_DigestSignInit");
    std::size_t sig_len = 0;
    if (EVP_DigestSign(ctx.get(), nullptr, &sig_len, nonnull(region), region.size()) != 1)
        crypto_fail("EVP_DigestSign(size)");
    Bytes sig(sig_len);
    if (EVP_DigestSign(ctx.get(), sig.data(), &sig_len, nonnull(region), region.size()) != 1)
        crypto_fail("EVP_DigestSign");
    sig.resize(sig_len);
    return sig;
}

inline std::string generate_rsa_private_pem(unsigned bits = 2048) {
    Pkey pkey(EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA", static_cast<std::size_t>(bits)));
    if (!pkey) crypto_fail("EVP_PKEY_Q_keygen");
    Bio bio(BIO_new(BIO_s_mem()));
    if (!bio) crypto_fail("BIO_new");
    if (PEM_write_bio_PrivateKey(bio.get(), pkey.get(), nullptr, nullptr, 0, nullptr, nullptr) != 1)
        crypto_fail("PEM_write_bio_PrivateKey");
    char* mem = nullptr;
    long n = BIO_get_mem_data(bio.get(), &mem);
    return std::string(mem, static_cast<std::size_t>(n));
}

/// DER SubjectPublicKeyInfo of the public half, for AuthPublic key records.
inline Bytes public_key_der_from_private_pem(const std::string& private_pem) {
    Pkey pkey = load_private_pem(private_pem);
    if (!pkey) crypto_fail("PEM_read_bio_PrivateKey");
    int n = i2d_PUBKEY(pkey.get(), nullptr);
    if (n <= 0) crypto_fail("i2d_PUBKEY(size)");
    Bytes der(static_cast<std::size_t>(n));
    unsigned char* p = der.data();
    if (i2d_PUBKEY(pkey.get(), &p) != n) crypto_fail("i2d_PUBKEY");
    return der;
}

} // namespace detail

inline std::array<std::uint8_t, 32> sha256(ByteView data) {
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (EVP_Digest(detail::nonnull(data), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != 32)
        detail::crypto_fail("EVP_Digest");
    return out;
}

/// Unwraps the per-image key: one AES-ECB block decryption of scramble_key
/// under the keystore key.
inline ImageKey unwrap_image_key(const std::array<std::uint8_t, 16>& scramble_key,
                                 const KeyRecord& store_key) {
    ImageKey out;
    out.material = detail::aes_ecb_block(store_key.material, scramble_key, /*encrypt=*/false);
    return out;
}

/// Inverse of unwrap_image_key; used by the packer.
inline std::array<std::uint8_t, 16> wrap_image_key(const ImageKey& image_key,
                                                   const KeyRecord& store_key) {
    return detail::aes_ecb_block(store_key.material, image_key.material, /*encrypt=*/true);
}

inline Bytes decrypt_payload(ByteView cipher, const ImageKey& key) {
    if (cipher.empty() || cipher.size() % 16 != 0)
        throw CryptoError(CryptoError::Code::BadLength,
                          "ciphertext length must be a positive multiple of 16");
    return detail::aes128_cbc_zero_iv(cipher, key, /*encrypt=*/false);
}

inline bool verify_payload_digest(ByteView plain, const std::array<std::uint8_t, 32>& digest) {
    return sha256(plain) == digest;
}

/// Tri-state: Unsupported when the auth material is not a recognizable
/// public key encoding — opaque vendor blobs never verify as Valid.
inline SigVerify verify_signature(ByteView signed_region, ByteView sig,
                                  const KeyRecord& auth_key) {
    detail::Pkey pkey = detail::load_public_der(auth_key.material);
    if (!pkey) return SigVerify::Unsupported;
    if (EVP_PKEY_base_id(pkey.get()) != EVP_PKEY_RSA) return SigVerify::Unsupported;
    detail::MdCtx ctx(EVP_MD_CTX_new());
    if (!ctx) detail::crypto_fail("EVP_MD_CTX_new");
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, EVP_sha256(), nullptr, pkey.get()) != 1)
        detail::crypto_fail("EVP_DigestVerifyInit");
    int rc = EVP_DigestVerify(ctx.get(), detail::nonnull(sig), sig.size(),
                              detail::nonnull(signed_region), signed_region.size());
    return rc == 1 ? SigVerify::Valid : SigVerify::Invalid;
}

} // namespace fwforge
