#include <doctest.h>

#include "fwforge/crypto.hpp"
#include "fwforge/packer.hpp"

#include "oracle/ref_crypto.hpp"
#include "oracle/test_util.hpp"

using namespace fwforge;

namespace {

Bytes hexb(const std::string& s) {
    auto v = from_hex(s);
    if (!v) throw std::invalid_argument("bad hex in test: " + s);
    return *v;
}

std::array<std::uint8_t, 16> arr16(const Bytes& b) {
    if (b.size() != 16) throw std::invalid_argument("expected 16 bytes");
    std::array<std::uint8_t, 16> out{};
    std::copy(b.begin(), b.end(), out.begin());
    return out;
}

const Bytes& fips_key_128() {
    static const Bytes k = hexb("000102030405060708090a0b0c0d0e0f");
    return k;
}

const Bytes& fips_key_256() {
    static const Bytes k =
        hexb("000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f");
    return k;
}

} // namespace

TEST_CASE("reference AES matches FIPS-197 appendix C") {
    auto pt = arr16(hexb("00112233445566778899aabbccddeeff"));
    auto ct128 = refcrypto::aes_encrypt_block(pt, fips_key_128().data(), fips_key_128().size());
    CHECK(to_hex(ct128) == "69c4e0d86a7b0430d8cdb78070b4c55a");
    CHECK(refcrypto::aes_decrypt_block(ct128, fips_key_128().data(), fips_key_128().size()) == pt);

    auto ct256 = refcrypto::aes_encrypt_block(pt, fips_key_256().data(), fips_key_256().size());
    CHECK(to_hex(ct256) == "8ea2b7ca516745bfeafc49904b496089");
    CHECK(refcrypto::aes_decrypt_block(ct256, fips_key_256().data(), fips_key_256().size()) == pt);
}

TEST_CASE("unwrap of the zero scramble block matches the frozen vector") {
    // expected values computed with an independent AES implementation
    KeyRecord store_key;
    store_key.role = KeyRole::PayloadCipher;
    store_key.material = fips_key_128();

    ImageKey unwrapped = unwrap_image_key({}, store_key);
    CHECK(to_hex(unwrapped.material) == "7b1d29a16cf8ccab84f0b8a598e42fa6");

    store_key.material = fips_key_256();
    unwrapped = unwrap_image_key({}, store_key);
    CHECK(to_hex(unwrapped.material) == "6d9f08eb2a2e277ab48984cff1ab9a09");
}

TEST_CASE("unwrap inverts wrap and is deterministic") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        KeyRecord store_key;
        store_key.role = KeyRole::PayloadCipher;
        store_key.material = rng.bytes(i % 2 ? 16 : 32);
        ImageKey image_key;
        auto raw = rng.bytes(16);
        std::copy(raw.begin(), raw.end(), image_key.material.begin());

        auto wrapped = wrap_image_key(image_key, store_key);
        CHECK(unwrap_image_key(wrapped, store_key) == image_key);
        CHECK(unwrap_image_key(wrapped, store_key) == image_key); // determinism

        // the wrap really is one AES block under the store key
        auto ref = refcrypto::aes_encrypt_block(image_key.material, store_key.material.data(),
                                                store_key.material.size());
        CHECK(wrapped == ref);
    }

    KeyRecord bad;
    bad.material = Bytes(20, 0);
    CHECK_THROWS_AS(unwrap_image_key({}, bad), CryptoError);
}

TEST_CASE("payload encrypt/decrypt round-trips and matches the reference CBC") {
    Rng rng(11);
    for (std::size_t len : {std::size_t{1}, std::size_t{15}, std::size_t{16}, std::size_t{17},
                            std::size_t{64}, std::size_t{1000}, std::size_t{4096}}) {
        Bytes plain = rng.bytes(len);
        ImageKey key;
        auto raw = rng.bytes(16);
        std::copy(raw.begin(), raw.end(), key.material.begin());

        Bytes cipher = encrypt_payload(plain, key);
        CHECK(cipher.size() % 16 == 0);
        CHECK(cipher.size() >= plain.size() + 1);
        CHECK(cipher.size() <= plain.size() + 16);
        CHECK(decrypt_payload(cipher, key) == plain);

        CHECK(cipher == refcrypto::aes128_cbc_encrypt(plain, key.material));
        Bytes ref_plain;
        REQUIRE(refcrypto::aes128_cbc_decrypt(cipher, key.material, ref_plain));
        CHECK(ref_plain == plain);
    }
}

TEST_CASE("a full-padding block decrypts to the empty payload") {
    // frozen: AES-128 encryption of sixteen 0x10 bytes under the FIPS key
    Bytes cipher = hexb("954f64f2e4e86e9eee82d20216684899");
    ImageKey key{arr16(fips_key_128())};
    CHECK(decrypt_payload(cipher, key).empty());
}

TEST_CASE("length violations raise BadLength") {
    ImageKey key{};
    const auto code_of = [&](const Bytes& b) {
        try {
            decrypt_payload(b, key);
        } catch (const CryptoError& e) {
            return e.code();
        }
        return CryptoError::Code::Internal;
    };
    CHECK(code_of(Bytes(24, 0)) == CryptoError::Code::BadLength);
    CHECK(code_of(Bytes{}) == CryptoError::Code::BadLength);
}

TEST_CASE("digest verification: canonical empty hash and bit-flip rejection") {
    auto empty_digest = sha256(Bytes{});
    CHECK(to_hex(empty_digest) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(verify_payload_digest(Bytes{}, empty_digest));

    auto flipped = empty_digest;
    flipped[0] ^= 0x01;
    CHECK_FALSE(verify_payload_digest(Bytes{}, flipped));
}

TEST_CASE("sha256 agrees with the independent reference on 1000 random inputs") {
    Rng rng(1234);
    for (int i = 0; i < 1000; ++i) {
        Bytes data = rng.bytes(rng.range(0, 300));
        CHECK(sha256(data) == refcrypto::sha256(data));
    }
}

TEST_CASE("signature verify: oracle-signed regions verify, tampering fails") {
    std::string pem = detail::generate_rsa_private_pem(2048);
    Bytes pub_der = detail::public_key_der_from_private_pem(pem);

    KeyRecord auth;
    auth.identifier = make_tag("PRAK");
    auth.version_label = "PRAK-test";
    auth.role = KeyRole::AuthPublic;
    auth.material = pub_der;

    Rng rng(99);
    Bytes region = rng.bytes(300);
    Bytes sig = detail::rsa_sign_sha256(region, pem);
    CHECK(verify_signature(region, sig, auth) == SigVerify::Valid);

    Bytes tampered = region;
    tampered[17] ^= 0x40;
    CHECK(verify_signature(tampered, sig, auth) == SigVerify::Invalid);

    Bytes bad_sig = sig;
    bad_sig[0] ^= 0x01;
    CHECK(verify_signature(region, bad_sig, auth) == SigVerify::Invalid);

    // opaque vendor blob: never a false Valid
    KeyRecord opaque = auth;
    opaque.material = hexb("40000000c3151641157d3a");
    CHECK(verify_signature(region, sig, opaque) == SigVerify::Unsupported);
}

TEST_CASE("wrong keys never decrypt silently (sampled)") {
    auto store = testutil::make_test_store();
    const KeyRecord* true_key = store.find_version("RREK-2017-01");
    REQUIRE(true_key);

    Rng rng(31337);
    int bad_padding = 0, digest_mismatch = 0;
    for (int i = 0; i < 200; ++i) {
        Bytes payload = rng.bytes(48);
        Bytes image = pack_image(payload, "x", true_key, nullptr, {}, rng.next());
        FirmwareContainer c = parse_container(image);

        KeyRecord wrong = *true_key;
        wrong.material = rng.bytes(16);
        if (wrong.material == true_key->material) continue;

        ImageKey k = unwrap_image_key(c.header.scramble_key, wrong);
        try {
            Bytes plain = decrypt_payload(c.payload, k);
            CHECK_FALSE(verify_payload_digest(plain, c.header.payload_digest));
            ++digest_mismatch;
        } catch (const CryptoError& e) {
            CHECK(e.code() == CryptoError::Code::BadPadding);
            ++bad_padding;
        }
    }
    CHECK(bad_padding + digest_mismatch == 200);
    CHECK(bad_padding > 0); // the common signal
}
