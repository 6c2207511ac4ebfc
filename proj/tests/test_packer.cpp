#include <doctest.h>

#include <map>
#include <set>

#include "fwforge/decryptor.hpp"
#include "fwforge/packer.hpp"

#include "oracle/test_util.hpp"

using namespace fwforge;

TEST_CASE("pack then decrypt recovers the payload bit-exactly") {
    auto store = testutil::make_test_store();
    const KeyRecord* key = store.find_version("UFEK-2020-02");
    REQUIRE(key);
    Rng rng(21);
    for (int i = 0; i < 10; ++i) {
        Bytes payload = rng.bytes(rng.range(1, 4096));
        Bytes image = pack_image(payload, "roundtrip", key, nullptr, {}, rng.next());
        FirmwareContainer c = parse_container(image);
        CHECK(serialize_container(c) == image);
        DecryptOutcome o = decrypt_image(c, store);
        REQUIRE(o.status == DecryptStatus::Decrypted);
        CHECK(*o.payload_out == payload);
        CHECK(c.header.payload_digest == sha256(payload));
    }
}

TEST_CASE("plain mode classifies as a signed plain file") {
    Bytes payload{10, 20, 30};
    Bytes image = pack_image(payload, "plain", nullptr, nullptr, {}, 0);
    CHECK(classify_file(image) == FileKind::SignedPlainFile);
    FirmwareContainer c = parse_container(image);
    CHECK(c.payload == payload);
    CHECK_FALSE(c.header.is_encrypted());
    CHECK(c.header.rsa_sig_size == 0);
}

TEST_CASE("packing is deterministic in seed and inputs") {
    auto store = testutil::make_test_store();
    const KeyRecord* key = store.find_version("RREK-2017-01");
    Bytes payload(100, 0x42);
    Bytes a = pack_image(payload, "det", key, nullptr, {}, 1234);
    Bytes b = pack_image(payload, "det", key, nullptr, {}, 1234);
    CHECK(a == b);
    Bytes c = pack_image(payload, "det", key, nullptr, {}, 1235);
    CHECK(a != c);
}

TEST_CASE("name and chunk validation") {
    Bytes payload(10, 1);
    CHECK_THROWS_AS(
        pack_image(payload, "this-image-name-is-far-too-long-to-fit", nullptr, nullptr, {}, 0),
        PackError);
    std::vector<ChunkEntry> oob{{make_tag("BAD"), 5, 10, 0}};
    CHECK_THROWS_AS(pack_image(payload, "x", nullptr, nullptr, oob, 0), PackError);

    // 32-char name is the boundary and survives the round trip
    std::string name(32, 'n');
    FirmwareContainer c = parse_container(pack_image(payload, name, nullptr, nullptr, {}, 0));
    CHECK(c.header.image_name_str() == name);
}

TEST_CASE("signed images verify against the matching auth record") {
    std::string pem = detail::generate_rsa_private_pem(2048);
    SigningKey signer{make_tag("PRAK"), pem};

    KeyRecord auth;
    auth.identifier = make_tag("PRAK");
    auth.version_label = "PRAK-test";
    auth.role = KeyRole::AuthPublic;
    auth.material = detail::public_key_der_from_private_pem(pem);

    auto store = testutil::make_test_store();
    const KeyRecord* enc = store.find_version("IAEK-2017-01");

    Rng rng(55);
    Bytes payload = rng.bytes(256);
    Bytes image = pack_image(payload, "signed", enc, &signer, {}, 8);
    FirmwareContainer c = parse_container(image);
    CHECK(c.header.rsa_sig_size == 256);
    CHECK(c.signature.size() == 256);
    CHECK(tag_str(c.header.auth_key_id) == "PRAK");

    // the signature covers the serialized header region
    Bytes header_bytes = serialize_header(c.header);
    CHECK(verify_signature(header_bytes, c.signature, auth) == SigVerify::Valid);

    // flipping a payload bit flips the digest in the header, breaking the chain:
    // digest check fails; tampering with the header breaks the signature itself
    Bytes tampered_header = header_bytes;
    tampered_header[64] ^= 0x01; // image_name byte
    CHECK(verify_signature(tampered_header, c.signature, auth) == SigVerify::Invalid);
}

TEST_CASE("encryption actually randomizes payload blocks") {
    auto store = testutil::make_test_store();
    const KeyRecord* key = store.find_version("RREK-2018-05");
    Rng rng(66);
    int differing = 0, total = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Bytes payload = rng.bytes(512);
        FirmwareContainer c =
            parse_container(pack_image(payload, "rand", key, nullptr, {}, rng.next()));
        for (std::size_t block = 0; block + 16 <= payload.size(); block += 16) {
            ++total;
            if (!std::equal(payload.begin() + block, payload.begin() + block + 16,
                            c.payload.begin() + block))
                ++differing;
        }
    }
    CHECK(static_cast<double>(differing) >= 0.99 * static_cast<double>(total));
}

TEST_CASE("generate_corpus writes the requested mix with a faithful manifest") {
    testutil::TempDir dir("gen");
    testutil::TempDir out("genout");
    auto store = testutil::make_test_store();

    CorpusSpec spec;
    spec.seed = 7;
    spec.n_encrypted_known = 10;
    spec.n_encrypted_unknown = 2;
    spec.n_plain = 3;
    spec.n_garbage = 2;
    spec.payload_size_range = {32, 256};
    spec.chunk_count_range = {0, 3};

    Manifest manifest = generate_corpus(spec, store, dir.path());
    REQUIRE(manifest.size() == 17);

    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir.path())) {
        (void)e;
        ++files;
    }
    CHECK(files == 17);

    // ground truth: every known-key file decrypts with exactly that version
    for (const auto& entry : manifest) {
        Bytes data = detail::read_file(dir.path() / entry.path);
        if (entry.kind == "garbage") {
            CHECK(classify_file(data) == FileKind::NotAContainer);
            continue;
        }
        FirmwareContainer c = parse_container(data);
        DecryptOutcome o = decrypt_image(c, store);
        if (entry.kind == "plain") {
            CHECK(o.status == DecryptStatus::PlainPassthrough);
        } else if (entry.key_version) {
            CHECK(o.status == DecryptStatus::Decrypted);
            CHECK(o.version_label == *entry.key_version);
        } else {
            CHECK((o.status == DecryptStatus::NoKeyForIdentifier ||
                   o.status == DecryptStatus::AllCandidatesFailed));
        }
    }

    CorpusReport rep = batch_decrypt(dir.path(), store, out.path(), 2);
    CHECK(rep.total_files == 17);
    CHECK(rep.encrypted == 12);
    CHECK(rep.decrypted == 10);
    CHECK(rep.passthrough == 3);
    CHECK(rep.failed_no_key + rep.failed_all_keys == 2);
    CHECK(rep.not_container == 2);
}

TEST_CASE("same spec and seed produce identical corpora") {
    testutil::TempDir a("gena");
    testutil::TempDir b("genb");
    auto store = testutil::make_test_store();

    CorpusSpec spec;
    spec.seed = 99;
    spec.n_encrypted_known = 5;
    spec.n_plain = 2;
    spec.payload_size_range = {16, 64};

    Manifest ma = generate_corpus(spec, store, a.path());
    Manifest mb = generate_corpus(spec, store, b.path());
    REQUIRE(ma.size() == mb.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        CHECK(ma[i].path == mb[i].path);
        CHECK(detail::read_file(a.path() / ma[i].path) == detail::read_file(b.path() / mb[i].path));
    }
}

TEST_CASE("empty spec yields an empty manifest") {
    testutil::TempDir dir("genempty");
    Manifest m = generate_corpus(CorpusSpec{}, KeyStore{}, dir.path());
    CHECK(m.empty());
}

TEST_CASE("known-key generation without cipher keys is refused") {
    testutil::TempDir dir("genbad");
    CorpusSpec spec;
    spec.n_encrypted_known = 1;
    CHECK_THROWS_AS(generate_corpus(spec, KeyStore{}, dir.path()), PackError);
}
