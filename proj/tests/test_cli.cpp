#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "fwforge/cli.hpp"

#include "oracle/elf_builder.hpp"
#include "oracle/test_util.hpp"

using namespace fwforge;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json parse_json(const std::string& text) {
    return nlohmann::json::parse(text);
}

struct Fixture {
    testutil::TempDir dir{"cli"};
    fs::path keys_file;
    fs::path image_file;
    Bytes payload;

    Fixture() {
        auto store = testutil::make_test_store();
        keys_file = dir.path() / "keys.tsv";
        std::string keys_text = save_keystore(store);
        detail::write_file(keys_file, Bytes(keys_text.begin(), keys_text.end()));

        Rng rng(2024);
        payload = rng.bytes(300);
        const KeyRecord* key = store.find_version("RREK-2017-01");
        image_file = dir.path() / "fixture.im";
        detail::write_file(image_file, pack_image(payload, "fixture", key, nullptr, {}, 42));
    }
};

} // namespace

TEST_CASE("inspect prints the field table and exits 0") {
    Fixture fx;
    auto r = run_cli({"inspect", fx.image_file.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("magic            IM*H") != std::string::npos);
    CHECK(r.out.find("enc_key_id       RREK") != std::string::npos);

    auto rj = run_cli({"inspect", fx.image_file.string(), "--json"});
    CHECK(rj.code == 0);
    auto j = parse_json(rj.out);
    CHECK(j["magic"] == "IM*H");
    CHECK(j["enc_key_id"] == "RREK");
    CHECK(j["header_size"] == 192);
}

TEST_CASE("classify reports all three kinds") {
    Fixture fx;
    auto r = run_cli({"classify", fx.image_file.string()});
    CHECK(r.code == 0);
    CHECK(r.out == "encrypted-image\n");

    fs::path plain = fx.dir.path() / "plain.im";
    detail::write_file(plain, pack_image(fx.payload, "p", nullptr, nullptr, {}, 0));
    CHECK(run_cli({"classify", plain.string()}).out == "signed-plain-file\n");

    fs::path text = fx.dir.path() / "readme.txt";
    detail::write_file(text, Bytes{'h', 'i'});
    auto rj = run_cli({"classify", text.string(), "--json"});
    CHECK(parse_json(rj.out)["kind"] == "not-a-container");
}

TEST_CASE("decrypt writes outputs and reports the winning key") {
    Fixture fx;
    testutil::TempDir out("cliout");
    auto r = run_cli({"decrypt", fx.image_file.string(), "--keys", fx.keys_file.string(),
                      "--out", out.path().string(), "--json"});
    CHECK(r.code == 0);
    auto j = parse_json(r.out);
    CHECK(j["status"] == "decrypted");
    CHECK(j["version_label"] == "RREK-2017-01");
    CHECK(detail::read_file(out.path() / "fixture.im.dec") == fx.payload);
}

TEST_CASE("decrypt of a missing file exits 1 with a diagnostic on stderr") {
    Fixture fx;
    auto r = run_cli({"decrypt", "missing.fw", "--keys", fx.keys_file.string()});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.find("missing.fw") != std::string::npos);
}

TEST_CASE("unknown subcommand and missing arguments are usage errors") {
    CHECK(run_cli({"bogus-sub"}).code == 2);
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"decrypt"}).code == 2); // missing required positional
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("trailing-byte warnings go to stderr and --log-level quiet silences them") {
    Fixture fx;
    Bytes padded = detail::read_file(fx.image_file);
    padded.insert(padded.end(), 64, 0xee);
    fs::path p = fx.dir.path() / "padded.im";
    detail::write_file(p, padded);

    auto r = run_cli({"inspect", p.string()});
    CHECK(r.code == 0);
    CHECK(r.err.find("trailing bytes") != std::string::npos);

    auto rq = run_cli({"inspect", p.string(), "--log-level", "quiet"});
    CHECK(rq.code == 0);
    CHECK(rq.err.empty());
    CHECK(rq.out == r.out);
}

TEST_CASE("keys validate and list work on both good and bad stores") {
    Fixture fx;
    auto r = run_cli({"keys", "validate", fx.keys_file.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("ok:") != std::string::npos);

    auto rl = run_cli({"keys", "list", fx.keys_file.string(), "--json"});
    CHECK(rl.code == 0);
    auto j = parse_json(rl.out);
    CHECK(j.is_array());
    CHECK(j.size() == 5);

    fs::path bad = fx.dir.path() / "bad.tsv";
    detail::write_file(bad, Bytes{'x', '\t', 'y', '\n'});
    CHECK(run_cli({"keys", "validate", bad.string()}).code == 1);
}

TEST_CASE("pack in plain and encrypted modes, with env keystore fallback") {
    Fixture fx;
    fs::path payload_file = fx.dir.path() / "payload.bin";
    detail::write_file(payload_file, fx.payload);

    fs::path packed = fx.dir.path() / "packed.im";
    auto r = run_cli({"pack", payload_file.string(), "--keys", fx.keys_file.string(), "--use",
                      "IAEK-2017-01", "--seed", "7", "--out", packed.string(), "--name", "cli"});
    CHECK(r.code == 0);
    CHECK(run_cli({"classify", packed.string()}).out == "encrypted-image\n");

    // FWFORGE_KEYS provides the store when --keys is absent
    ::setenv("FWFORGE_KEYS", fx.keys_file.string().c_str(), 1);
    fs::path packed2 = fx.dir.path() / "packed2.im";
    auto r2 = run_cli({"pack", payload_file.string(), "--use", "IAEK-2017-01", "--seed", "7",
                       "--out", packed2.string(), "--name", "cli"});
    ::unsetenv("FWFORGE_KEYS");
    CHECK(r2.code == 0);
    CHECK(detail::read_file(packed) == detail::read_file(packed2)); // same seed, same bytes

    fs::path plain_packed = fx.dir.path() / "plain2.im";
    auto r3 = run_cli({"pack", payload_file.string(), "--plain", "--seed", "0", "--out",
                       plain_packed.string()});
    CHECK(r3.code == 0);
    CHECK(run_cli({"classify", plain_packed.string()}).out == "signed-plain-file\n");

    // chunk plan via repeatable --chunk
    fs::path chunked = fx.dir.path() / "chunked.im";
    auto r4 = run_cli({"pack", payload_file.string(), "--plain", "--seed", "0", "--out",
                       chunked.string(), "--chunk", "AAAA:0:100", "--chunk", "BBBB:100:200"});
    CHECK(r4.code == 0);
    auto rj = run_cli({"inspect", chunked.string(), "--json"});
    CHECK(parse_json(rj.out)["block_count"] == 2);
}

TEST_CASE("batch emits a JSON report that adds up") {
    Fixture fx;
    testutil::TempDir corpus("clicorpus");
    testutil::TempDir out("clibatchout");
    auto store = testutil::make_test_store();
    const KeyRecord* key = store.find_version("RREK-2017-01");
    Rng rng(3);
    for (int i = 0; i < 4; ++i)
        detail::write_file(corpus.path() / ("f" + std::to_string(i) + ".im"),
                           pack_image(rng.bytes(64), "f", key, nullptr, {}, rng.next()));
    detail::write_file(corpus.path() / "junk.txt", Bytes{'j'});

    auto r = run_cli({"batch", corpus.path().string(), "--keys", fx.keys_file.string(), "--out",
                      out.path().string(), "--jobs", "3", "--json"});
    CHECK(r.code == 0);
    auto j = parse_json(r.out);
    CHECK(j["total_files"] == 5);
    CHECK(j["encrypted"] == 4);
    CHECK(j["decrypted"] == 4);
    CHECK(j["not_container"] == 1);
    CHECK(j["success_ratio"] == "100.00%");
    CHECK(j["per_identifier"]["RREK"]["succeeded"] == 4);
}

TEST_CASE("gen-corpus generates files and a manifest") {
    Fixture fx;
    testutil::TempDir out("cligen");
    fs::path spec = fx.dir.path() / "spec.json";
    const char* spec_text = R"({
        "seed": 7,
        "n_encrypted_known": 4,
        "n_encrypted_unknown": 1,
        "n_plain": 2,
        "n_garbage": 1,
        "payload_size_range": [32, 128],
        "chunk_count_range": [0, 2]
    })";
    detail::write_file(spec, Bytes(spec_text, spec_text + std::strlen(spec_text)));

    fs::path manifest_file = fx.dir.path() / "manifest.json";
    auto r = run_cli({"gen-corpus", "--spec", spec.string(), "--out", out.path().string(),
                      "--keys", fx.keys_file.string(), "--manifest", manifest_file.string()});
    CHECK(r.code == 0);
    auto j = parse_json(r.out);
    CHECK(j.is_array());
    CHECK(j.size() == 8);
    int with_key = 0;
    for (const auto& e : j)
        if (e.contains("key_version")) ++with_key;
    CHECK(with_key == 4);
    CHECK(parse_json(std::string(r.out)) ==
          parse_json([&] {
              Bytes b = detail::read_file(manifest_file);
              return std::string(b.begin(), b.end());
          }()));
}

TEST_CASE("deps and rootfs run the resolution pipeline end to end") {
    testutil::TempDir sys("clisys");
    testutil::TempDir dst("clidst");
    elfb::ElfSpec app;
    app.type = elfb::ET_EXEC;
    app.machine = elfb::EM_ARM;
    app.interp = "/system/bin/linker";
    app.needed = {"libc.so"};
    detail::write_file(sys.path() / "app", elfb::build_elf(app));
    elfb::ElfSpec lib;
    lib.type = elfb::ET_DYN;
    lib.entry = 0;
    detail::write_file(sys.path() / "lib" / "libc.so", elfb::build_elf(lib));

    auto r = run_cli({"deps", (sys.path() / "app").string(), "--sysroot", sys.path().string(),
                      "--json"});
    CHECK(r.code == 0);
    auto j = parse_json(r.out);
    CHECK(j["resolved"].contains("libc.so"));
    CHECK(j["missing"].empty());

    auto rs = run_cli({"rootfs", (sys.path() / "app").string(), "--sysroot", sys.path().string(),
                       "--out", dst.path().string(), "--apply", "--json"});
    CHECK(rs.code == 0);
    auto js = parse_json(rs.out);
    CHECK(js["applied"] == true);
    REQUIRE(js["notes"].size() == 1); // non-PIE ARM root
    CHECK(fs::exists(dst.path() / "lib" / "libc.so"));

    // unresolvable closure fails without --allow-missing
    elfb::ElfSpec broken = app;
    broken.needed = {"libnothere.so"};
    detail::write_file(sys.path() / "broken", elfb::build_elf(broken));
    auto rb = run_cli({"rootfs", (sys.path() / "broken").string(), "--sysroot",
                       sys.path().string(), "--out", dst.path().string()});
    CHECK(rb.code == 1);
    auto rb2 = run_cli({"rootfs", (sys.path() / "broken").string(), "--sysroot",
                        sys.path().string(), "--out", dst.path().string(), "--allow-missing"});
    CHECK(rb2.code == 0);
}

TEST_CASE("campaign plans and CSV emission") {
    testutil::TempDir dir("clicamp");
    auto r = run_cli({"campaign", "--profile", "name=drone,exec_us=18700,battery_min=30",
                      "--profile", "name=board,exec_us=4856", "--target", "200000", "--json"});
    CHECK(r.code == 0);
    auto j = parse_json(r.out);
    CHECK(j["plans"][0]["achievable_execs"] == 96256);
    CHECK(j["plans"][0]["feasible"] == false);
    CHECK(j["plans"][1]["achievable_execs"].is_null());
    CHECK(j["plans"][1]["feasible"] == true);
    CHECK(j["speedup_first_vs_second"] == doctest::Approx(3.85).epsilon(0.01));

    fs::path csv = dir.path() / "cycles.csv";
    auto rc = run_cli({"campaign", "--profile", "name=drone,exec_us=18700", "--target", "1000",
                       "--csv", csv.string()});
    CHECK(rc.code == 0);
    Bytes data = detail::read_file(csv);
    CHECK(std::string(data.begin(), data.end()).rfind("cycles,drone_wall_s", 0) == 0);

    CHECK(run_cli({"campaign", "--profile", "name=x", "--target", "5"}).code == 1); // no exec_us
}

TEST_CASE("fuzz-config emits the key=value document") {
    testutil::TempDir dir("clifuzz");
    fs::path bin = dir.path() / "bin";
    detail::write_file(bin, Bytes{0x7f, 'E', 'L', 'F'});
    fs::create_directories(dir.path() / "root");
    fs::create_directories(dir.path() / "corpus");

    auto r = run_cli({"fuzz-config", bin.string(), "--rootfs", (dir.path() / "root").string(),
                      "--corpus", (dir.path() / "corpus").string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("timeout_us=187000") != std::string::npos);

    auto rj = run_cli({"fuzz-config", bin.string(), "--rootfs", (dir.path() / "root").string(),
                       "--corpus", (dir.path() / "corpus").string(), "--json"});
    auto j = parse_json(rj.out);
    CHECK(j["timeout_us"] == "187000");

    auto rm = run_cli({"fuzz-config", bin.string(), "--rootfs",
                       (dir.path() / "gone").string(), "--corpus",
                       (dir.path() / "corpus").string()});
    CHECK(rm.code == 1);
}
