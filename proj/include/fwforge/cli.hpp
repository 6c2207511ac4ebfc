#pragma once

// fwforge command line. One subcommand per pipeline stage so stages can be
// scripted and cached independently:
//   inspect -> decrypt/batch -> deps -> rootfs -> campaign/fuzz-config
// plus the oracle side (pack, gen-corpus) and keystore helpers.
//
// Exit codes: 0 success, 1 operational failure, 2 usage error.
// stdout carries data; stderr carries diagnostics. Every subcommand accepts
// --json and then emits exactly one JSON document on stdout.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fwforge/fwforge.hpp"

namespace fwforge::cli {

using nlohmann::json;

struct GlobalConfig {
    std::string keystore_path; // --keys or FWFORGE_KEYS
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string log_level = "info"; // info | quiet
    bool quiet() const { return log_level == "quiet"; }
};

namespace detail {

inline json header_to_json(const FirmwareHeader& h) {
    json chunks = json::array();
    for (const auto& c : h.chunks) {
        chunks.push_back({{"name", tag_str(c.name)},
                          {"start_offset", c.start_offset},
                          {"output_size", c.output_size},
                          {"attributes", c.attributes}});
    }
    return json{{"magic", tag_str(h.magic)},
                {"format_version", h.format_version},
                {"reserved_a", to_hex(h.reserved_a)},
                {"header_size", h.header_size},
                {"rsa_sig_size", h.rsa_sig_size},
                {"payload_size", h.payload_size},
                {"reserved_b", to_hex(h.reserved_b)},
                {"reserved_c", to_hex(h.reserved_c)},
                {"auth_key_id", tag_str(h.auth_key_id)},
                {"enc_key_id", tag_str(h.enc_key_id)},
                {"scramble_key", to_hex(h.scramble_key)},
                {"image_name", h.image_name_str()},
                {"reserved_d", to_hex(h.reserved_d)},
                {"reserved_e", to_hex(h.reserved_e)},
                {"block_count", h.block_count},
                {"payload_digest", to_hex(h.payload_digest)},
                {"chunks", chunks}};
}

inline json report_to_json(const CorpusReport& r) {
    json per_id = json::object();
    for (const auto& [id, stats] : r.per_identifier)
        per_id[id] = {{"tried", stats.tried}, {"succeeded", stats.succeeded}};
    json io_errors = json::array();
    for (const auto& [path, msg] : r.io_errors)
        io_errors.push_back({{"path", path}, {"error", msg}});
    return json{{"total_files", r.total_files},
                {"encrypted", r.encrypted},
                {"decrypted", r.decrypted},
                {"passthrough", r.passthrough},
                {"failed_no_key", r.failed_no_key},
                {"failed_all_keys", r.failed_all_keys},
                {"not_container", r.not_container},
                {"success_ratio", r.success_ratio()},
                {"per_identifier", per_id},
                {"io_errors", io_errors}};
}

inline json outcome_to_json(const DecryptOutcome& o) {
    json j{{"input_path", o.input_path},
           {"kind", file_kind_str(o.kind)},
           {"status", decrypt_status_str(o.status)},
           {"attempts", o.attempts}};
    if (o.status == DecryptStatus::Decrypted) j["version_label"] = o.version_label;
    if (o.status == DecryptStatus::ParseError) j["detail"] = o.detail;
    if (o.payload_out) j["payload_bytes"] = o.payload_out->size();
    return j;
}

inline json closure_to_json(const DependencyClosure& c) {
    json resolved = json::object();
    for (const auto& [name, path] : c.resolved) resolved[name] = path;
    json edges = json::array();
    for (const auto& [from, name] : c.edges) edges.push_back({from, name});
    return json{{"root", c.root},
                {"resolved", resolved},
                {"missing", c.missing},
                {"edges", edges},
                {"warnings", c.warnings}};
}

inline json plan_to_json(const CampaignPlan& p) {
    json prof{{"name", p.profile.name}, {"exec_time_us", p.profile.exec_time_us}};
    if (p.profile.power_budget_min) prof["power_budget_min"] = *p.profile.power_budget_min;
    if (p.profile.memory_mb) prof["memory_mb"] = *p.profile.memory_mb;
    json j{{"profile", prof},
           {"target_execs", p.target_execs},
           {"feasible", p.feasible},
           {"wall_time_s", p.wall_time_s}};
    if (p.achievable_execs == kUnboundedExecs)
        j["achievable_execs"] = nullptr; // unlimited budget
    else
        j["achievable_execs"] = p.achievable_execs;
    return j;
}

/// "name=drone,exec_us=18700,battery_min=30,memory_mb=512"
inline ExecutionProfile parse_profile(const std::string& spec) {
    ExecutionProfile p;
    bool have_exec = false;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw CampaignError(CampaignError::Code::BadProfile,
                                "profile item without '=': " + item);
        std::string key = item.substr(0, eq);
        std::string value = item.substr(eq + 1);
        try {
            if (key == "name") p.name = value;
            else if (key == "exec_us") { p.exec_time_us = std::stod(value); have_exec = true; }
            else if (key == "battery_min") p.power_budget_min = std::stod(value);
            else if (key == "memory_mb") p.memory_mb = std::stoull(value);
            else
                throw CampaignError(CampaignError::Code::BadProfile,
                                    "unknown profile key: " + key);
        } catch (const std::invalid_argument&) {
            throw CampaignError(CampaignError::Code::BadProfile,
                                "bad number in profile item: " + item);
        } catch (const std::out_of_range&) {
            throw CampaignError(CampaignError::Code::BadProfile,
                                "number out of range in profile item: " + item);
        }
    }
    if (!have_exec || p.exec_time_us <= 0)
        throw CampaignError(CampaignError::Code::BadProfile,
                            "profile needs exec_us > 0: " + spec);
    if (p.power_budget_min && *p.power_budget_min <= 0)
        throw CampaignError(CampaignError::Code::BadProfile,
                            "battery_min must be positive: " + spec);
    if (p.name.empty()) p.name = "profile";
    return p;
}

inline KeyStore require_keystore(const std::string& path) {
    if (path.empty())
        throw KeystoreError(KeystoreError::Code::IoError,
                            "no keystore given; use --keys or set FWFORGE_KEYS");
    return load_keystore_file(path);
}

inline std::vector<ChunkEntry> parse_chunk_specs(const std::vector<std::string>& specs) {
    std::vector<ChunkEntry> plan;
    for (const auto& s : specs) {
        // name:start:size
        auto c1 = s.find(':');
        auto c2 = s.find(':', c1 == std::string::npos ? std::string::npos : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw Error("bad --chunk spec (want name:start:size): " + s);
        ChunkEntry e;
        std::string name = s.substr(0, c1);
        if (name.size() > 4) throw Error("chunk name longer than 4 bytes: " + name);
        e.name = make_tag(name);
        e.start_offset = static_cast<std::uint32_t>(std::stoul(s.substr(c1 + 1, c2 - c1 - 1)));
        e.output_size = static_cast<std::uint32_t>(std::stoul(s.substr(c2 + 1)));
        plan.push_back(e);
    }
    return plan;
}

} // namespace detail

/// Entry point shared by the binary and the test suite.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace detail;

    CLI::App app{"fwforge - firmware container and analysis pipeline toolkit"};
    app.require_subcommand(1);

    GlobalConfig cfg;
    if (const char* env = std::getenv("FWFORGE_KEYS")) cfg.keystore_path = env;
    app.add_option("--log-level", cfg.log_level, "info or quiet (quiet hides warnings)")
        ->check(CLI::IsMember({"info", "quiet"}));

    // ---- inspect ----------------------------------------------------------
    struct {
        std::string file;
        bool json = false;
    } inspect_opts;
    auto* sc_inspect = app.add_subcommand("inspect", "Print container header fields");
    sc_inspect->add_option("file", inspect_opts.file, "container file")->required();
    sc_inspect->add_flag("--json", inspect_opts.json, "emit JSON");

    // ---- classify ---------------------------------------------------------
    struct {
        std::string file;
        bool json = false;
    } classify_opts;
    auto* sc_classify = app.add_subcommand("classify", "Classify a file (encrypted/plain/other)");
    sc_classify->add_option("file", classify_opts.file, "input file")->required();
    sc_classify->add_flag("--json", classify_opts.json, "emit JSON");

    // ---- keys -------------------------------------------------------------
    struct {
        std::string file;
        bool json = false;
    } keys_opts;
    auto* sc_keys = app.add_subcommand("keys", "Keystore utilities");
    sc_keys->require_subcommand(1);
    auto* sc_keys_validate = sc_keys->add_subcommand("validate", "Check a keystore file");
    sc_keys_validate->add_option("file", keys_opts.file, "keystore file")->required();
    sc_keys_validate->add_flag("--json", keys_opts.json, "emit JSON");
    auto* sc_keys_list = sc_keys->add_subcommand("list", "List keystore records");
    sc_keys_list->add_option("file", keys_opts.file, "keystore file")->required();
    sc_keys_list->add_flag("--json", keys_opts.json, "emit JSON");

    // ---- decrypt ----------------------------------------------------------
    struct {
        std::string file;
        std::string out_dir;
        bool json = false;
    } decrypt_opts;
    auto* sc_decrypt = app.add_subcommand("decrypt", "Trial-decrypt one container");
    sc_decrypt->add_option("file", decrypt_opts.file, "container file")->required();
    sc_decrypt->add_option("--keys", cfg.keystore_path, "keystore file (or FWFORGE_KEYS)");
    sc_decrypt->add_option("--out", decrypt_opts.out_dir, "output directory (default: input's)");
    sc_decrypt->add_flag("--json", decrypt_opts.json, "emit JSON");

    // ---- batch ------------------------------------------------------------
    struct {
        std::string dir;
        std::string out_dir;
        bool json = false;
    } batch_opts;
    auto* sc_batch = app.add_subcommand("batch", "Decrypt a whole corpus directory");
    sc_batch->add_option("dir", batch_opts.dir, "corpus directory")->required();
    sc_batch->add_option("--keys", cfg.keystore_path, "keystore file (or FWFORGE_KEYS)");
    sc_batch->add_option("--out", batch_opts.out_dir, "output directory")->required();
    sc_batch->add_option("--jobs", cfg.jobs, "worker count");
    sc_batch->add_flag("--json", batch_opts.json, "emit JSON report");

    // ---- pack -------------------------------------------------------------
    struct {
        std::string payload;
        std::string use_label;
        bool plain = false;
        std::string sign_pem;
        std::string auth_id = "PRAK";
        std::string image_name = "IMAGE";
        std::vector<std::string> chunks;
        std::uint64_t seed = 0;
        std::string out_file;
        bool json = false;
    } pack_opts;
    auto* sc_pack = app.add_subcommand("pack", "Build a container from a payload");
    sc_pack->add_option("payload", pack_opts.payload, "payload file")->required();
    sc_pack->add_option("--keys", cfg.keystore_path, "keystore file (or FWFORGE_KEYS)");
    auto* use_opt = sc_pack->add_option("--use", pack_opts.use_label,
                                        "version label of the encryption key");
    auto* plain_opt = sc_pack->add_flag("--plain", pack_opts.plain, "no encryption");
    use_opt->excludes(plain_opt);
    sc_pack->add_option("--sign", pack_opts.sign_pem, "RSA private key PEM for signing");
    sc_pack->add_option("--auth-id", pack_opts.auth_id, "auth key identifier (default PRAK)");
    sc_pack->add_option("--name", pack_opts.image_name, "image name (max 32 chars)");
    sc_pack->add_option("--chunk", pack_opts.chunks, "chunk entry name:start:size (repeatable)");
    sc_pack->add_option("--seed", pack_opts.seed, "image key seed")->required();
    sc_pack->add_option("--out", pack_opts.out_file, "output file (default <payload>.im)");
    sc_pack->add_flag("--json", pack_opts.json, "emit JSON");

    // ---- gen-corpus -------------------------------------------------------
    struct {
        std::string spec_file;
        std::string out_dir;
        std::string manifest_file;
        bool json = false;
    } gen_opts;
    auto* sc_gen = app.add_subcommand("gen-corpus", "Generate a synthetic test corpus");
    sc_gen->add_option("--spec", gen_opts.spec_file, "corpus spec JSON")->required();
    sc_gen->add_option("--out", gen_opts.out_dir, "corpus output directory")->required();
    sc_gen->add_option("--keys", cfg.keystore_path, "keystore file (or FWFORGE_KEYS)");
    sc_gen->add_option("--manifest", gen_opts.manifest_file,
                       "also write the manifest JSON to this file");
    sc_gen->add_flag("--json", gen_opts.json, "emit the manifest as JSON (default)");

    // ---- deps -------------------------------------------------------------
    struct {
        std::string binary;
        std::vector<std::string> sysroots;
        bool json = false;
    } deps_opts;
    auto* sc_deps = app.add_subcommand("deps", "Resolve the shared-library closure");
    sc_deps->add_option("binary", deps_opts.binary, "ELF binary")->required();
    sc_deps->add_option("--sysroot", deps_opts.sysroots, "search root (repeatable)")->required();
    sc_deps->add_flag("--json", deps_opts.json, "emit JSON");

    // ---- rootfs -----------------------------------------------------------
    struct {
        std::string binary;
        std::vector<std::string> sysroots;
        std::string out_dir;
        bool apply = false;
        bool allow_missing = false;
        bool json = false;
    } rootfs_opts;
    auto* sc_rootfs = app.add_subcommand("rootfs", "Stage binary + closure into a root tree");
    sc_rootfs->add_option("binary", rootfs_opts.binary, "ELF binary")->required();
    sc_rootfs->add_option("--sysroot", rootfs_opts.sysroots, "search root (repeatable)")
        ->required();
    sc_rootfs->add_option("--out", rootfs_opts.out_dir, "destination directory")->required();
    sc_rootfs->add_flag("--apply", rootfs_opts.apply, "execute the copy plan");
    sc_rootfs->add_flag("--allow-missing", rootfs_opts.allow_missing,
                        "plan even with unresolved libraries");
    sc_rootfs->add_flag("--json", rootfs_opts.json, "emit JSON");

    // ---- campaign ---------------------------------------------------------
    struct {
        std::vector<std::string> profiles;
        std::uint64_t target = 0;
        std::string csv_file;
        bool json = false;
    } campaign_opts;
    auto* sc_campaign = app.add_subcommand("campaign", "Plan a fuzzing campaign");
    sc_campaign
        ->add_option("--profile", campaign_opts.profiles,
                     "profile spec name=...,exec_us=...[,battery_min=...][,memory_mb=...]")
        ->required();
    sc_campaign->add_option("--target", campaign_opts.target, "target executions")->required();
    sc_campaign->add_option("--csv", campaign_opts.csv_file, "write wall-time-vs-cycles CSV");
    sc_campaign->add_flag("--json", campaign_opts.json, "emit JSON");

    // ---- fuzz-config ------------------------------------------------------
    struct {
        std::string binary;
        std::string rootfs;
        std::string corpus;
        std::string profile = "name=drone-body,exec_us=18700";
        std::string out_file;
        bool json = false;
    } fuzz_opts;
    auto* sc_fuzz = app.add_subcommand("fuzz-config", "Emit run config for an external fuzzer");
    sc_fuzz->add_option("binary", fuzz_opts.binary, "target binary")->required();
    sc_fuzz->add_option("--rootfs", fuzz_opts.rootfs, "staged root tree")->required();
    sc_fuzz->add_option("--corpus", fuzz_opts.corpus, "seed corpus directory")->required();
    sc_fuzz->add_option("--profile", fuzz_opts.profile, "execution profile spec");
    sc_fuzz->add_option("--out", fuzz_opts.out_file, "write config to file");
    sc_fuzz->add_flag("--json", fuzz_opts.json, "emit JSON");

    // ---- parse ------------------------------------------------------------
    // global options may appear after the subcommand name
    for (auto* sc : app.get_subcommands([](const CLI::App*) { return true; })) {
        sc->fallthrough();
        for (auto* nested : sc->get_subcommands([](const CLI::App*) { return true; }))
            nested->fallthrough();
    }

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        // help requests exit 0; anything else is a usage error
        int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*sc_inspect) {
            Bytes data = fwforge::detail::read_file(inspect_opts.file);
            FirmwareContainer c = parse_container(data);
            const std::uint64_t declared = c.header.total_size();
            if (declared < data.size() && !cfg.quiet())
                err << "warning: " << (data.size() - declared)
                    << " trailing bytes after declared container size\n";
            if (inspect_opts.json) {
                json j = header_to_json(c.header);
                j["kind"] = file_kind_str(c.header.is_encrypted() ? FileKind::EncryptedImage
                                                                  : FileKind::SignedPlainFile);
                j["trailing_bytes"] = data.size() - declared;
                out << j.dump(2) << "\n";
            } else {
                const FirmwareHeader& h = c.header;
                out << "magic            " << tag_str(h.magic) << "\n";
                out << "format_version   " << h.format_version << "\n";
                out << "unknown_a        " << to_hex(h.reserved_a) << "\n";
                out << "header_size      " << h.header_size << "\n";
                out << "rsa_sig_size     " << h.rsa_sig_size << "\n";
                out << "payload_size     " << h.payload_size << "\n";
                out << "unknown_b        " << to_hex(h.reserved_b) << "\n";
                out << "unknown_c        " << to_hex(h.reserved_c) << "\n";
                out << "auth_key_id      " << tag_str(h.auth_key_id) << "\n";
                out << "enc_key_id       "
                    << (h.is_encrypted() ? tag_str(h.enc_key_id) : "(none: plain file)") << "\n";
                out << "scramble_key     " << to_hex(h.scramble_key) << "\n";
                out << "image_name       " << h.image_name_str() << "\n";
                out << "unknown_d        " << to_hex(h.reserved_d) << "\n";
                out << "unknown_e        " << to_hex(h.reserved_e) << "\n";
                out << "block_count      " << h.block_count << "\n";
                out << "payload_digest   " << to_hex(h.payload_digest) << "\n";
                for (const auto& ch : h.chunks)
                    out << "chunk " << tag_str(ch.name) << "  start=" << ch.start_offset
                        << " size=" << ch.output_size << " attrs=0x" << std::hex << ch.attributes
                        << std::dec << "\n";
            }
            return 0;
        }

        if (*sc_classify) {
            Bytes data = fwforge::detail::read_file(classify_opts.file);
            FileKind kind = classify_file(data);
            if (classify_opts.json)
                out << json{{"path", classify_opts.file}, {"kind", file_kind_str(kind)}}.dump(2)
                    << "\n";
            else
                out << file_kind_str(kind) << "\n";
            return 0;
        }

        if (*sc_keys_validate) {
            try {
                KeyStore store = load_keystore_file(keys_opts.file);
                std::set<std::string> ids;
                for (const auto& r : store.records()) ids.insert(tag_str(r.identifier));
                if (keys_opts.json)
                    out << json{{"valid", true},
                                {"records", store.size()},
                                {"identifiers", ids.size()}}
                               .dump(2)
                        << "\n";
                else
                    out << "ok: " << store.size() << " records, " << ids.size()
                        << " identifiers\n";
                return 0;
            } catch (const KeystoreError& e) {
                if (keys_opts.json) {
                    out << json{{"valid", false}, {"error", e.what()}}.dump(2) << "\n";
                } else {
                    err << "invalid keystore: " << e.what() << "\n";
                }
                return 1;
            }
        }

        if (*sc_keys_list) {
            KeyStore store = load_keystore_file(keys_opts.file);
            if (keys_opts.json) {
                json arr = json::array();
                for (const auto& r : store.records())
                    arr.push_back({{"identifier", tag_str(r.identifier)},
                                   {"version_label", r.version_label},
                                   {"role", key_role_str(r.role)},
                                   {"material_bytes", r.material.size()}});
                out << arr.dump(2) << "\n";
            } else {
                for (const auto& r : store.records())
                    out << tag_str(r.identifier) << "  " << r.version_label << "  "
                        << key_role_str(r.role) << "  " << r.material.size() << " bytes\n";
            }
            return 0;
        }

        if (*sc_decrypt) {
            KeyStore store = require_keystore(cfg.keystore_path);
            namespace fs = std::filesystem;
            fs::path in_path = decrypt_opts.file;
            fs::path out_dir = decrypt_opts.out_dir.empty()
                                   ? (in_path.has_parent_path() ? in_path.parent_path()
                                                                : fs::path("."))
                                   : fs::path(decrypt_opts.out_dir);
            Tag4 enc_id{};
            DecryptOutcome o = fwforge::detail::process_corpus_file(
                in_path, in_path.filename(), store, out_dir, &enc_id);
            if (decrypt_opts.json)
                out << outcome_to_json(o).dump(2) << "\n";
            else {
                out << decrypt_status_str(o.status);
                if (o.status == DecryptStatus::Decrypted)
                    out << " with " << o.version_label << " after " << o.attempts
                        << " attempt(s)";
                if (o.status == DecryptStatus::ParseError) out << ": " << o.detail;
                out << "\n";
            }
            return o.succeeded() ? 0 : 1;
        }

        if (*sc_batch) {
            KeyStore store = require_keystore(cfg.keystore_path);
            if (cfg.jobs < 1) cfg.jobs = 1;
            CorpusReport rep =
                batch_decrypt(batch_opts.dir, store, batch_opts.out_dir, cfg.jobs);
            if (batch_opts.json) {
                out << report_to_json(rep).dump(2) << "\n";
            } else {
                out << "total files      " << rep.total_files << "\n";
                out << "encrypted        " << rep.encrypted << "\n";
                out << "  decrypted      " << rep.decrypted << "\n";
                out << "  no key         " << rep.failed_no_key << "\n";
                out << "  all keys fail  " << rep.failed_all_keys << "\n";
                out << "plain passthru   " << rep.passthrough << "\n";
                out << "not containers   " << rep.not_container << "\n";
                out << "success ratio    " << rep.success_ratio() << "\n";
                for (const auto& [id, st] : rep.per_identifier)
                    out << "  id " << id << "  tried=" << st.tried
                        << " succeeded=" << st.succeeded << "\n";
                if (!cfg.quiet())
                    for (const auto& [path, msg] : rep.io_errors)
                        err << "io error: " << path << ": " << msg << "\n";
            }
            return 0;
        }

        if (*sc_pack) {
            Bytes payload = fwforge::detail::read_file(pack_opts.payload);
            const KeyRecord* enc_key = nullptr;
            KeyStore store;
            if (!pack_opts.plain) {
                if (pack_opts.use_label.empty())
                    throw Error("pack needs --use <version_label> or --plain");
                store = require_keystore(cfg.keystore_path);
                enc_key = store.find_version(pack_opts.use_label);
                if (!enc_key)
                    throw Error("version label not in keystore: " + pack_opts.use_label);
            }
            std::optional<SigningKey> signer;
            if (!pack_opts.sign_pem.empty()) {
                Bytes pem = fwforge::detail::read_file(pack_opts.sign_pem);
                signer = SigningKey{make_tag(pack_opts.auth_id),
                                    std::string(pem.begin(), pem.end())};
            }
            auto plan = parse_chunk_specs(pack_opts.chunks);
            Bytes image = pack_image(payload, pack_opts.image_name, enc_key,
                                     signer ? &*signer : nullptr, plan, pack_opts.seed);
            std::string out_file = pack_opts.out_file.empty() ? pack_opts.payload + ".im"
                                                              : pack_opts.out_file;
            fwforge::detail::write_file(out_file, image);
            if (pack_opts.json)
                out << json{{"output", out_file},
                            {"bytes", image.size()},
                            {"encrypted", enc_key != nullptr},
                            {"signed", signer.has_value()}}
                           .dump(2)
                    << "\n";
            else
                out << "wrote " << out_file << " (" << image.size() << " bytes)\n";
            return 0;
        }

        if (*sc_gen) {
            Bytes spec_bytes = fwforge::detail::read_file(gen_opts.spec_file);
            json spec_json = json::parse(spec_bytes.begin(), spec_bytes.end());
            CorpusSpec spec;
            spec.seed = spec_json.value("seed", 0ull);
            spec.n_encrypted_known = spec_json.value("n_encrypted_known", 0u);
            spec.n_encrypted_unknown = spec_json.value("n_encrypted_unknown", 0u);
            spec.n_plain = spec_json.value("n_plain", 0u);
            spec.n_garbage = spec_json.value("n_garbage", 0u);
            if (spec_json.contains("payload_size_range"))
                spec.payload_size_range = {spec_json["payload_size_range"][0],
                                           spec_json["payload_size_range"][1]};
            if (spec_json.contains("chunk_count_range"))
                spec.chunk_count_range = {spec_json["chunk_count_range"][0],
                                          spec_json["chunk_count_range"][1]};
            KeyStore store;
            if (spec.n_encrypted_known > 0) store = require_keystore(cfg.keystore_path);
            Manifest manifest = generate_corpus(spec, store, gen_opts.out_dir);
            json arr = json::array();
            for (const auto& e : manifest) {
                json j{{"path", e.path}, {"kind", e.kind}};
                if (e.key_version) j["key_version"] = *e.key_version;
                arr.push_back(j);
            }
            std::string dumped = arr.dump(2) + "\n";
            if (!gen_opts.manifest_file.empty())
                fwforge::detail::write_file(
                    gen_opts.manifest_file,
                    Bytes(dumped.begin(), dumped.end()));
            out << dumped;
            return 0;
        }

        if (*sc_deps) {
            std::vector<std::filesystem::path> roots(deps_opts.sysroots.begin(),
                                                     deps_opts.sysroots.end());
            DependencyClosure c = resolve_closure(deps_opts.binary, roots);
            if (deps_opts.json) {
                out << closure_to_json(c).dump(2) << "\n";
            } else {
                out << c.root << "\n";
                for (const auto& [name, path] : c.resolved)
                    out << "  " << name << " => " << path << "\n";
                for (const auto& name : c.missing) out << "  " << name << " => not found\n";
                if (!cfg.quiet())
                    for (const auto& w : c.warnings) err << "warning: " << w << "\n";
            }
            return 0;
        }

        if (*sc_rootfs) {
            std::vector<std::filesystem::path> roots(rootfs_opts.sysroots.begin(),
                                                     rootfs_opts.sysroots.end());
            DependencyClosure c = resolve_closure(rootfs_opts.binary, roots);
            std::vector<ElfSummary> summaries{
                inspect_binary(fwforge::detail::read_file(rootfs_opts.binary),
                               rootfs_opts.binary)};
            StagingPlan plan =
                stage_rootfs(c, summaries, rootfs_opts.out_dir, rootfs_opts.allow_missing);
            if (rootfs_opts.apply) apply_plan(plan);
            if (rootfs_opts.json) {
                json entries = json::array();
                for (const auto& e : plan.entries)
                    entries.push_back({{"source", e.source}, {"destination", e.destination}});
                out << json{{"entries", entries},
                            {"notes", plan.notes},
                            {"missing", plan.missing},
                            {"applied", rootfs_opts.apply}}
                           .dump(2)
                    << "\n";
            } else {
                for (const auto& e : plan.entries)
                    out << e.source << " -> " << e.destination << "\n";
                for (const auto& n : plan.notes) out << "note: " << n << "\n";
                for (const auto& m : plan.missing) out << "missing: " << m << "\n";
            }
            return 0;
        }

        if (*sc_campaign) {
            std::vector<ExecutionProfile> profiles;
            for (const auto& s : campaign_opts.profiles) profiles.push_back(parse_profile(s));
            std::vector<CampaignPlan> plans;
            for (const auto& p : profiles) plans.push_back(plan_campaign(p, campaign_opts.target));
            if (!campaign_opts.csv_file.empty()) {
                std::string csv = cycles_csv(profiles, campaign_opts.target);
                fwforge::detail::write_file(campaign_opts.csv_file,
                                            Bytes(csv.begin(), csv.end()));
            }
            if (campaign_opts.json) {
                json arr = json::array();
                for (const auto& p : plans) arr.push_back(plan_to_json(p));
                json j{{"plans", arr}};
                if (plans.size() >= 2)
                    j["speedup_first_vs_second"] = speedup(profiles[0], profiles[1]);
                out << j.dump(2) << "\n";
            } else {
                for (const auto& p : plans) {
                    out << p.profile.name << ": target=" << p.target_execs << " achievable=";
                    if (p.achievable_execs == kUnboundedExecs)
                        out << "unlimited";
                    else
                        out << p.achievable_execs;
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.3f", p.wall_time_s);
                    out << " wall_s=" << buf << (p.feasible ? " feasible" : " infeasible")
                        << "\n";
                }
                if (plans.size() >= 2) {
                    char buf[64];
                    std::snprintf(buf, sizeof(buf), "%.2f", speedup(profiles[0], profiles[1]));
                    out << "speedup " << profiles[0].name << " vs " << profiles[1].name << ": "
                        << buf << "x\n";
                }
            }
            return 0;
        }

        if (*sc_fuzz) {
            ExecutionProfile profile = parse_profile(fuzz_opts.profile);
            std::string config =
                emit_fuzz_config(fuzz_opts.binary, fuzz_opts.rootfs, fuzz_opts.corpus, profile);
            if (!fuzz_opts.out_file.empty())
                fwforge::detail::write_file(fuzz_opts.out_file,
                                            Bytes(config.begin(), config.end()));
            if (fuzz_opts.json) {
                json j = json::object();
                std::istringstream in(config);
                std::string line;
                while (std::getline(in, line)) {
                    auto eq = line.find('=');
                    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 1);
                }
                out << j.dump(2) << "\n";
            } else {
                out << config;
            }
            return 0;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    err << "no subcommand selected\n";
    return 2;
}

} // namespace fwforge::cli
