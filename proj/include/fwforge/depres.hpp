#pragma once

// ldd-style transitive NEEDED resolution and emulation-rootfs staging.
// Resolution is "find the file and copy it": each library name is matched by
// filename across the search roots, scanning lib/, usr/lib/, system/lib/ and
// the root top level, in that order. First match wins, so an earlier search
// root overrides a later one. RPATH/RUNPATH and symbol versioning are out of
// scope.

#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fwforge/bytes.hpp"
#include "fwforge/elf.hpp"

namespace fwforge {

class DepresError : public Error {
public:
    enum class Code {
        MissingDependencies,
        IoError,
    };

    DepresError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct DependencyClosure {
    std::string root;
    std::vector<std::filesystem::path> search_roots;
    std::map<std::string, std::string> resolved; // library name -> file path
    std::vector<std::string> missing;            // sorted, unique
    std::vector<std::pair<std::string, std::string>> edges; // (dependent path, library name)
    std::vector<std::string> warnings;           // unparseable libraries etc.
};

namespace detail {

inline const char* kLibrarySubpaths[] = {"lib", "usr/lib", "system/lib", "."};

inline std::optional<std::filesystem::path> find_library(
    const std::string& name, const std::vector<std::filesystem::path>& search_roots) {
    namespace fs = std::filesystem;
    for (const auto& root : search_roots) {
        for (const char* sub : kLibrarySubpaths) {
            fs::path candidate = std::string_view(sub) == "." ? root / name : root / sub / name;
            std::error_code ec;
            if (fs::is_regular_file(candidate, ec)) return candidate;
        }
    }
    return std::nullopt;
}

} // namespace detail

/// Breadth-first walk over NEEDED names starting from `root`. Already-seen
/// names are never revisited, so cyclic dependencies terminate.
inline DependencyClosure resolve_closure(const std::filesystem::path& root,
                                         const std::vector<std::filesystem::path>& search_roots) {
    DependencyClosure closure;
    closure.root = root.string();
    closure.search_roots = search_roots;

    ElfSummary root_summary = inspect_binary(detail::read_file(root), root.string());

    std::set<std::string> seen;     // names already resolved or known missing
    std::set<std::string> missing;
    std::deque<std::pair<std::string, std::vector<std::string>>> queue; // (path, needed)
    queue.emplace_back(root.string(), root_summary.needed);

    while (!queue.empty()) {
        auto [dependent, needed] = std::move(queue.front());
        queue.pop_front();
        for (const auto& name : needed) {
            closure.edges.emplace_back(dependent, name);
            if (!seen.insert(name).second) continue;
            auto found = detail::find_library(name, search_roots);
            if (!found) {
                missing.insert(name);
                continue;
            }
            closure.resolved[name] = found->string();
            try {
                ElfSummary lib = inspect_binary(detail::read_file(*found), found->string());
                queue.emplace_back(found->string(), lib.needed);
            } catch (const Error& e) {
                closure.warnings.push_back(name + ": " + e.what());
            }
        }
    }

    closure.missing.assign(missing.begin(), missing.end());
    return closure;
}

struct StagePlanEntry {
    std::string source;
    std::string destination;
};

struct StagingPlan {
    std::vector<StagePlanEntry> entries;
    std::vector<std::string> notes;
    std::vector<std::string> missing;
};

namespace detail {

/// Relative path of `p` under the first search root that contains it;
/// basename when it sits outside every root. Purely lexical: symlink names
/// are staged as-is so the staged tree keeps the original file names.
inline std::filesystem::path stage_relative(
    const std::filesystem::path& p, const std::vector<std::filesystem::path>& search_roots) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::path abs = fs::absolute(p, ec).lexically_normal();
    if (ec) abs = p.lexically_normal();
    for (const auto& root : search_roots) {
        fs::path abs_root = fs::absolute(root, ec).lexically_normal();
        if (ec) abs_root = root.lexically_normal();
        auto rel = abs.lexically_relative(abs_root);
        if (!rel.empty() && rel.native().rfind("..", 0) != 0) return rel;
    }
    return p.filename();
}

} // namespace detail

/// Copy plan that mirrors each resolved library's path under `dest`, so the
/// dynamic loader finds everything at its original location. The root binary
/// is part of the plan. A non-PIE executable root gets a runtime-compat note
/// (PIE became mandatory in Android 5.0).
inline StagingPlan stage_rootfs(const DependencyClosure& closure,
                                const std::vector<ElfSummary>& summaries,
                                const std::filesystem::path& dest,
                                bool allow_missing = false) {
    StagingPlan plan;
    plan.missing = closure.missing;
    if (!closure.missing.empty() && !allow_missing) {
        std::string names;
        for (const auto& m : closure.missing) names += (names.empty() ? "" : ", ") + m;
        throw DepresError(DepresError::Code::MissingDependencies,
                          "unresolved libraries: " + names);
    }

    const auto add = [&](const std::filesystem::path& src) {
        auto rel = detail::stage_relative(src, closure.search_roots);
        plan.entries.push_back({src.string(), (dest / rel).string()});
    };

    add(closure.root);
    for (const auto& [name, path] : closure.resolved) add(path);

    for (const auto& s : summaries) {
        if (s.path != closure.root) continue;
        if (s.elf_type == ElfType::Executable && !s.is_pie)
            plan.notes.push_back("non-PIE executable: requires pre-5.0 runtime");
    }
    return plan;
}

/// Executes the copy plan. Sequential so error reports are stable.
inline void apply_plan(const StagingPlan& plan) {
    namespace fs = std::filesystem;
    for (const auto& e : plan.entries) {
        std::error_code ec;
        fs::path dst(e.destination);
        if (dst.has_parent_path()) fs::create_directories(dst.parent_path(), ec);
        fs::copy_file(e.source, dst, fs::copy_options::overwrite_existing, ec);
        if (ec)
            throw DepresError(DepresError::Code::IoError,
                              "copy " + e.source + " -> " + e.destination + ": " + ec.message());
    }
}

} // namespace fwforge
