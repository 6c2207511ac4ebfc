#pragma once

// Fuzzing-campaign economics: per-test-case execution time against a battery
// budget. The battery model is linear (constant energy per exec). Config
// emission wraps an external fuzzer invocation; the per-exec timeout is a
// 10x safety factor over the profile's execution time.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fwforge/bytes.hpp"

namespace fwforge {

class CampaignError : public Error {
public:
    enum class Code {
        MissingPath,
        BadProfile,
    };

    CampaignError(Code code, const std::string& msg) : Error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

struct ExecutionProfile {
    std::string name;
    double exec_time_us = 1.0;                   // microseconds per test case
    std::optional<double> power_budget_min;      // minutes of battery; none = unlimited
    std::optional<std::uint64_t> memory_mb;
};

inline constexpr std::uint64_t kUnboundedExecs = UINT64_MAX;

struct CampaignPlan {
    ExecutionProfile profile;
    std::uint64_t target_execs = 0;
    std::uint64_t achievable_execs = 0; // kUnboundedExecs when no budget
    double wall_time_s = 0.0;           // for min(target, achievable)
    bool feasible = false;
};

inline double speedup(const ExecutionProfile& a, const ExecutionProfile& b) {
    return a.exec_time_us / b.exec_time_us;
}

inline CampaignPlan plan_campaign(const ExecutionProfile& p, std::uint64_t target_execs) {
    CampaignPlan plan;
    plan.profile = p;
    plan.target_execs = target_execs;
    if (p.power_budget_min) {
        plan.achievable_execs = static_cast<std::uint64_t>(
            std::floor(*p.power_budget_min * 60.0 * 1e6 / p.exec_time_us));
    } else {
        plan.achievable_execs = kUnboundedExecs;
    }
    plan.feasible = plan.achievable_execs >= target_execs;
    const std::uint64_t runnable = std::min(target_execs, plan.achievable_execs);
    plan.wall_time_s = static_cast<double>(runnable) * p.exec_time_us / 1e6;
    return plan;
}

/// key=value run configuration for an external fuzzer plus a shell-agnostic
/// command template. Byte-stable for fixed inputs.
inline std::string emit_fuzz_config(const std::filesystem::path& target_binary,
                                    const std::filesystem::path& rootfs,
                                    const std::filesystem::path& corpus_dir,
                                    const ExecutionProfile& profile) {
    namespace fs = std::filesystem;
    const auto require = [](const fs::path& p, const char* what) {
        std::error_code ec;
        if (!fs::exists(p, ec))
            throw CampaignError(CampaignError::Code::MissingPath,
                                std::string(what) + " does not exist: " + p.string());
    };
    require(target_binary, "target binary");
    require(rootfs, "rootfs");
    require(corpus_dir, "corpus directory");

    const std::uint64_t timeout_us =
        static_cast<std::uint64_t>(std::llround(profile.exec_time_us * 10.0));
    char exec_buf[64];
    std::snprintf(exec_buf, sizeof(exec_buf), "%.0f", profile.exec_time_us);

    std::string out;
    out += "target=" + target_binary.string() + "\n";
    out += "rootfs=" + rootfs.string() + "\n";
    out += "corpus=" + corpus_dir.string() + "\n";
    out += "profile=" + profile.name + "\n";
    out += "exec_time_us=" + std::string(exec_buf) + "\n";
    out += "timeout_us=" + std::to_string(timeout_us) + "\n";
    out += "command={fuzzer} -i {corpus} -o {findings} -t " +
           std::to_string(timeout_us / 1000) + " -- {target} @@\n";
    return out;
}

/// Wall time against test-case cycle count for each profile, as CSV. Rows
/// are `steps` evenly spaced cycle counts up to max_cycles inclusive.
inline std::string cycles_csv(const std::vector<ExecutionProfile>& profiles,
                              std::uint64_t max_cycles, unsigned steps = 20) {
    std::string out = "cycles";
    for (const auto& p : profiles) out += "," + p.name + "_wall_s";
    out += "\n";
    if (steps == 0) steps = 1;
    for (unsigned i = 1; i <= steps; ++i) {
        const std::uint64_t cycles =
            static_cast<std::uint64_t>(static_cast<double>(max_cycles) * i / steps);
        out += std::to_string(cycles);
        for (const auto& p : profiles) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.3f",
                          static_cast<double>(cycles) * p.exec_time_us / 1e6);
            out += ",";
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace fwforge
