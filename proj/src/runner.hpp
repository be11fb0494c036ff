#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace ps {

inline constexpr const char* kVersion = "1.0.0";

struct RunOptions {
    std::optional<Task> task;            // subcommand; wins over the config task with a warning
    std::optional<std::string> out_dir;  // wins over PROBESCOPE_OUT and output_dir
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;  // "a.b=value", applied in order before validation
};

struct RunResult {
    std::string output_dir;
    std::string config_hash;
    std::vector<std::string> files;  // data files, relative to output_dir (manifest excluded)
    nlohmann::json summary;          // task report, same content as the task's JSON file
};

/// Applies options, validates, runs the task and writes artifacts plus manifest.json.
/// Library errors propagate with their exit codes after a failure manifest is written.
RunResult run_experiment(const nlohmann::json& config, const RunOptions& opts = {});
RunResult run_config_file(const std::string& path, const RunOptions& opts = {});

/// Effective configuration after overrides and CLI options, validated.
ExperimentConfig resolve_config(const nlohmann::json& config, const RunOptions& opts);

}  // namespace ps
