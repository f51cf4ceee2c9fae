// SPDX-License-Identifier: Apache-2.0
//
// Stage orchestration over a shared configuration and reproducibility
// manifest. Stages hand off through files under the work directory and
// write outputs atomically (temp-then-rename). The run manifest is fully
// deterministic: wall-clock timings go to the stage summaries and logs,
// never into manifest files.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace codesieve {

struct PipelineConfig {
    nlohmann::json raw; // effective config (file contents + overrides)
    std::filesystem::path config_dir;
    std::filesystem::path work_dir;
    std::filesystem::path corpus_manifest;
    std::optional<uint64_t> master_seed; // overrides the corpus manifest seed
    size_t workers = 1;

    // Validates every stage block against its documented parameters.
    static PipelineConfig load(const std::filesystem::path& config_path,
                               const std::vector<std::string>& overrides = {});
    static PipelineConfig from_json(nlohmann::json j,
                                    const std::filesystem::path& config_dir);

    std::string config_hash() const;
    std::filesystem::path resolve(const std::filesystem::path& p) const; // relative to config dir
};

struct StageSummary {
    std::string stage;
    std::map<std::string, uint64_t> counters;
    std::map<std::string, std::string> outputs; // path -> content hash
    uint64_t wall_ms = 0;

    std::string to_json_line() const;
};

// Known stage names, in canonical order.
const std::vector<std::string>& stage_names();
bool is_stage_name(const std::string& name);

// Execute exactly one stage; outputs and the run manifest are committed
// atomically. Throws ConfigError / DataError / UpstreamMissingError.
StageSummary run_stage(const PipelineConfig& config, const std::string& stage_name);

// Named stage DAGs. Each ablation recipe emits the artifact-side inputs for
// the corresponding study (datasets, schedules, annotator variants).
const std::vector<std::string>& recipe_names();
std::vector<StageSummary> run_recipe(const PipelineConfig& config, const std::string& recipe_name);

// Deterministic run manifest: config hash, per-stage input/output hashes and
// document/token counters, tool version.
nlohmann::json read_run_manifest(const std::filesystem::path& work_dir);

std::string tool_version();

// Streaming 128-bit content hash of a file, hex-encoded.
std::string hash_file(const std::filesystem::path& path);

// Write-to-temp-then-rename so an interrupted stage never leaves a partial
// file at the declared path. The writer receives the temp path.
void atomic_write(const std::filesystem::path& final_path,
                  const std::function<void(const std::filesystem::path&)>& writer);

} // namespace codesieve
