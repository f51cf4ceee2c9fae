// SPDX-License-Identifier: Apache-2.0
//
// Turns score records into a concrete dataset plan: per-language token
// quotas from a mix ratio, top-percentile greedy selection, Python
// reweighting, and repetition planning.
#pragma once

#include "codesieve/annotator.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace codesieve {

// Per-language token shares; non-negative, summing to 1 within 1e-9.
struct MixRatio {
    std::map<std::string, double> weights;

    void validate() const; // throws ConfigError on violation

    static MixRatio measured(const std::map<std::string, uint64_t>& token_mass);
};

// quota(L) = round(mix(L) * unique_budget) with largest-remainder correction
// so quotas sum exactly to unique_budget; remainder ties break on
// lexicographically smaller language name.
std::map<std::string, uint64_t> compute_quotas(const MixRatio& mix, uint64_t unique_budget);

// Set Python's weight to target_python and rescale the other languages
// proportionally so their pairwise ratios are unchanged.
MixRatio reweight_python(const MixRatio& mix, double target_python);

struct SelectionPlan {
    uint64_t total_budget_tokens = 0; // token horizon of the phase
    uint32_t repetition = 1;          // k
    uint64_t unique_budget = 0;       // total_budget_tokens / k (floor)
    uint64_t remainder = 0;           // horizon - k * unique_budget
    std::map<std::string, uint64_t> quotas;
};

// unique_budget = floor(total_horizon / k); quotas left empty until a mix is
// applied via compute_quotas.
SelectionPlan plan_repetitions(uint64_t total_horizon, uint32_t k);

struct LanguageFill {
    uint64_t quota = 0;
    uint64_t selected_tokens = 0;
    uint64_t selected_docs = 0;
    bool shortfall = false; // quota unreachable with available tokens
};

struct SelectionResult {
    std::vector<std::string> selected_ids; // sorted ascending
    std::map<std::string, LanguageFill> fills;
};

// Per language: records sorted by (score desc, doc_id asc), taken greedily
// until the cumulative token count reaches the quota. The crossing document
// is included, so overshoot is at most one document.
SelectionResult select_top_percentile(const std::vector<ScoredDocument>& records,
                                      const std::map<std::string, uint64_t>& quotas);

// Selection manifest: plan parameters, per-language fills, selected ids.
void write_selection_manifest(const SelectionPlan& plan,
                              const SelectionResult& result,
                              const MixRatio& mix,
                              const std::filesystem::path& path);

struct SelectionManifest {
    SelectionPlan plan;
    MixRatio mix;
    SelectionResult result;
};
SelectionManifest read_selection_manifest(const std::filesystem::path& path);

} // namespace codesieve
