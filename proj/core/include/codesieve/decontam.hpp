// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/document.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace codesieve {

struct BenchmarkEntry {
    std::string entry_id;
    std::string prompt;
    std::string solution;
};

struct BenchmarkCorpus {
    std::string name;
    std::vector<BenchmarkEntry> entries; // entry_ids unique within a benchmark
};

// Record-per-line file with keys "benchmark", "entry_id", "prompt", "solution".
std::vector<BenchmarkCorpus> read_benchmarks(const std::filesystem::path& path);

// Which benchmark texts get indexed.
enum class IndexScope {
    prompts_and_solutions,
    prompts_only,
    solutions_only,
};

// Token n-gram index over normalized (lowercased) benchmark text. Entries
// shorter than n tokens are indexed as one whole-entry gram so they cannot
// escape the filter.
class NgramIndex {
public:
    struct EntryRef {
        uint32_t benchmark = 0;
        uint32_t entry = 0;
        bool operator==(const EntryRef&) const = default;
    };

    NgramIndex() = default;

    size_t ngram() const { return ngram_; }
    bool empty() const { return grams_.empty(); }
    size_t distinct_grams() const;

    const std::string& benchmark_name(uint32_t idx) const { return benchmark_names_[idx]; }
    const std::string& entry_id(const EntryRef& ref) const { return entry_ids_[ref.benchmark][ref.entry]; }

    friend NgramIndex build_ngram_index(const std::vector<BenchmarkCorpus>&, size_t, IndexScope);
    friend struct NgramScanner;

private:
    size_t ngram_ = 10;
    // gram length -> gram hash -> entries containing it (deduplicated)
    std::unordered_map<size_t, std::unordered_map<uint64_t, std::vector<EntryRef>>> grams_;
    std::vector<std::string> benchmark_names_;
    std::vector<std::vector<std::string>> entry_ids_;
};

NgramIndex build_ngram_index(const std::vector<BenchmarkCorpus>& benchmarks,
                             size_t ngram = 10,
                             IndexScope scope = IndexScope::prompts_and_solutions);

struct RemovalRecord {
    std::string doc_id;
    std::string benchmark;
    std::string entry_id;
    uint64_t hit_count = 0; // distinct shared n-grams with that entry
};

struct DecontamResult {
    std::vector<CodeDocument> kept;
    std::vector<RemovalRecord> removed; // strongest-matching entry per document
};

// A document is removed iff it shares >= min_hits n-grams with any single
// benchmark entry.
DecontamResult decontaminate(std::vector<CodeDocument> docs,
                             const NgramIndex& index,
                             uint64_t min_hits = 1);

// Number of distinct index grams a single text shares with its
// strongest-matching entry (0 if none). Used for response gating.
uint64_t contamination_hits(const std::string& text, const NgramIndex& index);

void write_removal_report(const std::vector<RemovalRecord>& removed,
                          const std::filesystem::path& path);

} // namespace codesieve
