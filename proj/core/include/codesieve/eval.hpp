// SPDX-License-Identifier: Apache-2.0
//
// Annotator validation: ROC-AUC of scores on benchmark-derived positives vs
// held-out corpus negatives, and the rank-correlation report pairing
// per-benchmark AUC with externally supplied pass rates.
#pragma once

#include "codesieve/decontam.hpp"
#include "codesieve/document.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

namespace codesieve {

struct ValidationSet {
    std::string benchmark;
    std::vector<std::pair<std::string, std::string>> positives; // (id, text), benchmark solutions
    std::vector<std::pair<std::string, std::string>> negatives; // (id, text), held-out corpus docs
};

// Positives are all benchmark solution texts; negatives are a
// seed-deterministic sample of n_negatives held-out documents. Held-out ids
// must be disjoint from the annotator's training ids.
ValidationSet build_validation_set(const BenchmarkCorpus& benchmark,
                                   const std::vector<CodeDocument>& heldout_docs,
                                   size_t n_negatives,
                                   uint64_t seed,
                                   const std::unordered_set<std::string>& training_ids = {});

enum class Label { positive, negative };

// Mann-Whitney ROC-AUC: (concordant pairs + 0.5 * ties) / (P * N).
// The numerator is accumulated in integers, so equal inputs give bitwise
// equal results across implementations.
double roc_auc(const std::vector<std::pair<double, Label>>& scored);

enum class CorrelationStatistic { spearman, pearson };

struct AucReport {
    std::map<std::string, double> per_benchmark;  // ROC-AUC in [0,1]
    std::map<std::string, double> pass_rates;     // pass@1 in [0,100], external input
    double correlation = 0.0;                     // over the key intersection
    CorrelationStatistic statistic = CorrelationStatistic::spearman;
    std::vector<std::pair<std::string, std::pair<double, double>>> paired; // (benchmark, (auc, pass))
};

AucReport correlation_report(const std::map<std::string, double>& auc_by_benchmark,
                             const std::map<std::string, double>& pass_by_benchmark,
                             CorrelationStatistic statistic = CorrelationStatistic::spearman);

// Pass-rate input: JSON object file {benchmark: pass@1, ...} or record-per-line
// {"benchmark":..., "pass1":...}.
std::map<std::string, double> read_pass_rates(const std::filesystem::path& path);

void write_auc_report(const AucReport& report, const std::filesystem::path& json_path,
                      const std::filesystem::path& table_path);

// Average-rank helper shared by Spearman and the AUC rank formulation.
std::vector<double> average_ranks(const std::vector<double>& values);

double spearman(const std::vector<double>& a, const std::vector<double>& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

} // namespace codesieve
