// SPDX-License-Identifier: Apache-2.0
#include "codesieve/eval.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace codesieve {

using nlohmann::json;

ValidationSet build_validation_set(const BenchmarkCorpus& benchmark,
                                   const std::vector<CodeDocument>& heldout_docs,
                                   size_t n_negatives,
                                   uint64_t seed,
                                   const std::unordered_set<std::string>& training_ids) {
    if (n_negatives == 0) {
        throw ConfigError("validation set: n_negatives must be >= 1 (AUC undefined without negatives)");
    }
    if (heldout_docs.size() < n_negatives) {
        throw ConfigError("validation set: need " + std::to_string(n_negatives) +
                          " held-out documents, have " + std::to_string(heldout_docs.size()));
    }
    for (const auto& doc : heldout_docs) {
        if (training_ids.count(doc.id)) {
            throw ConfigError("validation set: held-out document " + doc.id +
                              " was seen during annotator training");
        }
    }

    ValidationSet set;
    set.benchmark = benchmark.name;
    for (const auto& entry : benchmark.entries) {
        set.positives.emplace_back(entry.entry_id, entry.solution);
    }

    // Deterministic sample: order by mixed (seed, id) key, take the first n.
    std::vector<const CodeDocument*> pool;
    pool.reserve(heldout_docs.size());
    for (const auto& doc : heldout_docs) pool.push_back(&doc);
    std::sort(pool.begin(), pool.end(), [&](const CodeDocument* a, const CodeDocument* b) {
        const uint64_t ka = derive_seed(seed, a->id);
        const uint64_t kb = derive_seed(seed, b->id);
        if (ka != kb) return ka < kb;
        return a->id < b->id;
    });
    for (size_t i = 0; i < n_negatives; ++i) {
        set.negatives.emplace_back(pool[i]->id, pool[i]->content);
    }
    return set;
}

double roc_auc(const std::vector<std::pair<double, Label>>& scored) {
    std::vector<double> pos, neg;
    for (const auto& [score, label] : scored) {
        if (!std::isfinite(score)) throw DataError("roc_auc: non-finite score");
        (label == Label::positive ? pos : neg).push_back(score);
    }
    if (pos.empty() || neg.empty()) {
        throw ConfigError("roc_auc: need at least one positive and one negative");
    }
    std::sort(neg.begin(), neg.end());
    // numerator2 = 2*concordant + ties, exact in integers
    uint64_t numerator2 = 0;
    for (double s : pos) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        const auto hi = std::upper_bound(lo, neg.end(), s);
        const uint64_t less = static_cast<uint64_t>(lo - neg.begin());
        const uint64_t equal = static_cast<uint64_t>(hi - lo);
        numerator2 += 2 * less + equal;
    }
    return static_cast<double>(numerator2) /
           (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ConfigError("correlation: need >= 2 paired points");
    }
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) {
        throw DataError("correlation: a variable is constant, coefficient undefined");
    }
    return cov / std::sqrt(va * vb);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    return pearson(average_ranks(a), average_ranks(b));
}

AucReport correlation_report(const std::map<std::string, double>& auc_by_benchmark,
                             const std::map<std::string, double>& pass_by_benchmark,
                             CorrelationStatistic statistic) {
    AucReport report;
    report.per_benchmark = auc_by_benchmark;
    report.pass_rates = pass_by_benchmark;
    report.statistic = statistic;

    std::vector<double> aucs, passes;
    for (const auto& [name, auc] : auc_by_benchmark) {
        auto it = pass_by_benchmark.find(name);
        if (it == pass_by_benchmark.end()) continue;
        aucs.push_back(auc);
        passes.push_back(it->second);
        report.paired.push_back({name, {auc, it->second}});
    }
    if (report.paired.size() < 2) {
        throw ConfigError("correlation report: need >= 2 benchmarks present in both inputs, have " +
                          std::to_string(report.paired.size()));
    }
    report.correlation = statistic == CorrelationStatistic::spearman ? spearman(aucs, passes)
                                                                     : pearson(aucs, passes);
    return report;
}

std::map<std::string, double> read_pass_rates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("pass-rate file not found: " + path.string());
    std::map<std::string, double> rates;
    // Whole-file JSON object, or record-per-line fallback.
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json whole = json::parse(content, nullptr, false);
    if (!whole.is_discarded() && whole.is_object()) {
        for (auto it = whole.begin(); it != whole.end(); ++it) {
            rates[it.key()] = it.value().get<double>();
        }
        return rates;
    }
    size_t pos = 0;
    uint64_t line_number = 0;
    while (pos < content.size()) {
        size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        const std::string line = content.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("benchmark") || !j.contains("pass1")) {
            throw DataError(path.string() + ":" + std::to_string(line_number) +
                            ": malformed pass-rate record");
        }
        rates[j["benchmark"].get<std::string>()] = j["pass1"].get<double>();
    }
    return rates;
}

void write_auc_report(const AucReport& report, const std::filesystem::path& json_path,
                      const std::filesystem::path& table_path) {
    json j;
    j["per_benchmark"] = report.per_benchmark;
    j["pass_rates"] = report.pass_rates;
    j["correlation"] = report.correlation;
    j["statistic"] = report.statistic == CorrelationStatistic::spearman ? "spearman" : "pearson";
    {
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) throw DataError("cannot write report: " + json_path.string());
        out << j.dump(2) << '\n';
    }
    std::ofstream table(table_path, std::ios::trunc);
    if (!table) throw DataError("cannot write report table: " + table_path.string());
    table << "benchmark\tauc\tpass1\n";
    char buf[128];
    for (const auto& [name, pair] : report.paired) {
        std::snprintf(buf, sizeof(buf), "%s\t%.17g\t%.17g\n", name.c_str(), pair.first, pair.second);
        table << buf;
    }
    std::snprintf(buf, sizeof(buf), "# correlation\t%.17g\n", report.correlation);
    table << buf;
}

} // namespace codesieve
