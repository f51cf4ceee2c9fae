// SPDX-License-Identifier: Apache-2.0
#include "codesieve/decontam.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/language.hpp"
#include "codesieve/tokenizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <unordered_set>

namespace codesieve {

using nlohmann::json;

namespace {

// Normalization shared by index construction and document scanning:
// lowercase, then the approximate-regex token split (which collapses all
// whitespace by construction).
std::vector<uint64_t> normalized_token_hashes(const std::string& text) {
    const std::string lowered = lower_ascii(text);
    std::vector<uint64_t> hashes;
    for (std::string_view tok : approx_tokenize(lowered)) {
        hashes.push_back(fnv1a64(tok));
    }
    return hashes;
}

uint64_t gram_hash(const std::vector<uint64_t>& tokens, size_t start, size_t len) {
    uint64_t h = kFnvOffset;
    for (size_t i = 0; i < len; ++i) {
        h = fnv1a64(tokens[start + i], h);
    }
    return h;
}

} // namespace

std::vector<BenchmarkCorpus> read_benchmarks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("benchmark file not found: " + path.string());
    std::map<std::string, BenchmarkCorpus> by_name;
    std::vector<std::string> order;
    std::string line;
    uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("benchmark") || !j.contains("entry_id")) {
            throw DataError(path.string() + ":" + std::to_string(line_number) +
                            ": malformed benchmark record");
        }
        const std::string name = j["benchmark"].get<std::string>();
        if (!by_name.count(name)) {
            by_name[name].name = name;
            order.push_back(name);
        }
        BenchmarkEntry entry;
        entry.entry_id = j["entry_id"].get<std::string>();
        entry.prompt = j.value("prompt", "");
        entry.solution = j.value("solution", "");
        for (const auto& existing : by_name[name].entries) {
            if (existing.entry_id == entry.entry_id) {
                throw DataError("duplicate entry_id '" + entry.entry_id + "' in benchmark '" + name + "'");
            }
        }
        by_name[name].entries.push_back(std::move(entry));
    }
    std::vector<BenchmarkCorpus> out;
    for (const auto& name : order) out.push_back(std::move(by_name[name]));
    return out;
}

size_t NgramIndex::distinct_grams() const {
    size_t total = 0;
    for (const auto& [len, map] : grams_) total += map.size();
    return total;
}

NgramIndex build_ngram_index(const std::vector<BenchmarkCorpus>& benchmarks,
                             size_t ngram,
                             IndexScope scope) {
    if (ngram < 3) throw ConfigError("decontam: n-gram size must be >= 3");
    NgramIndex index;
    index.ngram_ = ngram;
    for (uint32_t b = 0; b < benchmarks.size(); ++b) {
        index.benchmark_names_.push_back(benchmarks[b].name);
        index.entry_ids_.emplace_back();
        for (uint32_t e = 0; e < benchmarks[b].entries.size(); ++e) {
            const auto& entry = benchmarks[b].entries[e];
            index.entry_ids_.back().push_back(entry.entry_id);
            std::vector<std::string> texts;
            if (scope != IndexScope::solutions_only) texts.push_back(entry.prompt);
            if (scope != IndexScope::prompts_only) texts.push_back(entry.solution);
            const NgramIndex::EntryRef ref{b, e};
            for (const auto& text : texts) {
                const auto tokens = normalized_token_hashes(text);
                if (tokens.empty()) continue;
                if (tokens.size() < ngram) {
                    // whole-entry gram
                    auto& posting = index.grams_[tokens.size()][gram_hash(tokens, 0, tokens.size())];
                    if (std::find(posting.begin(), posting.end(), ref) == posting.end()) {
                        posting.push_back(ref);
                    }
                    continue;
                }
                for (size_t i = 0; i + ngram <= tokens.size(); ++i) {
                    auto& posting = index.grams_[ngram][gram_hash(tokens, i, ngram)];
                    if (std::find(posting.begin(), posting.end(), ref) == posting.end()) {
                        posting.push_back(ref);
                    }
                }
            }
        }
    }
    return index;
}

// Scanning state shared by decontaminate() and contamination_hits().
struct NgramScanner {
    const NgramIndex& index;

    // distinct shared grams per entry, strongest entry reported
    struct Hit {
        NgramIndex::EntryRef ref;
        uint64_t count = 0;
    };

    std::optional<Hit> strongest(const std::string& text) const {
        const auto tokens = normalized_token_hashes(text);
        if (tokens.empty() || index.grams_.empty()) return std::nullopt;
        std::map<std::pair<uint32_t, uint32_t>, std::set<uint64_t>> per_entry;
        for (const auto& [len, map] : index.grams_) {
            if (tokens.size() < len) continue;
            for (size_t i = 0; i + len <= tokens.size(); ++i) {
                const uint64_t h = gram_hash(tokens, i, len);
                auto it = map.find(h);
                if (it == map.end()) continue;
                for (const auto& ref : it->second) {
                    per_entry[{ref.benchmark, ref.entry}].insert(h);
                }
            }
        }
        if (per_entry.empty()) return std::nullopt;
        Hit best;
        for (const auto& [key, grams] : per_entry) {
            if (grams.size() > best.count) {
                best.ref = {key.first, key.second};
                best.count = grams.size();
            }
        }
        return best;
    }
};

DecontamResult decontaminate(std::vector<CodeDocument> docs,
                             const NgramIndex& index,
                             uint64_t min_hits) {
    if (min_hits == 0) throw ConfigError("decontam: min_hits must be >= 1");
    DecontamResult result;
    NgramScanner scanner{index};
    for (auto& doc : docs) {
        auto hit = scanner.strongest(doc.content);
        if (hit && hit->count >= min_hits) {
            result.removed.push_back({doc.id,
                                      index.benchmark_name(hit->ref.benchmark),
                                      index.entry_id(hit->ref),
                                      hit->count});
        } else {
            result.kept.push_back(std::move(doc));
        }
    }
    return result;
}

uint64_t contamination_hits(const std::string& text, const NgramIndex& index) {
    NgramScanner scanner{index};
    auto hit = scanner.strongest(text);
    return hit ? hit->count : 0;
}

void write_removal_report(const std::vector<RemovalRecord>& removed,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write removal report: " + path.string());
    for (const auto& rec : removed) {
        json j;
        j["doc_id"] = rec.doc_id;
        j["benchmark"] = rec.benchmark;
        j["entry_id"] = rec.entry_id;
        j["hit_count"] = rec.hit_count;
        out << j.dump() << '\n';
    }
}

} // namespace codesieve
