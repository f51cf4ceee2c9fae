// SPDX-License-Identifier: Apache-2.0
#include "codesieve/dedup.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/minhash.hpp"
#include "codesieve/shingles.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace codesieve {

namespace {

// Union-find keyed by dense index.
class DisjointSet {
public:
    explicit DisjointSet(size_t n) : parent_(n) {
        for (size_t i = 0; i < n; ++i) parent_[i] = i;
    }

    size_t find(size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(size_t a, size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[b] = a;
    }

private:
    std::vector<size_t> parent_;
};

} // namespace

DedupResult exact_dedup(std::vector<CodeDocument> docs) {
    DedupResult result;
    std::map<Hash128, std::vector<size_t>> by_hash;
    for (size_t i = 0; i < docs.size(); ++i) {
        by_hash[hash128(docs[i].content)].push_back(i);
    }
    std::vector<bool> drop(docs.size(), false);
    for (auto& [hash, indices] : by_hash) {
        if (indices.size() < 2) continue;
        size_t keeper = indices[0];
        for (size_t idx : indices) {
            if (docs[idx].id < docs[keeper].id) keeper = idx;
        }
        for (size_t idx : indices) {
            if (idx == keeper) continue;
            drop[idx] = true;
            result.dropped.push_back({docs[idx].id, docs[keeper].id, "exact", 1.0});
        }
    }
    for (size_t i = 0; i < docs.size(); ++i) {
        if (!drop[i]) result.kept.push_back(std::move(docs[i]));
    }
    std::sort(result.dropped.begin(), result.dropped.end(),
              [](const DropRecord& a, const DropRecord& b) { return a.dropped_id < b.dropped_id; });
    return result;
}

DedupResult near_dedup(std::vector<CodeDocument> docs, const NearDedupParams& params) {
    if (params.bands == 0 || params.signature_len == 0 || params.signature_len % params.bands != 0) {
        throw ConfigError("near_dedup: bands must divide signature_len (got " +
                          std::to_string(params.bands) + " / " + std::to_string(params.signature_len) + ")");
    }
    if (!(params.threshold > 0.0 && params.threshold <= 1.0)) {
        throw ConfigError("near_dedup: threshold must be in (0,1]");
    }
    const size_t rows = params.signature_len / params.bands;
    const size_t n = docs.size();

    // Candidate discovery must not depend on input order; work in id order.
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return docs[a].id < docs[b].id; });

    std::vector<ShingleSet> shingles(n);
    std::vector<MinHashSignature> sigs(n);
    const size_t workers = std::max<size_t>(1, params.workers);
    if (workers == 1 || n < 2 * workers) {
        for (size_t k = 0; k < n; ++k) {
            const size_t i = order[k];
            shingles[i] = make_shingles(docs[i].id, docs[i].content, params.shingle_ngram);
            sigs[i] = minhash_signature(shingles[i], params.signature_len, params.seed);
        }
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (size_t k = w; k < n; k += workers) {
                    const size_t i = order[k];
                    shingles[i] = make_shingles(docs[i].id, docs[i].content, params.shingle_ngram);
                    sigs[i] = minhash_signature(shingles[i], params.signature_len, params.seed);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    // LSH banding: bucket by (band index, band hash).
    std::unordered_map<uint64_t, std::vector<size_t>> buckets;
    buckets.reserve(n * params.bands);
    for (size_t k = 0; k < n; ++k) {
        const size_t i = order[k];
        for (size_t b = 0; b < params.bands; ++b) {
            uint64_t h = fnv1a64(b);
            for (size_t r = 0; r < rows; ++r) {
                h = fnv1a64(sigs[i].values[b * rows + r], h);
            }
            buckets[h].push_back(i);
        }
    }

    std::unordered_set<uint64_t> seen_pairs;
    DisjointSet components(n);
    for (auto& [h, members] : buckets) {
        if (members.size() < 2) continue;
        for (size_t a = 0; a < members.size(); ++a) {
            for (size_t b = a + 1; b < members.size(); ++b) {
                size_t lo = members[a], hi = members[b];
                if (lo > hi) std::swap(lo, hi);
                const uint64_t key = static_cast<uint64_t>(lo) * n + hi;
                if (!seen_pairs.insert(key).second) continue;
                if (jaccard_exact(shingles[lo], shingles[hi]) >= params.threshold) {
                    components.unite(lo, hi);
                }
            }
        }
    }

    // Keeper per component: smallest id.
    std::unordered_map<size_t, size_t> keeper;
    for (size_t k = 0; k < n; ++k) {
        const size_t i = order[k];
        const size_t root = components.find(i);
        auto it = keeper.find(root);
        if (it == keeper.end() || docs[i].id < docs[it->second].id) keeper[root] = i;
    }

    DedupResult result;
    std::vector<bool> drop(n, false);
    for (size_t k = 0; k < n; ++k) {
        const size_t i = order[k];
        const size_t keep = keeper[components.find(i)];
        if (keep == i) continue;
        drop[i] = true;
        result.dropped.push_back(
            {docs[i].id, docs[keep].id, "near", jaccard_exact(shingles[i], shingles[keep])});
    }
    for (size_t i = 0; i < n; ++i) {
        if (!drop[i]) result.kept.push_back(std::move(docs[i]));
    }
    std::sort(result.dropped.begin(), result.dropped.end(),
              [](const DropRecord& a, const DropRecord& b) { return a.dropped_id < b.dropped_id; });
    return result;
}

void write_dedup_report(const std::vector<DropRecord>& dropped, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write dedup report: " + path.string());
    for (const auto& rec : dropped) {
        nlohmann::json j;
        j["dropped_id"] = rec.dropped_id;
        j["kept_id"] = rec.kept_id;
        j["method"] = rec.method;
        j["confirmed_jaccard"] = rec.confirmed_jaccard;
        out << j.dump() << '\n';
    }
}

} // namespace codesieve
