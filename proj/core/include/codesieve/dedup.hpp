// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/document.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace codesieve {

struct DropRecord {
    std::string dropped_id;
    std::string kept_id;
    std::string method;       // "exact" or "near"
    double confirmed_jaccard; // 1.0 for exact drops
};

struct DedupResult {
    std::vector<CodeDocument> kept;
    std::vector<DropRecord> dropped;
};

// Among documents with identical content hash, the lexicographically
// smallest id is kept; the rest point at the keeper.
DedupResult exact_dedup(std::vector<CodeDocument> docs);

struct NearDedupParams {
    double threshold = 0.85;   // confirm threshold on exact Jaccard, in (0,1]
    size_t signature_len = 128;
    size_t bands = 16;         // must divide signature_len
    size_t shingle_ngram = 5;
    uint64_t seed = 0;         // permutation seed
    size_t workers = 1;        // signature computation threads
};

// LSH banding proposes candidate pairs, exact Jaccard >= threshold confirms
// them, and confirmed clusters (connected components) keep their smallest-id
// member. Output is a pure function of (docs, params.threshold, params.seed).
DedupResult near_dedup(std::vector<CodeDocument> docs, const NearDedupParams& params = {});

void write_dedup_report(const std::vector<DropRecord>& dropped, const std::filesystem::path& path);

} // namespace codesieve
