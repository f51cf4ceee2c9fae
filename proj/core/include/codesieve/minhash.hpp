// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/shingles.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace codesieve {

// MinHash signature: values[i] = min over shingles of h_i(shingle), where
// h_i is derived deterministically from (permutation_seed, i).
struct MinHashSignature {
    std::string doc_id;
    std::vector<uint64_t> values;
    uint64_t permutation_seed = 0;
};

MinHashSignature minhash_signature(const ShingleSet& shingles,
                                   size_t signature_len,
                                   uint64_t permutation_seed);

// Fraction of positions on which two signatures agree — the MinHash
// estimate of the exact Jaccard similarity.
double signature_agreement(const MinHashSignature& a, const MinHashSignature& b);

} // namespace codesieve
