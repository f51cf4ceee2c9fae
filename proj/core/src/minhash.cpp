// SPDX-License-Identifier: Apache-2.0
#include "codesieve/minhash.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <limits>

namespace codesieve {

MinHashSignature minhash_signature(const ShingleSet& shingles,
                                   size_t signature_len,
                                   uint64_t permutation_seed) {
    MinHashSignature sig;
    sig.doc_id = shingles.doc_id;
    sig.permutation_seed = permutation_seed;
    sig.values.assign(signature_len, std::numeric_limits<uint64_t>::max());
    std::vector<uint64_t> stream_seeds(signature_len);
    for (size_t i = 0; i < signature_len; ++i) {
        stream_seeds[i] = derive_seed(permutation_seed, i);
    }
    for (uint64_t shingle : shingles.shingles) {
        for (size_t i = 0; i < signature_len; ++i) {
            const uint64_t h = mix64(shingle ^ stream_seeds[i]);
            if (h < sig.values[i]) sig.values[i] = h;
        }
    }
    return sig;
}

double signature_agreement(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.values.size() != b.values.size() || a.values.empty()) {
        throw ConfigError("minhash: signatures have mismatched lengths");
    }
    size_t agree = 0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i]) ++agree;
    }
    return static_cast<double>(agree) / static_cast<double>(a.values.size());
}

} // namespace codesieve
