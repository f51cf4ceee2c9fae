// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

// Hashed bag of word unigrams and bigrams over whitespace/symbol tokens.
struct FeatureSpec {
    uint32_t dim_log2 = 20;   // D = 2^dim_log2 buckets
    uint64_t hash_seed = 0x5EEDED;
    bool use_bigrams = true;

    uint64_t dim() const { return uint64_t{1} << dim_log2; }
    bool operator==(const FeatureSpec&) const = default;
};

// Sparse vector: strictly increasing indices in [0, D), finite values.
struct FeatureVector {
    std::vector<uint32_t> indices;
    std::vector<double> values;

    double dot(const std::vector<double>& dense_weights) const {
        double sum = 0.0;
        for (size_t i = 0; i < indices.size(); ++i) {
            sum += dense_weights[indices[i]] * values[i];
        }
        return sum;
    }

    double l2_norm() const;
};

// Term frequencies scaled by 1/sqrt(token count), hashed into D buckets with
// the spec seed. Pure function of (content, spec).
FeatureVector featurize(std::string_view content, const FeatureSpec& spec);

} // namespace codesieve
