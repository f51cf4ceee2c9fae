// SPDX-License-Identifier: Apache-2.0
#include "codesieve/features.hpp"

#include "codesieve/hashing.hpp"
#include "codesieve/tokenizer.hpp"

#include <cmath>
#include <map>

namespace codesieve {

double FeatureVector::l2_norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

FeatureVector featurize(std::string_view content, const FeatureSpec& spec) {
    FeatureVector vec;
    const auto tokens = approx_tokenize(content);
    if (tokens.empty()) return vec;

    const uint64_t mask = spec.dim() - 1;
    std::map<uint32_t, double> accum;

    auto bucket = [&](char kind, std::string_view a, std::string_view b) {
        uint64_t h = mix64(spec.hash_seed ^ static_cast<uint64_t>(kind));
        h = fnv1a64(a, h);
        if (!b.empty()) {
            h = fnv1a64(std::string_view("\x1f", 1), h);
            h = fnv1a64(b, h);
        }
        return static_cast<uint32_t>(mix64(h) & mask);
    };

    const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.size()));
    for (const auto& tok : tokens) {
        accum[bucket('1', tok, {})] += scale;
    }
    if (spec.use_bigrams) {
        for (size_t i = 0; i + 1 < tokens.size(); ++i) {
            accum[bucket('2', tokens[i], tokens[i + 1])] += scale;
        }
    }

    vec.indices.reserve(accum.size());
    vec.values.reserve(accum.size());
    for (const auto& [idx, val] : accum) {
        vec.indices.push_back(idx);
        vec.values.push_back(val);
    }
    return vec;
}

} // namespace codesieve
