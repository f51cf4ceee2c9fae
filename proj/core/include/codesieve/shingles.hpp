// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

// Hashed character n-gram set over normalized content. Normalization
// (lowercase, whitespace runs collapsed to one space, trimmed) is applied
// before shingling; content shorter than n yields one whole-string shingle.
struct ShingleSet {
    std::string doc_id;
    std::vector<uint64_t> shingles; // sorted, unique
};

std::string normalize_for_shingles(std::string_view content);

ShingleSet make_shingles(const std::string& doc_id, std::string_view content, size_t ngram = 5);

// |a ∩ b| / |a ∪ b|; 1 by convention when both sets are empty.
double jaccard_exact(const ShingleSet& a, const ShingleSet& b);

} // namespace codesieve
