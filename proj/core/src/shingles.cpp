// SPDX-License-Identifier: Apache-2.0
#include "codesieve/shingles.hpp"

#include "codesieve/hashing.hpp"

#include <algorithm>

namespace codesieve {

std::string normalize_for_shingles(std::string_view content) {
    std::string out;
    out.reserve(content.size());
    bool in_space = true; // leading whitespace trimmed
    for (char raw : content) {
        const unsigned char c = static_cast<unsigned char>(raw);
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
        if (space) {
            if (!in_space) {
                out.push_back(' ');
                in_space = true;
            }
        } else {
            out.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
            in_space = false;
        }
    }
    if (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

ShingleSet make_shingles(const std::string& doc_id, std::string_view content, size_t ngram) {
    ShingleSet set;
    set.doc_id = doc_id;
    const std::string norm = normalize_for_shingles(content);
    if (norm.empty()) return set;
    if (norm.size() < ngram) {
        set.shingles.push_back(fnv1a64(norm));
        return set;
    }
    set.shingles.reserve(norm.size() - ngram + 1);
    for (size_t i = 0; i + ngram <= norm.size(); ++i) {
        set.shingles.push_back(fnv1a64(std::string_view(norm).substr(i, ngram)));
    }
    std::sort(set.shingles.begin(), set.shingles.end());
    set.shingles.erase(std::unique(set.shingles.begin(), set.shingles.end()), set.shingles.end());
    return set;
}

double jaccard_exact(const ShingleSet& a, const ShingleSet& b) {
    if (a.shingles.empty() && b.shingles.empty()) return 1.0;
    size_t inter = 0;
    size_t i = 0, j = 0;
    while (i < a.shingles.size() && j < b.shingles.size()) {
        if (a.shingles[i] == b.shingles[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a.shingles[i] < b.shingles[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const size_t uni = a.shingles.size() + b.shingles.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

} // namespace codesieve
