// SPDX-License-Identifier: Apache-2.0
#include "codesieve/partition.hpp"

namespace codesieve {

std::map<std::string, std::vector<CodeDocument>> partition_by_language(std::vector<CodeDocument> docs) {
    std::map<std::string, std::vector<CodeDocument>> buckets;
    for (auto& doc : docs) {
        buckets[doc.language].push_back(std::move(doc));
    }
    return buckets;
}

std::map<std::string, uint64_t> token_mass_by_language(const std::vector<CodeDocument>& docs) {
    std::map<std::string, uint64_t> mass;
    for (const auto& doc : docs) {
        mass[doc.language] += doc.token_count;
    }
    return mass;
}

} // namespace codesieve
