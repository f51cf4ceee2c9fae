// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "codesieve/document.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace codesieve {

enum class GroupingStrategy {
    by_repo,              // one training document per repo_name, languages may mix
    by_language_and_repo, // one per (language, repo_name), single-language
};

GroupingStrategy grouping_strategy_from_name(const std::string& name);
std::string grouping_strategy_name(GroupingStrategy strategy);

// A concatenation unit for pretraining. Member files are randomly ordered;
// the order is a pure function of (seed, id).
struct TrainingDocument {
    std::string id;
    std::optional<std::string> language; // set iff single-language scope
    std::vector<std::string> member_ids; // in concatenation order
};

// Group files into training documents under the given strategy. Training
// documents come out sorted by id; member order inside each document is the
// seeded shuffle.
std::vector<TrainingDocument> group_documents(const std::vector<CodeDocument>& files,
                                              GroupingStrategy strategy,
                                              uint64_t seed);

// Concatenated member contents joined by the separator string.
std::string training_document_text(const TrainingDocument& doc,
                                   const std::unordered_map<std::string, const CodeDocument*>& by_id,
                                   const std::string& separator = "\x1d");

std::unordered_map<std::string, const CodeDocument*> index_documents(const std::vector<CodeDocument>& docs);

void write_training_documents(const std::vector<TrainingDocument>& docs,
                              const std::filesystem::path& path);
std::vector<TrainingDocument> read_training_documents(const std::filesystem::path& path);

} // namespace codesieve
