// SPDX-License-Identifier: Apache-2.0
#include "codesieve/grouping.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace codesieve {

using nlohmann::json;

GroupingStrategy grouping_strategy_from_name(const std::string& name) {
    if (name == "by_repo") return GroupingStrategy::by_repo;
    if (name == "by_language_and_repo") return GroupingStrategy::by_language_and_repo;
    throw ConfigError("grouping: unknown strategy '" + name + "'");
}

std::string grouping_strategy_name(GroupingStrategy strategy) {
    return strategy == GroupingStrategy::by_repo ? "by_repo" : "by_language_and_repo";
}

std::vector<TrainingDocument> group_documents(const std::vector<CodeDocument>& files,
                                              GroupingStrategy strategy,
                                              uint64_t seed) {
    std::map<std::string, TrainingDocument> groups;
    for (const auto& file : files) {
        std::string key;
        if (strategy == GroupingStrategy::by_repo) {
            key = file.repo_name;
        } else {
            key = file.language + "/" + file.repo_name;
        }
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) {
            it->second.id = key;
            if (strategy == GroupingStrategy::by_language_and_repo) {
                it->second.language = file.language;
            }
        }
        it->second.member_ids.push_back(file.id);
    }
    std::vector<TrainingDocument> out;
    out.reserve(groups.size());
    for (auto& [key, doc] : groups) {
        // Member order must not depend on input order.
        std::sort(doc.member_ids.begin(), doc.member_ids.end());
        stable_shuffle(doc.member_ids, derive_seed(seed, doc.id));
        out.push_back(std::move(doc));
    }
    return out;
}

std::unordered_map<std::string, const CodeDocument*> index_documents(const std::vector<CodeDocument>& docs) {
    std::unordered_map<std::string, const CodeDocument*> by_id;
    by_id.reserve(docs.size());
    for (const auto& doc : docs) {
        if (!by_id.emplace(doc.id, &doc).second) {
            throw DataError("duplicate document id: " + doc.id);
        }
    }
    return by_id;
}

std::string training_document_text(const TrainingDocument& doc,
                                   const std::unordered_map<std::string, const CodeDocument*>& by_id,
                                   const std::string& separator) {
    std::string text;
    for (size_t i = 0; i < doc.member_ids.size(); ++i) {
        auto it = by_id.find(doc.member_ids[i]);
        if (it == by_id.end()) {
            throw DataError("training document " + doc.id + " references unknown file " + doc.member_ids[i]);
        }
        if (i > 0) text += separator;
        text += it->second->content;
    }
    return text;
}

void write_training_documents(const std::vector<TrainingDocument>& docs,
                              const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write training documents: " + path.string());
    for (const auto& doc : docs) {
        json j;
        j["id"] = doc.id;
        if (doc.language) j["language"] = *doc.language;
        j["member_ids"] = doc.member_ids;
        out << j.dump() << '\n';
    }
}

std::vector<TrainingDocument> read_training_documents(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("training documents not found: " + path.string());
    std::vector<TrainingDocument> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        TrainingDocument doc;
        doc.id = j.at("id").get<std::string>();
        if (j.contains("language")) doc.language = j["language"].get<std::string>();
        doc.member_ids = j.at("member_ids").get<std::vector<std::string>>();
        out.push_back(std::move(doc));
    }
    return out;
}

} // namespace codesieve
