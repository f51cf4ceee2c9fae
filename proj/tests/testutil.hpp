// SPDX-License-Identifier: Apache-2.0
//
// Shared fixture helpers for the test binaries: scratch directories and a
// deterministic synthetic code corpus generator.
#pragma once

#include "codesieve/corpus_io.hpp"
#include "codesieve/document.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/tokenizer.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

namespace testutil {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("codesieve-" + tag + "-" + std::to_string(::getpid()) + "-" +
                 std::to_string(counter_++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words = {
        "load",   "parse",  "merge",  "split",  "count", "cache",  "index",  "value",
        "buffer", "stream", "filter", "reduce", "table", "record", "cursor", "batch",
        "queue",  "shard",  "token",  "write",  "read",  "flush",  "state",  "config",
    };
    return words;
}

// Deterministic code-like document. Content shape depends only on (seed, i).
inline codesieve::CodeDocument make_document(uint64_t seed, size_t i, const std::string& language,
                                             const std::string& repo, size_t lines = 12) {
    codesieve::SplitMix64 rng(codesieve::derive_seed(seed, i));
    const auto& words = word_pool();
    std::string content;
    for (size_t line = 0; line < lines; ++line) {
        const std::string a = words[rng.next_below(words.size())];
        const std::string b = words[rng.next_below(words.size())];
        const uint64_t n = rng.next_below(997);
        content += "def " + a + "_" + b + std::to_string(line) + "(x):\n";
        content += "    return " + a + "(x) + " + std::to_string(n) + "\n";
    }
    codesieve::CodeDocument doc;
    doc.repo_name = repo;
    doc.path = "src/file_" + std::to_string(i) + ".py";
    doc.language = language;
    doc.content = content;
    doc.id = "doc-" + std::to_string(i);
    doc.token_count = codesieve::count_tokens(doc.content, codesieve::TokenizerSpec::approximate());
    return doc;
}

inline std::vector<codesieve::CodeDocument> make_corpus(uint64_t seed, size_t n,
                                                        const std::vector<std::string>& languages,
                                                        size_t repos = 10) {
    std::vector<codesieve::CodeDocument> docs;
    docs.reserve(n);
    codesieve::SplitMix64 rng(seed);
    for (size_t i = 0; i < n; ++i) {
        const std::string lang = languages[rng.next_below(languages.size())];
        const std::string repo = "org/repo-" + std::to_string(rng.next_below(repos));
        docs.push_back(make_document(seed, i, lang, repo));
    }
    return docs;
}

} // namespace testutil
