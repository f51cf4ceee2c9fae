// SPDX-License-Identifier: Apache-2.0
#include "codesieve/tokenizer.hpp"

#include "codesieve/errors.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <unordered_map>

namespace codesieve {

namespace {

inline bool is_word_byte(unsigned char c) {
    if (c >= 0x80) return true; // multi-byte UTF-8 sequences count as word bytes
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_';
}

inline bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Longest-prefix vocabulary used by external-vocab counting.
struct Vocab {
    std::set<std::string> entries;
    size_t max_len = 0;
};

std::shared_ptr<const Vocab> load_vocab(const std::string& path) {
    static std::mutex mu;
    static std::unordered_map<std::string, std::shared_ptr<const Vocab>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(path);
    if (it != cache.end()) return it->second;

    std::ifstream in(path);
    if (!in) {
        throw ConfigError("tokenizer: vocabulary resource not found: " + path);
    }
    auto vocab = std::make_shared<Vocab>();
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        vocab->max_len = std::max(vocab->max_len, line.size());
        vocab->entries.insert(line);
    }
    cache.emplace(path, vocab);
    return vocab;
}

// Greedy longest-match split of one word run into vocabulary pieces.
void split_pieces(std::string_view run, const Vocab& vocab, std::vector<std::string_view>& out) {
    size_t pos = 0;
    while (pos < run.size()) {
        size_t best = 0;
        const size_t limit = std::min(vocab.max_len, run.size() - pos);
        for (size_t len = limit; len >= 1; --len) {
            if (vocab.entries.count(std::string(run.substr(pos, len)))) {
                best = len;
                break;
            }
        }
        if (best == 0) best = 1; // unknown byte is its own piece
        out.push_back(run.substr(pos, best));
        pos += best;
    }
}

} // namespace

TokenizerSpec TokenizerSpec::approximate() {
    return TokenizerSpec{};
}

std::string tokenizer_kind_name(TokenizerKind kind) {
    switch (kind) {
        case TokenizerKind::approximate_regex: return "approximate-regex";
        case TokenizerKind::external_vocab: return "external-vocab";
    }
    return "approximate-regex";
}

TokenizerKind tokenizer_kind_from_name(const std::string& name) {
    if (name == "approximate-regex") return TokenizerKind::approximate_regex;
    if (name == "external-vocab") return TokenizerKind::external_vocab;
    throw ConfigError("tokenizer: unknown kind '" + name + "'");
}

std::vector<std::string_view> approx_tokenize(std::string_view content) {
    std::vector<std::string_view> tokens;
    size_t i = 0;
    const size_t n = content.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(content[i]);
        if (is_space_byte(c)) {
            ++i;
            continue;
        }
        if (is_word_byte(c)) {
            size_t j = i + 1;
            while (j < n && is_word_byte(static_cast<unsigned char>(content[j]))) ++j;
            tokens.push_back(content.substr(i, j - i));
            i = j;
        } else {
            tokens.push_back(content.substr(i, 1));
            ++i;
        }
    }
    return tokens;
}

uint64_t count_tokens(std::string_view content, const TokenizerSpec& spec) {
    if (spec.kind == TokenizerKind::approximate_regex) {
        uint64_t count = 0;
        size_t i = 0;
        const size_t n = content.size();
        while (i < n) {
            const unsigned char c = static_cast<unsigned char>(content[i]);
            if (is_space_byte(c)) {
                ++i;
            } else if (is_word_byte(c)) {
                size_t j = i + 1;
                while (j < n && is_word_byte(static_cast<unsigned char>(content[j]))) ++j;
                ++count;
                i = j;
            } else {
                ++count;
                ++i;
            }
        }
        return count;
    }

    return tokenize_pieces(content, spec).size();
}

std::vector<std::string_view> tokenize_pieces(std::string_view content, const TokenizerSpec& spec) {
    if (spec.kind == TokenizerKind::approximate_regex) {
        return approx_tokenize(content);
    }
    auto it = spec.parameters.find("vocab_path");
    if (it == spec.parameters.end()) {
        throw ConfigError("tokenizer: external-vocab mode requires parameters[\"vocab_path\"]");
    }
    auto vocab = load_vocab(it->second);
    std::vector<std::string_view> pieces;
    for (std::string_view run : approx_tokenize(content)) {
        split_pieces(run, *vocab, pieces);
    }
    return pieces;
}

} // namespace codesieve
