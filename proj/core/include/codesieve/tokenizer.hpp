// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

enum class TokenizerKind {
    approximate_regex,
    external_vocab,
};

// How token counts are produced. The default approximate-regex mode needs
// no external assets: a token is either a maximal run of word characters
// (alnum, underscore, or any byte >= 0x80) or a single non-space symbol
// character. vocab_size is carried as metadata for downstream trainers.
struct TokenizerSpec {
    TokenizerKind kind = TokenizerKind::approximate_regex;
    uint64_t vocab_size = 64000;
    std::map<std::string, std::string> parameters;

    static TokenizerSpec approximate();
};

std::string tokenizer_kind_name(TokenizerKind kind);
TokenizerKind tokenizer_kind_from_name(const std::string& name);

// Split content into tokens under the approximate-regex rule. The same
// split backs token counting, decontamination n-grams, and featurization.
std::vector<std::string_view> approx_tokenize(std::string_view content);

// Token pieces under the given spec: the approximate-regex tokens, or their
// greedy longest-match vocabulary pieces in external-vocab mode. Views point
// into content. count_tokens(c, s) == tokenize_pieces(c, s).size().
std::vector<std::string_view> tokenize_pieces(std::string_view content, const TokenizerSpec& spec);

uint64_t count_tokens(std::string_view content, const TokenizerSpec& spec);

} // namespace codesieve
