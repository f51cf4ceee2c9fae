// SPDX-License-Identifier: Apache-2.0
//
// Synthetic-data front end: top-percentile seed selection, generation
// requests rendered from a versioned prompt template, response collection
// with acceptance gating, and assembly of the resulting corpus shards.
#pragma once

#include "codesieve/decontam.hpp"
#include "codesieve/document.hpp"
#include "codesieve/genclient.hpp"
#include "codesieve/selection.hpp"
#include "codesieve/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codesieve {

// Seed snippets are embedded verbatim between these line delimiters in
// every prompt; the mock client extracts them the same way.
inline constexpr std::string_view kSeedBeginDelimiter = "[seed]";
inline constexpr std::string_view kSeedEndDelimiter = "[/seed]";

struct PromptTemplate {
    std::string id;      // e.g. "oss-instruct-pretrain-v1"
    std::string text;    // with {language} and {seed} placeholders
    std::string content_hash;
};

// Built-in template registry plus optional file-backed overrides
// (id = file stem). Unknown ids are a configuration error.
PromptTemplate resolve_template(const std::string& template_id,
                                const std::optional<std::filesystem::path>& template_file = std::nullopt);

struct GenerationRequest {
    std::string request_id;
    std::string seed_doc_id;
    std::string language;
    std::string prompt_text;
    uint64_t max_seed_chars = 4000;
};

// Seed selection is select_top_percentile under the plan's (reweighted)
// quotas; recorded separately so the seed manifest carries provenance.
SelectionResult select_seeds(const std::vector<ScoredDocument>& records,
                             const SelectionPlan& plan);

// One request per seed document. Seeds longer than max_seed_chars are
// truncated at a line boundary before embedding.
std::vector<GenerationRequest> emit_generation_requests(const std::vector<CodeDocument>& seeds,
                                                        const std::string& template_id,
                                                        uint64_t max_seed_chars = 4000,
                                                        const std::optional<std::filesystem::path>& template_file = std::nullopt);

struct GenerationResponse {
    std::string request_id;
    std::string seed_doc_id;
    std::string language;
    std::string raw_text;
    std::string extracted_code; // empty when absent
    bool accepted = false;
    std::string reject_reason;  // set when rejected
    uint32_t attempts = 1;
};

struct CollectOptions {
    std::string model = "offline-mock";
    uint64_t max_output_tokens = 4096;
    double temperature = 0.0;
    uint32_t max_attempts = 3;
    uint32_t backoff_base_ms = 100;         // doubled per retry
    double seed_jaccard_bound = 0.85;       // reject when >= bound vs the seed
    size_t shingle_ngram = 5;
    size_t workers = 1;                     // bounded in-flight requests
    const NgramIndex* decontam_index = nullptr; // optional benchmark gate
};

// For each request, one response, in request order. Acceptance requires a
// non-empty extracted payload, lexical sanity, dissimilarity from the seed,
// and (when an index is given) zero benchmark n-gram hits.
std::vector<GenerationResponse> collect_responses(const std::vector<GenerationRequest>& requests,
                                                  GenerationClient& client,
                                                  const CollectOptions& options);

// True when text is plausible as source text: valid UTF-8, something other
// than whitespace, and no raw control bytes besides tab/newline/CR.
bool lexically_sane(std::string_view text);

struct AssembledCorpus {
    std::vector<CodeDocument> documents;            // synthetic + passthrough, sorted by id
    std::vector<std::pair<std::string, std::string>> seed_provenance; // (synthetic id, seed id)
};

// Convert accepted responses into CodeDocument records
// (repo_name = "synthetic/<template_id>") and merge with passthrough
// documents.
AssembledCorpus assemble_phase3_corpus(const std::vector<GenerationResponse>& responses,
                                       const std::vector<CodeDocument>& passthrough,
                                       const std::string& template_id,
                                       const TokenizerSpec& tokenizer,
                                       const LanguageSet& languages);

void write_request_log(const std::vector<GenerationRequest>& requests, const std::filesystem::path& path);
void write_response_log(const std::vector<GenerationResponse>& responses, const std::filesystem::path& path);
std::vector<GenerationResponse> read_response_log(const std::filesystem::path& path);

} // namespace codesieve
