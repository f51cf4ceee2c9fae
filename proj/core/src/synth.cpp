// SPDX-License-Identifier: Apache-2.0
#include "codesieve/synth.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/shingles.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>
#include <unordered_set>

namespace codesieve {

using nlohmann::json;

namespace {

const char* kDefaultTemplateId = "oss-instruct-pretrain-v1";

// Adapted from the snippet-inspired generation framing, aimed at producing a
// complete pretraining document rather than a question-answer pair.
const char* kDefaultTemplateText =
    "You are an expert software engineer.\n"
    "Language: {language}\n"
    "\n"
    "Below is a code snippet for inspiration:\n"
    "[seed]\n"
    "{seed}\n"
    "[/seed]\n"
    "\n"
    "Write one complete, self-contained, high-quality {language} source file that\n"
    "solves a concrete, practical problem suggested by the snippet. The file must\n"
    "be problem-solving oriented, include all necessary imports or declarations,\n"
    "and stand alone. Respond with only the code in a single fenced code block.\n";

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

} // namespace

PromptTemplate resolve_template(const std::string& template_id,
                                const std::optional<std::filesystem::path>& template_file) {
    PromptTemplate tmpl;
    if (template_file) {
        std::ifstream in(*template_file);
        if (!in) throw ConfigError("template file not found: " + template_file->string());
        tmpl.id = template_id;
        tmpl.text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    } else if (template_id == kDefaultTemplateId) {
        tmpl.id = template_id;
        tmpl.text = kDefaultTemplateText;
    } else {
        throw ConfigError("unknown prompt template '" + template_id + "'");
    }
    if (tmpl.text.find("{seed}") == std::string::npos) {
        throw ConfigError("prompt template '" + template_id + "' lacks a {seed} placeholder");
    }
    tmpl.content_hash = to_hex(fnv1a64(tmpl.text));
    return tmpl;
}

SelectionResult select_seeds(const std::vector<ScoredDocument>& records,
                             const SelectionPlan& plan) {
    return select_top_percentile(records, plan.quotas);
}

namespace {

std::string truncate_at_line(const std::string& content, uint64_t max_chars) {
    if (content.size() <= max_chars) return content;
    const size_t cut = content.rfind('\n', max_chars);
    if (cut == std::string::npos || cut == 0) {
        return content.substr(0, max_chars); // no line boundary to respect
    }
    return content.substr(0, cut);
}

} // namespace

std::vector<GenerationRequest> emit_generation_requests(const std::vector<CodeDocument>& seeds,
                                                        const std::string& template_id,
                                                        uint64_t max_seed_chars,
                                                        const std::optional<std::filesystem::path>& template_file) {
    const PromptTemplate tmpl = resolve_template(template_id, template_file);
    std::vector<GenerationRequest> requests;
    requests.reserve(seeds.size());
    for (const auto& seed : seeds) {
        GenerationRequest req;
        req.seed_doc_id = seed.id;
        req.language = seed.language;
        req.max_seed_chars = max_seed_chars;
        req.request_id = seed.id + "-" + to_hex(derive_seed(fnv1a64(tmpl.id), seed.id)).substr(0, 8);
        const std::string snippet = truncate_at_line(seed.content, max_seed_chars);
        std::string prompt = replace_all(tmpl.text, "{language}", seed.language);
        prompt = replace_all(prompt, "{seed}", snippet);
        req.prompt_text = std::move(prompt);
        requests.push_back(std::move(req));
    }
    return requests;
}

bool lexically_sane(std::string_view text) {
    if (!is_valid_utf8(text)) return false;
    bool has_visible = false;
    for (unsigned char c : text) {
        if (c == '\n' || c == '\t' || c == '\r') continue;
        if (c < 0x20) return false; // raw control byte
        if (c != ' ') has_visible = true;
    }
    return has_visible;
}

std::vector<GenerationResponse> collect_responses(const std::vector<GenerationRequest>& requests,
                                                  GenerationClient& client,
                                                  const CollectOptions& options) {
    std::vector<GenerationResponse> responses(requests.size());

    auto handle = [&](size_t i) {
        const GenerationRequest& req = requests[i];
        GenerationResponse resp;
        resp.request_id = req.request_id;
        resp.seed_doc_id = req.seed_doc_id;
        resp.language = req.language;

        GenerationCall call{options.model, req.prompt_text, options.max_output_tokens,
                            options.temperature};
        GenerationReply reply;
        uint32_t attempt = 0;
        while (true) {
            ++attempt;
            reply = client.generate(call);
            if (reply.ok || !reply.transport || attempt >= options.max_attempts) break;
            const uint64_t delay = static_cast<uint64_t>(options.backoff_base_ms) << (attempt - 1);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        resp.attempts = attempt;

        if (!reply.ok) {
            resp.accepted = false;
            resp.reject_reason = reply.transport ? "transport" : reply.error;
            responses[i] = std::move(resp);
            return;
        }
        resp.raw_text = reply.text;
        resp.extracted_code = extract_code_block(reply.text);

        std::string trimmed = resp.extracted_code;
        while (!trimmed.empty() && (trimmed.back() == '\n' || trimmed.back() == ' ')) trimmed.pop_back();
        if (trimmed.empty()) {
            resp.accepted = false;
            resp.reject_reason = "empty";
            responses[i] = std::move(resp);
            return;
        }
        if (!lexically_sane(resp.extracted_code)) {
            resp.accepted = false;
            resp.reject_reason = "lexical";
            responses[i] = std::move(resp);
            return;
        }

        // Dissimilarity from the seed snippet embedded in the prompt.
        const size_t begin = req.prompt_text.find(kSeedBeginDelimiter);
        const size_t end = req.prompt_text.find(kSeedEndDelimiter);
        std::string seed_snippet;
        if (begin != std::string::npos && end != std::string::npos) {
            const size_t body = begin + kSeedBeginDelimiter.size();
            seed_snippet = req.prompt_text.substr(body, end - body);
        }
        const ShingleSet seed_shingles = make_shingles("seed", seed_snippet, options.shingle_ngram);
        const ShingleSet code_shingles = make_shingles("code", resp.extracted_code, options.shingle_ngram);
        if (jaccard_exact(seed_shingles, code_shingles) >= options.seed_jaccard_bound) {
            resp.accepted = false;
            resp.reject_reason = "near-duplicate of seed";
            responses[i] = std::move(resp);
            return;
        }
        if (options.decontam_index && contamination_hits(resp.extracted_code, *options.decontam_index) > 0) {
            resp.accepted = false;
            resp.reject_reason = "benchmark contamination";
            responses[i] = std::move(resp);
            return;
        }
        resp.accepted = true;
        responses[i] = std::move(resp);
    };

    const size_t workers = std::max<size_t>(1, options.workers);
    if (workers == 1 || requests.size() < 2 * workers) {
        for (size_t i = 0; i < requests.size(); ++i) handle(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> cursor{0};
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const size_t i = cursor.fetch_add(1);
                    if (i >= requests.size()) break;
                    handle(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    return responses;
}

AssembledCorpus assemble_phase3_corpus(const std::vector<GenerationResponse>& responses,
                                       const std::vector<CodeDocument>& passthrough,
                                       const std::string& template_id,
                                       const TokenizerSpec& tokenizer,
                                       const LanguageSet& languages) {
    AssembledCorpus out;
    std::unordered_set<std::string> ids;
    for (const auto& doc : passthrough) {
        if (!ids.insert(doc.id).second) {
            throw DataError("assemble: duplicate passthrough id " + doc.id);
        }
        out.documents.push_back(doc);
    }
    for (const auto& resp : responses) {
        if (!resp.accepted) continue;
        CodeDocument doc;
        doc.repo_name = "synthetic/" + template_id;
        doc.path = resp.request_id + ".txt";
        auto lang = languages.canonicalize(resp.language);
        if (!lang) {
            throw DataError("assemble: response " + resp.request_id +
                            " has unknown language " + resp.language);
        }
        doc.language = lang->name;
        doc.content = resp.extracted_code;
        doc.id = "synth-" + resp.request_id;
        doc.token_count = count_tokens(doc.content, tokenizer);
        if (!ids.insert(doc.id).second) {
            throw DataError("assemble: duplicate synthetic id " + doc.id);
        }
        out.seed_provenance.emplace_back(doc.id, resp.seed_doc_id);
        out.documents.push_back(std::move(doc));
    }
    std::sort(out.documents.begin(), out.documents.end(),
              [](const CodeDocument& a, const CodeDocument& b) { return a.id < b.id; });
    std::sort(out.seed_provenance.begin(), out.seed_provenance.end());
    return out;
}

void write_request_log(const std::vector<GenerationRequest>& requests, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write request log: " + path.string());
    for (const auto& req : requests) {
        json j;
        j["request_id"] = req.request_id;
        j["seed_doc_id"] = req.seed_doc_id;
        j["language"] = req.language;
        j["prompt_text"] = req.prompt_text;
        j["max_seed_chars"] = req.max_seed_chars;
        out << j.dump() << '\n';
    }
}

void write_response_log(const std::vector<GenerationResponse>& responses, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write response log: " + path.string());
    for (const auto& resp : responses) {
        json j;
        j["request_id"] = resp.request_id;
        j["seed_doc_id"] = resp.seed_doc_id;
        j["language"] = resp.language;
        j["raw_text"] = resp.raw_text;
        j["extracted_code"] = resp.extracted_code;
        j["accepted"] = resp.accepted;
        j["reject_reason"] = resp.reject_reason;
        j["attempts"] = resp.attempts;
        out << j.dump() << '\n';
    }
}

std::vector<GenerationResponse> read_response_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("response log not found: " + path.string());
    std::vector<GenerationResponse> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        GenerationResponse resp;
        resp.request_id = j.at("request_id").get<std::string>();
        resp.seed_doc_id = j.at("seed_doc_id").get<std::string>();
        resp.language = j.at("language").get<std::string>();
        resp.raw_text = j.value("raw_text", "");
        resp.extracted_code = j.value("extracted_code", "");
        resp.accepted = j.at("accepted").get<bool>();
        resp.reject_reason = j.value("reject_reason", "");
        resp.attempts = j.value("attempts", uint32_t{1});
        out.push_back(std::move(resp));
    }
    return out;
}

} // namespace codesieve
