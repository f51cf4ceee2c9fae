// SPDX-License-Identifier: Apache-2.0
//
// Shard and manifest I/O. A corpus shard is UTF-8 text, one JSON record per
// line with keys "id" (optional), "repo_name", "path", "language",
// "content". Shards whose filename ends in .gz are gzip-compressed.
#pragma once

#include "codesieve/document.hpp"
#include "codesieve/language.hpp"
#include "codesieve/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace codesieve {

// Manifest describing a corpus: shard paths (relative to the manifest file),
// tokenizer spec, declared language set, and the 64-bit master seed.
struct CorpusManifest {
    std::vector<std::filesystem::path> shards;
    TokenizerSpec tokenizer;
    LanguageSet languages = LanguageSet::default_set();
    uint64_t master_seed = 0;
};

CorpusManifest read_corpus_manifest(const std::filesystem::path& path);
void write_corpus_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

// Line-oriented reader that transparently handles .gz shards.
class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    // Returns false at end of input. The returned line has no trailing newline.
    bool next(std::string& line);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class ShardWriter {
public:
    explicit ShardWriter(const std::filesystem::path& path); // .gz suffix → gzip
    ~ShardWriter();
    ShardWriter(const ShardWriter&) = delete;
    ShardWriter& operator=(const ShardWriter&) = delete;

    void write(const CodeDocument& doc);
    void write_line(const std::string& line);
    void close();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::string document_to_json_line(const CodeDocument& doc);

enum class IngestPolicy {
    fail_fast,      // first malformed record aborts the shard
    skip_and_count, // malformed records are reported and skipped
};

struct IngestError {
    std::filesystem::path shard;
    uint64_t line_number = 0; // 1-based
    std::string reason;
};

// Optional heuristic filters; all disabled by default. A document failing an
// enabled filter is rejected like any other invalid record.
struct IngestFilters {
    std::optional<uint64_t> max_line_length;   // longest line, in bytes
    std::optional<double> min_alpha_ratio;     // alnum bytes / non-space bytes
};

struct IngestOptions {
    IngestPolicy policy = IngestPolicy::skip_and_count;
    IngestFilters filters;
};

struct IngestResult {
    std::vector<CodeDocument> documents;
    std::vector<IngestError> errors;
};

// Validate and yield one CodeDocument per well-formed record, in file order,
// with token_count populated under the manifest's tokenizer spec.
IngestResult ingest_shard(const std::filesystem::path& shard_path,
                          const LanguageSet& expected_languages,
                          const TokenizerSpec& tokenizer,
                          const IngestOptions& options = {});

// Shard-by-shard ingest over a whole manifest with a corpus-wide duplicate-id
// check. Documents keep (shard order, file order).
IngestResult ingest_corpus(const CorpusManifest& manifest,
                           const std::filesystem::path& manifest_dir,
                           const IngestOptions& options = {});

// Write a whole collection as a single shard (used by stage handoff files).
void write_shard(const std::vector<CodeDocument>& docs, const std::filesystem::path& path);

// Read a stage handoff shard produced by write_shard (strict: any malformed
// record is an error).
std::vector<CodeDocument> read_shard(const std::filesystem::path& path,
                                     const LanguageSet& languages,
                                     const TokenizerSpec& tokenizer);

} // namespace codesieve
