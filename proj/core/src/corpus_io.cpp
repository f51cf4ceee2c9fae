// SPDX-License-Identifier: Apache-2.0
#include "codesieve/corpus_io.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <json.hpp>
#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <unordered_set>

namespace codesieve {

using nlohmann::json;

namespace {

bool has_gz_suffix(const std::filesystem::path& path) {
    return path.extension() == ".gz";
}

} // namespace

std::string derive_document_id(const std::string& repo_name,
                               const std::string& path,
                               const std::string& content) {
    uint64_t h = fnv1a64(repo_name);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(path, h);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(hash128(content).lo, h);
    return to_hex(h);
}

bool is_valid_utf8(std::string_view bytes) {
    size_t i = 0;
    const size_t n = bytes.size();
    while (i < n) {
        const unsigned char c = static_cast<unsigned char>(bytes[i]);
        size_t len;
        uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1Fu;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0Fu;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07u;
        } else {
            return false;
        }
        if (i + len > n) return false;
        for (size_t k = 1; k < len; ++k) {
            const unsigned char cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3Fu);
        }
        // overlong encodings, surrogates, and out-of-range code points
        if (len == 2 && cp < 0x80) return false;
        if (len == 3 && cp < 0x800) return false;
        if (len == 4 && cp < 0x10000) return false;
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;
        if (cp > 0x10FFFF) return false;
        i += len;
    }
    return true;
}

// ---------------------------------------------------------------------------
// LineReader / ShardWriter

struct LineReader::Impl {
    gzFile gz = nullptr;
    std::ifstream plain;
    bool use_gz = false;
    std::vector<char> buf;
};

LineReader::LineReader(const std::filesystem::path& path) : impl_(new Impl) {
    if (!std::filesystem::exists(path)) {
        throw UpstreamMissingError("shard not found: " + path.string());
    }
    impl_->use_gz = has_gz_suffix(path);
    if (impl_->use_gz) {
        impl_->gz = gzopen(path.string().c_str(), "rb");
        if (!impl_->gz) throw DataError("cannot open gzip shard: " + path.string());
        impl_->buf.resize(1 << 16);
    } else {
        impl_->plain.open(path, std::ios::binary);
        if (!impl_->plain) throw DataError("cannot open shard: " + path.string());
    }
}

LineReader::~LineReader() {
    if (impl_ && impl_->gz) gzclose(impl_->gz);
}

bool LineReader::next(std::string& line) {
    if (impl_->use_gz) {
        line.clear();
        bool got = false;
        while (true) {
            char* r = gzgets(impl_->gz, impl_->buf.data(), static_cast<int>(impl_->buf.size()));
            if (!r) break;
            got = true;
            line.append(r);
            if (!line.empty() && line.back() == '\n') {
                line.pop_back();
                break;
            }
            // long line: keep appending
        }
        if (!got) return false;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
    }
    if (!std::getline(impl_->plain, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

struct ShardWriter::Impl {
    gzFile gz = nullptr;
    std::ofstream plain;
    bool use_gz = false;
};

ShardWriter::ShardWriter(const std::filesystem::path& path) : impl_(new Impl) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    impl_->use_gz = has_gz_suffix(path);
    if (impl_->use_gz) {
        impl_->gz = gzopen(path.string().c_str(), "wb");
        if (!impl_->gz) throw DataError("cannot create gzip shard: " + path.string());
    } else {
        impl_->plain.open(path, std::ios::binary | std::ios::trunc);
        if (!impl_->plain) throw DataError("cannot create shard: " + path.string());
    }
}

ShardWriter::~ShardWriter() {
    close();
}

void ShardWriter::close() {
    if (impl_ && impl_->gz) {
        gzclose(impl_->gz);
        impl_->gz = nullptr;
    }
    if (impl_ && impl_->plain.is_open()) impl_->plain.close();
}

void ShardWriter::write_line(const std::string& line) {
    if (impl_->use_gz) {
        if (gzwrite(impl_->gz, line.data(), static_cast<unsigned>(line.size())) <= 0 && !line.empty()) {
            throw DataError("gzip write failed");
        }
        gzputc(impl_->gz, '\n');
    } else {
        impl_->plain << line << '\n';
    }
}

void ShardWriter::write(const CodeDocument& doc) {
    write_line(document_to_json_line(doc));
}

std::string document_to_json_line(const CodeDocument& doc) {
    json j;
    j["id"] = doc.id;
    j["repo_name"] = doc.repo_name;
    j["path"] = doc.path;
    j["language"] = doc.language;
    j["content"] = doc.content;
    j["token_count"] = doc.token_count;
    return j.dump();
}

// ---------------------------------------------------------------------------
// Manifest

CorpusManifest read_corpus_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("corpus manifest not found: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("corpus manifest parse error: " + std::string(e.what()));
    }
    CorpusManifest m;
    if (!j.contains("shards") || !j["shards"].is_array()) {
        throw ConfigError("corpus manifest: missing \"shards\" array");
    }
    for (const auto& s : j["shards"]) m.shards.emplace_back(s.get<std::string>());
    if (j.contains("tokenizer")) {
        const auto& t = j["tokenizer"];
        m.tokenizer.kind = tokenizer_kind_from_name(t.value("kind", "approximate-regex"));
        m.tokenizer.vocab_size = t.value("vocab_size", uint64_t{64000});
        if (t.contains("parameters")) {
            for (auto it = t["parameters"].begin(); it != t["parameters"].end(); ++it) {
                m.tokenizer.parameters[it.key()] = it.value().get<std::string>();
            }
        }
    }
    if (j.contains("languages")) {
        m.languages = LanguageSet(j["languages"].get<std::vector<std::string>>());
    }
    m.master_seed = j.value("master_seed", uint64_t{0});
    return m;
}

void write_corpus_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["shards"] = json::array();
    for (const auto& s : manifest.shards) j["shards"].push_back(s.string());
    j["tokenizer"] = {
        {"kind", tokenizer_kind_name(manifest.tokenizer.kind)},
        {"vocab_size", manifest.tokenizer.vocab_size},
        {"parameters", manifest.tokenizer.parameters},
    };
    j["languages"] = manifest.languages.names();
    j["master_seed"] = manifest.master_seed;
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Ingest

namespace {

bool passes_filters(const std::string& content, const IngestFilters& filters, std::string& reason) {
    if (filters.max_line_length) {
        size_t longest = 0, current = 0;
        for (char c : content) {
            if (c == '\n') {
                longest = std::max(longest, current);
                current = 0;
            } else {
                ++current;
            }
        }
        longest = std::max(longest, current);
        if (longest > *filters.max_line_length) {
            reason = "line length " + std::to_string(longest) + " exceeds max_line_length";
            return false;
        }
    }
    if (filters.min_alpha_ratio) {
        uint64_t alnum = 0, visible = 0;
        for (unsigned char c : content) {
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
            ++visible;
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) ++alnum;
        }
        const double ratio = visible == 0 ? 0.0 : static_cast<double>(alnum) / static_cast<double>(visible);
        if (visible > 0 && ratio < *filters.min_alpha_ratio) {
            reason = "alpha ratio below min_alpha_ratio";
            return false;
        }
    }
    return true;
}

} // namespace

IngestResult ingest_shard(const std::filesystem::path& shard_path,
                          const LanguageSet& expected_languages,
                          const TokenizerSpec& tokenizer,
                          const IngestOptions& options) {
    IngestResult result;
    LineReader reader(shard_path);
    std::string line;
    uint64_t line_number = 0;

    auto record_error = [&](const std::string& reason) {
        if (options.policy == IngestPolicy::fail_fast) {
            throw DataError(shard_path.string() + ":" + std::to_string(line_number) + ": " + reason);
        }
        result.errors.push_back({shard_path, line_number, reason});
    };

    while (reader.next(line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            record_error("malformed record");
            continue;
        }
        std::string missing;
        for (const char* key : {"repo_name", "path", "language", "content"}) {
            if (!j.contains(key) || !j[key].is_string()) {
                missing = key;
                break;
            }
        }
        if (!missing.empty()) {
            record_error("missing or non-string field \"" + missing + "\"");
            continue;
        }

        CodeDocument doc;
        doc.repo_name = j["repo_name"].get<std::string>();
        doc.path = j["path"].get<std::string>();
        doc.content = j["content"].get<std::string>();

        const std::string lang_raw = j["language"].get<std::string>();
        auto tag = expected_languages.canonicalize(lang_raw);
        if (!tag) {
            record_error("unknown language \"" + lang_raw + "\"");
            continue;
        }
        doc.language = tag->name;

        if (!is_valid_utf8(doc.content)) {
            record_error("content is not valid UTF-8");
            continue;
        }

        std::string filter_reason;
        if (!passes_filters(doc.content, options.filters, filter_reason)) {
            record_error(filter_reason);
            continue;
        }

        if (j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty()) {
            doc.id = j["id"].get<std::string>();
        } else {
            doc.id = derive_document_id(doc.repo_name, doc.path, doc.content);
        }
        doc.token_count = count_tokens(doc.content, tokenizer);
        result.documents.push_back(std::move(doc));
    }
    return result;
}

IngestResult ingest_corpus(const CorpusManifest& manifest,
                           const std::filesystem::path& manifest_dir,
                           const IngestOptions& options) {
    IngestResult all;
    std::unordered_set<std::string> seen_ids;
    for (const auto& shard : manifest.shards) {
        const auto path = shard.is_absolute() ? shard : manifest_dir / shard;
        IngestResult one = ingest_shard(path, manifest.languages, manifest.tokenizer, options);
        for (auto& err : one.errors) all.errors.push_back(std::move(err));
        for (auto& doc : one.documents) {
            if (!seen_ids.insert(doc.id).second) {
                if (options.policy == IngestPolicy::fail_fast) {
                    throw DataError("duplicate document id across corpus: " + doc.id);
                }
                all.errors.push_back({path, 0, "duplicate document id: " + doc.id});
                continue;
            }
            all.documents.push_back(std::move(doc));
        }
    }
    return all;
}

void write_shard(const std::vector<CodeDocument>& docs, const std::filesystem::path& path) {
    ShardWriter writer(path);
    for (const auto& doc : docs) writer.write(doc);
    writer.close();
}

std::vector<CodeDocument> read_shard(const std::filesystem::path& path,
                                     const LanguageSet& languages,
                                     const TokenizerSpec& tokenizer) {
    IngestOptions strict;
    strict.policy = IngestPolicy::fail_fast;
    return ingest_shard(path, languages, tokenizer, strict).documents;
}

} // namespace codesieve
