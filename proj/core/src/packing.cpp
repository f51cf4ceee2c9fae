// SPDX-License-Identifier: Apache-2.0
#include "codesieve/packing.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace codesieve {

using nlohmann::json;

uint32_t fold_token_id(std::string_view piece, uint64_t vocab_size) {
    constexpr uint64_t reserved = 3;
    return static_cast<uint32_t>(reserved + fnv1a64(piece) % (vocab_size - reserved));
}

namespace {

// Accumulates tokens with doc attribution and flushes full windows.
class SequenceBuilder {
public:
    SequenceBuilder(uint64_t seq_len, std::vector<PackedSequence>& out)
        : seq_len_(seq_len), out_(out) {}

    void push(uint32_t token, const std::string& doc_id) {
        if (current_.tokens.empty()) current_.tokens.reserve(seq_len_);
        if (current_.spans.empty() || current_.spans.back().training_doc_id != doc_id) {
            const uint64_t pos = current_.tokens.size();
            current_.spans.push_back({doc_id, pos, pos});
        }
        current_.tokens.push_back(token);
        current_.spans.back().end = current_.tokens.size();
        if (current_.tokens.size() == seq_len_) flush(0);
    }

    void finish(uint32_t pad_id) {
        if (current_.tokens.empty()) return;
        const uint64_t pad = seq_len_ - current_.tokens.size();
        current_.tokens.resize(seq_len_, pad_id);
        flush(pad);
    }

private:
    void flush(uint64_t pad_count) {
        current_.pad_count = pad_count;
        out_.push_back(std::move(current_));
        current_ = PackedSequence{};
    }

    uint64_t seq_len_;
    std::vector<PackedSequence>& out_;
    PackedSequence current_;
};

} // namespace

std::vector<PackedSequence> pack_sequences(
    const std::vector<TrainingDocument>& docs,
    const std::unordered_map<std::string, const CodeDocument*>& files_by_id,
    const TokenizerSpec& tokenizer,
    const PackingParams& params) {
    if (params.seq_len == 0) throw ConfigError("packing: seq_len must be > 0");
    if (tokenizer.vocab_size <= 3) throw ConfigError("packing: vocab_size must exceed the 3 reserved ids");
    if (params.repetitions == 0) throw ConfigError("packing: repetitions must be >= 1");

    std::vector<PackedSequence> sequences;
    SequenceBuilder builder(params.seq_len, sequences);

    std::vector<size_t> base_order(docs.size());
    for (size_t i = 0; i < docs.size(); ++i) base_order[i] = i;
    // Stable starting point so the shuffle is a pure function of (seed, ids).
    std::sort(base_order.begin(), base_order.end(),
              [&](size_t a, size_t b) { return docs[a].id < docs[b].id; });

    for (uint32_t epoch = 0; epoch < params.repetitions; ++epoch) {
        std::vector<size_t> order = base_order;
        stable_shuffle(order, derive_seed(params.seed, epoch));
        for (size_t idx : order) {
            const TrainingDocument& doc = docs[idx];
            for (size_t m = 0; m < doc.member_ids.size(); ++m) {
                auto it = files_by_id.find(doc.member_ids[m]);
                if (it == files_by_id.end()) {
                    throw DataError("packing: training document " + doc.id +
                                    " references unknown file " + doc.member_ids[m]);
                }
                if (m > 0) builder.push(params.file_sep_id, doc.id);
                for (std::string_view piece : tokenize_pieces(it->second->content, tokenizer)) {
                    builder.push(fold_token_id(piece, tokenizer.vocab_size), doc.id);
                }
            }
            if (!doc.member_ids.empty()) builder.push(params.boundary_id, doc.id);
        }
    }
    builder.finish(params.pad_id);
    return sequences;
}

PackStats write_packed_shards(const std::vector<PackedSequence>& sequences,
                              const std::filesystem::path& out_dir,
                              const PackingParams& params) {
    std::filesystem::create_directories(out_dir);
    PackStats stats;
    const uint64_t per_shard = std::max<uint64_t>(1, params.shard_sequences);

    std::ofstream bin, idx, txt;
    uint64_t shard = 0, in_shard = 0;

    auto open_shard = [&]() {
        char name[32];
        std::snprintf(name, sizeof(name), "shard-%05llu", static_cast<unsigned long long>(shard));
        const auto base = out_dir / name;
        bin.open(base.string() + ".bin", std::ios::binary | std::ios::trunc);
        idx.open(base.string() + ".index.jsonl", std::ios::trunc);
        if (!bin || !idx) throw DataError("cannot write packed shard: " + base.string());
        if (params.debug_text) txt.open(base.string() + ".txt", std::ios::trunc);
        stats.shard_files.push_back(base.string() + ".bin");
    };

    for (size_t s = 0; s < sequences.size(); ++s) {
        if (in_shard == 0) open_shard();
        const PackedSequence& seq = sequences[s];
        for (uint32_t tok : seq.tokens) {
            unsigned char bytes[4] = {
                static_cast<unsigned char>(tok & 0xFF),
                static_cast<unsigned char>((tok >> 8) & 0xFF),
                static_cast<unsigned char>((tok >> 16) & 0xFF),
                static_cast<unsigned char>((tok >> 24) & 0xFF),
            };
            bin.write(reinterpret_cast<const char*>(bytes), 4);
        }
        json spans = json::array();
        for (const auto& span : seq.spans) {
            spans.push_back({span.training_doc_id, span.begin, span.end});
        }
        json j;
        j["seq"] = s;
        j["pad_count"] = seq.pad_count;
        j["spans"] = spans;
        idx << j.dump() << '\n';
        if (params.debug_text) {
            for (size_t t = 0; t < seq.tokens.size(); ++t) {
                if (t) txt << ' ';
                txt << seq.tokens[t];
            }
            txt << '\n';
        }

        stats.sequences += 1;
        stats.pad_tokens += seq.pad_count;
        stats.total_tokens += seq.tokens.size() - seq.pad_count;
        for (uint32_t tok : seq.tokens) {
            if (tok == params.boundary_id) ++stats.boundary_tokens;
        }

        if (++in_shard == per_shard) {
            bin.close();
            idx.close();
            if (params.debug_text) txt.close();
            in_shard = 0;
            ++shard;
        }
    }
    if (in_shard != 0) {
        bin.close();
        idx.close();
        if (params.debug_text) txt.close();
    }
    return stats;
}

} // namespace codesieve
