// SPDX-License-Identifier: Apache-2.0
//
// Fixed-length sequence packing. Training documents are shuffled by seed,
// tokenized, joined by a document-boundary marker, and split into
// consecutive seq_len windows; documents straddle window boundaries and
// only the final window is padded.
#pragma once

#include "codesieve/grouping.hpp"
#include "codesieve/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace codesieve {

struct PackingParams {
    uint64_t seq_len = 8192;
    uint32_t pad_id = 0;
    uint32_t file_sep_id = 1;  // between member files of one training document
    uint32_t boundary_id = 2;  // after each training document
    uint32_t repetitions = 1;  // epochs; epoch i reshuffles with seed_i = derive(seed, i)
    uint64_t seed = 0;
    uint64_t shard_sequences = 1024; // sequences per output shard file
    bool debug_text = false;         // also write space-separated id lines
};

struct SourceSpan {
    std::string training_doc_id;
    uint64_t begin = 0; // token offsets within the sequence
    uint64_t end = 0;
};

struct PackedSequence {
    std::vector<uint32_t> tokens; // length exactly seq_len
    std::vector<SourceSpan> spans; // tile the non-pad region exactly
    uint64_t pad_count = 0;        // nonzero only on the final sequence
};

// Stable fold of a token piece into [3, vocab_size). Ids 0..2 are reserved
// for pad, file separator, and document boundary.
uint32_t fold_token_id(std::string_view piece, uint64_t vocab_size);

std::vector<PackedSequence> pack_sequences(
    const std::vector<TrainingDocument>& docs,
    const std::unordered_map<std::string, const CodeDocument*>& files_by_id,
    const TokenizerSpec& tokenizer,
    const PackingParams& params);

struct PackStats {
    uint64_t sequences = 0;
    uint64_t total_tokens = 0; // non-pad
    uint64_t pad_tokens = 0;
    uint64_t boundary_tokens = 0;
    std::vector<std::filesystem::path> shard_files;
};

// Sharded binary output (little-endian uint32 ids) with a record-per-line
// sidecar index of source spans, plus an optional text debug format.
PackStats write_packed_shards(const std::vector<PackedSequence>& sequences,
                              const std::filesystem::path& out_dir,
                              const PackingParams& params);

} // namespace codesieve
