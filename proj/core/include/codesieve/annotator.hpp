// SPDX-License-Identifier: Apache-2.0
//
// Model-based quality annotator: a linear head (classification or
// regression) over hashed n-gram features, with chunk-averaged scoring for
// long documents and an import path for externally computed embeddings.
#pragma once

#include "codesieve/document.hpp"
#include "codesieve/features.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace codesieve {

enum class AnnotatorMode {
    classification, // sigmoid output in [0,1]
    regression,     // output clamped to [0,5]
};

// Long documents are scored on fixed character windows: the first
// chunk_chars, a window centered at the midpoint, and the last chunk_chars.
// A document no longer than chunk_chars is scored as one whole-document
// chunk. Windows may overlap and are scored independently.
struct ChunkPolicy {
    uint64_t chunk_chars = 2000;
};

// Byte ranges [begin, end) of the chunks the policy scores.
std::vector<std::pair<size_t, size_t>> chunk_ranges(size_t content_size, const ChunkPolicy& policy);

struct AnnotatorModel {
    AnnotatorMode mode = AnnotatorMode::classification;
    FeatureSpec feature_spec;
    ChunkPolicy chunk_policy;
    std::vector<double> weights; // dense, length feature_spec.dim()
    double bias = 0.0;
    std::string recipe_name;
    std::vector<double> loss_trace;     // mean training loss per epoch
    std::string provenance_hash;        // hash over recipe + example ids

    // Raw head output for one chunk of text (sigmoid applied in
    // classification mode, clamped to [0,5] in regression mode).
    double chunk_score(std::string_view chunk_text) const;
};

struct LabeledExample {
    std::string id;
    std::string text;
    double label = 0.0; // {0,1} for classification, [0,5] for regression
};

struct TrainingRecipe {
    std::string name; // e.g. "ann-best" or custom
    AnnotatorMode mode = AnnotatorMode::classification;
    std::vector<LabeledExample> examples;
};

// Canonical positive-blend composition of the named annotator recipes
// (counts of examples drawn from each source role).
struct RecipeComposition {
    std::string name;
    AnnotatorMode mode;
    std::map<std::string, uint64_t> positive_sources; // source role -> count
    uint64_t negatives = 0;                           // random corpus documents
};
const std::vector<RecipeComposition>& named_recipe_compositions();
const RecipeComposition& recipe_composition(const std::string& name);

struct TrainingHyper {
    uint32_t epochs = 3;
    double learning_rate = 0.1; // decays as 1/t
    double l2 = 1e-6;
    uint64_t shuffle_seed = 0;
    bool average_epochs = true; // average end-of-epoch iterates over the last half
};

// Logistic-loss (classification) or squared-loss (regression) minimization
// by stochastic gradient passes in a seed-fixed shuffle order.
AnnotatorModel train_annotator(const TrainingRecipe& recipe,
                               const TrainingHyper& hyper,
                               const FeatureSpec& spec = {},
                               const ChunkPolicy& chunks = {});

// Mean of per-chunk model outputs under the chunk policy.
double score_document(const AnnotatorModel& model, const CodeDocument& doc);

struct ScoredDocument {
    std::string doc_id;
    std::string language;
    double score = 0.0;
    uint64_t token_count = 0;
};

// Pure map of score_document over a collection, in input order. workers > 1
// splits the work; output is identical regardless of worker count.
std::vector<ScoredDocument> score_corpus(const AnnotatorModel& model,
                                         const std::vector<CodeDocument>& docs,
                                         size_t workers = 1);

// Full-batch diagnostics used by training and by gradient checks.
double batch_logistic_loss(const std::vector<FeatureVector>& xs,
                           const std::vector<double>& ys,
                           const std::vector<double>& weights,
                           double bias,
                           double l2);
void batch_logistic_grad(const std::vector<FeatureVector>& xs,
                         const std::vector<double>& ys,
                         const std::vector<double>& weights,
                         double bias,
                         double l2,
                         std::vector<double>& grad_w,
                         double& grad_b);

// Model container I/O (versioned binary container).
void save_annotator(const AnnotatorModel& model, const std::filesystem::path& path);
AnnotatorModel load_annotator(const std::filesystem::path& path);

// Scores from externally computed embeddings: score = sigmoid(head.v + bias)
// per (doc_id, vector) record.
struct EmbeddingHead {
    std::vector<double> weights;
    double bias = 0.0;
};
std::vector<ScoredDocument> import_embedding_scores(const std::filesystem::path& vectors_file,
                                                    const EmbeddingHead& head);

// Score output: record-per-line (doc_id, language, score[, token_count]).
void write_scores(const std::vector<ScoredDocument>& scores, const std::filesystem::path& path);
std::vector<ScoredDocument> read_scores(const std::filesystem::path& path);

double sigmoid(double z);

} // namespace codesieve
