// SPDX-License-Identifier: Apache-2.0
#include "codesieve/annotator.hpp"

#include "codesieve/errors.hpp"
#include "codesieve/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>
#include <unordered_set>

namespace codesieve {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::vector<std::pair<size_t, size_t>> chunk_ranges(size_t content_size, const ChunkPolicy& policy) {
    const size_t cc = static_cast<size_t>(policy.chunk_chars);
    if (content_size <= cc) {
        return {{0, content_size}};
    }
    const size_t mid_start = (content_size - cc) / 2;
    return {
        {0, cc},                              // top
        {mid_start, mid_start + cc},          // middle, centered at midpoint
        {content_size - cc, content_size},    // bottom
    };
}

double AnnotatorModel::chunk_score(std::string_view chunk_text) const {
    const FeatureVector x = featurize(chunk_text, feature_spec);
    const double z = x.dot(weights) + bias;
    if (mode == AnnotatorMode::classification) {
        return sigmoid(z);
    }
    return std::clamp(z, 0.0, 5.0);
}

double score_document(const AnnotatorModel& model, const CodeDocument& doc) {
    const auto ranges = chunk_ranges(doc.content.size(), model.chunk_policy);
    double sum = 0.0;
    for (const auto& [begin, end] : ranges) {
        sum += model.chunk_score(std::string_view(doc.content).substr(begin, end - begin));
    }
    return sum / static_cast<double>(ranges.size());
}

std::vector<ScoredDocument> score_corpus(const AnnotatorModel& model,
                                         const std::vector<CodeDocument>& docs,
                                         size_t workers) {
    std::vector<ScoredDocument> out(docs.size());
    auto score_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            out[i] = {docs[i].id, docs[i].language, score_document(model, docs[i]), docs[i].token_count};
        }
    };
    workers = std::max<size_t>(1, workers);
    if (workers == 1 || docs.size() < 2 * workers) {
        score_range(0, docs.size());
    } else {
        std::vector<std::thread> pool;
        const size_t step = (docs.size() + workers - 1) / workers;
        for (size_t w = 0; w < workers; ++w) {
            const size_t begin = w * step;
            const size_t end = std::min(docs.size(), begin + step);
            if (begin >= end) break;
            pool.emplace_back(score_range, begin, end);
        }
        for (auto& t : pool) t.join();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training

const std::vector<RecipeComposition>& named_recipe_compositions() {
    static const std::vector<RecipeComposition> recipes = {
        {"ann-edu", AnnotatorMode::regression, {{"edu-annotations", 400000}}, 0},
        {"ann-ins", AnnotatorMode::classification,
         {{"edu-high", 100000}, {"instruction", 100000}}, 200000},
        {"ann-hq", AnnotatorMode::classification, {{"high-quality-files", 220000}}, 220000},
        {"ann-best", AnnotatorMode::classification,
         {{"high-quality-files", 220000}, {"instruction", 80000}}, 300000},
    };
    return recipes;
}

const RecipeComposition& recipe_composition(const std::string& name) {
    for (const auto& r : named_recipe_compositions()) {
        if (r.name == name) return r;
    }
    throw ConfigError("annotator: unknown recipe '" + name + "'");
}

double batch_logistic_loss(const std::vector<FeatureVector>& xs,
                           const std::vector<double>& ys,
                           const std::vector<double>& weights,
                           double bias,
                           double l2) {
    double loss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double z = xs[i].dot(weights) + bias;
        // log(1 + e^z) - y z, computed stably
        loss += std::max(z, 0.0) - ys[i] * z + std::log1p(std::exp(-std::abs(z)));
    }
    double reg = 0.0;
    for (double w : weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

void batch_logistic_grad(const std::vector<FeatureVector>& xs,
                         const std::vector<double>& ys,
                         const std::vector<double>& weights,
                         double bias,
                         double l2,
                         std::vector<double>& grad_w,
                         double& grad_b) {
    grad_w.assign(weights.size(), 0.0);
    grad_b = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double z = xs[i].dot(weights) + bias;
        const double g = sigmoid(z) - ys[i];
        for (size_t k = 0; k < xs[i].indices.size(); ++k) {
            grad_w[xs[i].indices[k]] += g * xs[i].values[k];
        }
        grad_b += g;
    }
    for (size_t j = 0; j < weights.size(); ++j) {
        grad_w[j] += l2 * weights[j];
    }
}

AnnotatorModel train_annotator(const TrainingRecipe& recipe,
                               const TrainingHyper& hyper,
                               const FeatureSpec& spec,
                               const ChunkPolicy& chunks) {
    if (recipe.examples.empty()) {
        throw ConfigError("annotator: recipe '" + recipe.name + "' has no examples");
    }
    if (recipe.mode == AnnotatorMode::classification) {
        size_t pos = 0, neg = 0;
        for (const auto& ex : recipe.examples) {
            (ex.label > 0.5 ? pos : neg)++;
        }
        if (pos == 0 || neg == 0) {
            throw ConfigError("annotator: classification recipe '" + recipe.name +
                              "' needs both classes (" + std::to_string(pos) + " positive, " +
                              std::to_string(neg) + " negative)");
        }
    }

    const size_t n = recipe.examples.size();
    std::vector<FeatureVector> xs(n);
    std::vector<double> ys(n);
    uint64_t prov = kFnvOffset;
    for (size_t i = 0; i < n; ++i) {
        xs[i] = featurize(recipe.examples[i].text, spec);
        ys[i] = recipe.examples[i].label;
        prov = fnv1a64(recipe.examples[i].id, prov);
        prov = fnv1a64(static_cast<uint64_t>(ys[i] * 1000.0), prov);
    }

    const uint64_t dim = spec.dim();
    std::vector<double> v(dim, 0.0); // true weights = scale * v
    double scale = 1.0;
    double bias = 0.0;

    std::vector<double> avg;
    double avg_bias = 0.0;
    size_t avg_count = 0;
    const uint32_t avg_start = hyper.average_epochs ? hyper.epochs / 2 : hyper.epochs;

    AnnotatorModel model;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    uint64_t step = 0;
    for (uint32_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        stable_shuffle(order, derive_seed(hyper.shuffle_seed, epoch));
        double epoch_loss = 0.0;
        for (size_t k = 0; k < n; ++k) {
            const size_t i = order[k];
            const double lr = hyper.learning_rate /
                              (1.0 + static_cast<double>(step) / static_cast<double>(n));
            const double z = scale * xs[i].dot(v) + bias;
            double g;
            if (recipe.mode == AnnotatorMode::classification) {
                const double y = ys[i];
                epoch_loss += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
                g = sigmoid(z) - y;
            } else {
                const double r = z - ys[i];
                epoch_loss += 0.5 * r * r;
                g = r;
            }
            if (!std::isfinite(epoch_loss)) {
                throw DataError("annotator: training diverged (non-finite loss); "
                                "reduce hyper.learning_rate (current " +
                                std::to_string(hyper.learning_rate) + ")");
            }
            if (hyper.l2 > 0.0) {
                scale *= (1.0 - lr * hyper.l2);
                if (scale <= 0.0 || !std::isfinite(scale)) {
                    throw DataError("annotator: l2 decay collapsed the weight scale; "
                                    "reduce hyper.l2 or hyper.learning_rate");
                }
            }
            for (size_t j = 0; j < xs[i].indices.size(); ++j) {
                v[xs[i].indices[j]] -= lr * g * xs[i].values[j] / scale;
            }
            bias -= lr * g;
            ++step;
        }
        model.loss_trace.push_back(epoch_loss / static_cast<double>(n));
        if (epoch >= avg_start) {
            if (avg.empty()) avg.assign(dim, 0.0);
            for (size_t j = 0; j < dim; ++j) avg[j] += scale * v[j];
            avg_bias += bias;
            ++avg_count;
        }
    }

    model.mode = recipe.mode;
    model.feature_spec = spec;
    model.chunk_policy = chunks;
    model.recipe_name = recipe.name;
    model.provenance_hash = to_hex(prov);
    model.weights.resize(dim);
    if (hyper.average_epochs && avg_count > 0) {
        for (size_t j = 0; j < dim; ++j) model.weights[j] = avg[j] / static_cast<double>(avg_count);
        model.bias = avg_bias / static_cast<double>(avg_count);
    } else {
        for (size_t j = 0; j < dim; ++j) model.weights[j] = scale * v[j];
        model.bias = bias;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Model container I/O (msgpack-framed JSON, version field first)

namespace {
constexpr int kModelVersion = 1;

json mode_to_json(AnnotatorMode mode) {
    return mode == AnnotatorMode::classification ? "classification" : "regression";
}

AnnotatorMode mode_from_json(const std::string& s) {
    if (s == "classification") return AnnotatorMode::classification;
    if (s == "regression") return AnnotatorMode::regression;
    throw ConfigError("annotator: unknown mode '" + s + "' in model file");
}
} // namespace

void save_annotator(const AnnotatorModel& model, const std::filesystem::path& path) {
    json j;
    j["version"] = kModelVersion;
    j["mode"] = mode_to_json(model.mode);
    j["feature_spec"] = {
        {"dim_log2", model.feature_spec.dim_log2},
        {"hash_seed", model.feature_spec.hash_seed},
        {"use_bigrams", model.feature_spec.use_bigrams},
    };
    j["chunk_chars"] = model.chunk_policy.chunk_chars;
    j["bias"] = model.bias;
    j["recipe_name"] = model.recipe_name;
    j["loss_trace"] = model.loss_trace;
    j["provenance_hash"] = model.provenance_hash;
    j["weights"] = model.weights;
    const auto bytes = json::to_msgpack(j);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

AnnotatorModel load_annotator(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UpstreamMissingError("model file not found: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j = json::from_msgpack(bytes, true, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("version")) {
        throw DataError("malformed model file: " + path.string());
    }
    if (j["version"].get<int>() != kModelVersion) {
        throw ConfigError("unsupported model version in " + path.string());
    }
    AnnotatorModel model;
    model.mode = mode_from_json(j["mode"].get<std::string>());
    model.feature_spec.dim_log2 = j["feature_spec"]["dim_log2"].get<uint32_t>();
    model.feature_spec.hash_seed = j["feature_spec"]["hash_seed"].get<uint64_t>();
    model.feature_spec.use_bigrams = j["feature_spec"]["use_bigrams"].get<bool>();
    model.chunk_policy.chunk_chars = j["chunk_chars"].get<uint64_t>();
    model.bias = j["bias"].get<double>();
    model.recipe_name = j["recipe_name"].get<std::string>();
    model.loss_trace = j["loss_trace"].get<std::vector<double>>();
    model.provenance_hash = j["provenance_hash"].get<std::string>();
    model.weights = j["weights"].get<std::vector<double>>();
    if (model.weights.size() != model.feature_spec.dim()) {
        throw DataError("model weight length does not match feature dimension");
    }
    return model;
}

// ---------------------------------------------------------------------------
// Embedding import

std::vector<ScoredDocument> import_embedding_scores(const std::filesystem::path& vectors_file,
                                                    const EmbeddingHead& head) {
    std::ifstream in(vectors_file);
    if (!in) throw UpstreamMissingError("vectors file not found: " + vectors_file.string());
    std::vector<ScoredDocument> out;
    std::unordered_set<std::string> seen;
    std::string line;
    uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("doc_id") || !j.contains("vector")) {
            throw DataError(vectors_file.string() + ":" + std::to_string(line_number) +
                            ": malformed vector record");
        }
        const auto vec = j["vector"].get<std::vector<double>>();
        if (vec.size() != head.weights.size()) {
            throw ConfigError("embedding dimension mismatch at line " + std::to_string(line_number) +
                              ": vector has " + std::to_string(vec.size()) + ", head expects " +
                              std::to_string(head.weights.size()));
        }
        const std::string id = j["doc_id"].get<std::string>();
        if (!seen.insert(id).second) {
            throw DataError("duplicate doc_id in vectors file: " + id);
        }
        double z = head.bias;
        for (size_t i = 0; i < vec.size(); ++i) z += head.weights[i] * vec[i];
        ScoredDocument rec;
        rec.doc_id = id;
        rec.language = j.value("language", "");
        rec.score = sigmoid(z);
        rec.token_count = j.value("token_count", uint64_t{0});
        out.push_back(std::move(rec));
    }
    return out;
}

void write_scores(const std::vector<ScoredDocument>& scores, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write scores file: " + path.string());
    for (const auto& rec : scores) {
        json j;
        j["doc_id"] = rec.doc_id;
        j["language"] = rec.language;
        j["score"] = rec.score;
        j["token_count"] = rec.token_count;
        out << j.dump() << '\n';
    }
}

std::vector<ScoredDocument> read_scores(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("scores file not found: " + path.string());
    std::vector<ScoredDocument> out;
    std::string line;
    uint64_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("doc_id") || !j.contains("score")) {
            throw DataError(path.string() + ":" + std::to_string(line_number) +
                            ": malformed score record");
        }
        out.push_back({j["doc_id"].get<std::string>(), j.value("language", ""),
                       j["score"].get<double>(), j.value("token_count", uint64_t{0})});
    }
    return out;
}

} // namespace codesieve
