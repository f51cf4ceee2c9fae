// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "codesieve/annotator.hpp"
#include "codesieve/errors.hpp"
#include "codesieve/eval.hpp"
#include "codesieve/features.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/tokenizer.hpp"
#include "testutil.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

using namespace codesieve;

namespace {

FeatureSpec small_spec(uint32_t dim_log2 = 10) {
    FeatureSpec spec;
    spec.dim_log2 = dim_log2;
    return spec;
}

// Separable corpus: positives carry a planted marker token.
TrainingRecipe separable_recipe(uint64_t seed, size_t per_class, const char* marker = "quasar_marker") {
    TrainingRecipe recipe;
    recipe.name = "separable";
    recipe.mode = AnnotatorMode::classification;
    for (size_t i = 0; i < per_class; ++i) {
        auto pos = testutil::make_document(seed, i, "Python", "r");
        pos.content += std::string("\n") + marker + " = 1\n";
        recipe.examples.push_back({"pos-" + std::to_string(i), pos.content, 1.0});
        auto neg = testutil::make_document(seed, per_class + i, "Python", "r");
        recipe.examples.push_back({"neg-" + std::to_string(i), neg.content, 0.0});
    }
    return recipe;
}

} // namespace

TEST_SUITE_BEGIN("features");

TEST_CASE("featurize: empty content gives an empty vector") {
    const auto vec = featurize("", small_spec());
    CHECK(vec.indices.empty());
    CHECK(vec.values.empty());
    CHECK(vec.l2_norm() == 0.0);
}

TEST_CASE("featurize: bag symmetry for unigrams, asymmetry for bigrams") {
    FeatureSpec unigram_only = small_spec();
    unigram_only.use_bigrams = false;
    const auto ab_u = featurize("a b", unigram_only);
    const auto ba_u = featurize("b a", unigram_only);
    CHECK(ab_u.indices == ba_u.indices);
    CHECK(ab_u.values == ba_u.values);

    const auto ab = featurize("a b", small_spec());
    const auto ba = featurize("b a", small_spec());
    CHECK((ab.indices != ba.indices || ab.values != ba.values));
}

TEST_CASE("featurize: matches an independent reference implementation") {
    const FeatureSpec spec = small_spec(12);
    const std::string content = "def load(x):\n    return parse(x) + 1\n";

    // Reference path: count n-grams in a map, hash with the published rule,
    // accumulate per bucket, then sort.
    const auto tokens = approx_tokenize(content);
    const double scale = 1.0 / std::sqrt(static_cast<double>(tokens.size()));
    std::map<uint32_t, double> expected;
    const uint64_t mask = spec.dim() - 1;
    auto bucket_of = [&](char kind, std::string_view a, std::string_view b) {
        uint64_t h = mix64(spec.hash_seed ^ static_cast<uint64_t>(kind));
        h = fnv1a64(a, h);
        if (!b.empty()) {
            h = fnv1a64(std::string_view("\x1f", 1), h);
            h = fnv1a64(b, h);
        }
        return static_cast<uint32_t>(mix64(h) & mask);
    };
    for (const auto& tok : tokens) expected[bucket_of('1', tok, {})] += scale;
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        expected[bucket_of('2', tokens[i], tokens[i + 1])] += scale;
    }

    const auto vec = featurize(content, spec);
    REQUIRE(vec.indices.size() == expected.size());
    size_t k = 0;
    for (const auto& [idx, val] : expected) {
        CHECK(vec.indices[k] == idx);
        CHECK(vec.values[k] == doctest::Approx(val).epsilon(1e-15));
        ++k;
    }
    // strictly increasing indices
    CHECK(std::is_sorted(vec.indices.begin(), vec.indices.end()));
    CHECK(std::adjacent_find(vec.indices.begin(), vec.indices.end()) == vec.indices.end());
}

TEST_CASE("featurize: pure function of (content, spec); seed changes the layout") {
    const std::string content = "some code here(1)";
    const auto a = featurize(content, small_spec());
    const auto b = featurize(content, small_spec());
    CHECK(a.indices == b.indices);
    CHECK(a.values == b.values);

    FeatureSpec other = small_spec();
    other.hash_seed = 777;
    const auto c = featurize(content, other);
    CHECK(a.indices != c.indices);
}

TEST_SUITE_END();

TEST_SUITE_BEGIN("annotator");

TEST_CASE("chunk_ranges: one chunk up to the limit, three beyond it") {
    ChunkPolicy policy{2000};
    CHECK(chunk_ranges(0, policy) == std::vector<std::pair<size_t, size_t>>{{0, 0}});
    CHECK(chunk_ranges(500, policy) == std::vector<std::pair<size_t, size_t>>{{0, 500}});
    CHECK(chunk_ranges(2000, policy) == std::vector<std::pair<size_t, size_t>>{{0, 2000}});
    const auto three = chunk_ranges(9000, policy);
    REQUIRE(three.size() == 3);
    CHECK(three[0] == std::pair<size_t, size_t>{0, 2000});
    CHECK(three[1] == std::pair<size_t, size_t>{3500, 5500}); // centered at 4500
    CHECK(three[2] == std::pair<size_t, size_t>{7000, 9000});
}

TEST_CASE("score_document: single-chunk rule below the limit") {
    AnnotatorModel model;
    model.feature_spec = small_spec();
    model.weights.assign(model.feature_spec.dim(), 0.01);
    model.bias = 0.1;
    CodeDocument doc = testutil::make_document(4, 0, "Python", "r", 8);
    REQUIRE(doc.content.size() <= 2000);
    CHECK(score_document(model, doc) == model.chunk_score(doc.content));
}

TEST_CASE("score_document: zero-weight classification model scores 0.5") {
    AnnotatorModel model;
    model.feature_spec = small_spec();
    model.weights.assign(model.feature_spec.dim(), 0.0);
    CodeDocument doc = testutil::make_document(4, 1, "Python", "r");
    CHECK(score_document(model, doc) == 0.5);
}

TEST_CASE("score_document: long document equals the hand-sliced chunk average") {
    AnnotatorModel model;
    model.feature_spec = small_spec();
    SplitMix64 rng(808);
    model.weights.resize(model.feature_spec.dim());
    for (auto& w : model.weights) w = (rng.next_double() - 0.5) * 0.2;
    model.bias = 0.05;

    CodeDocument doc = testutil::make_document(4, 2, "Python", "r", 300);
    REQUIRE(doc.content.size() >= 9000);
    doc.content.resize(9000);

    const std::string top = doc.content.substr(0, 2000);
    const std::string middle = doc.content.substr(3500, 2000);
    const std::string bottom = doc.content.substr(7000, 2000);
    const double expected =
        (model.chunk_score(top) + model.chunk_score(middle) + model.chunk_score(bottom)) / 3.0;
    CHECK(score_document(model, doc) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("train: separable corpus reaches training accuracy 1.0") {
    const auto recipe = separable_recipe(99, 60);
    TrainingHyper hyper;
    hyper.epochs = 4;
    AnnotatorModel model = train_annotator(recipe, hyper, small_spec(14));
    CHECK(model.loss_trace.size() == 4);

    size_t correct = 0;
    std::vector<std::pair<double, Label>> scored;
    for (const auto& ex : recipe.examples) {
        const double s = model.chunk_score(ex.text);
        if ((s >= 0.5) == (ex.label > 0.5)) ++correct;
        scored.emplace_back(s, ex.label > 0.5 ? Label::positive : Label::negative);
    }
    CHECK(correct == recipe.examples.size());
    CHECK(roc_auc(scored) == 1.0);
}

TEST_CASE("train: named recipe compositions carry the published counts") {
    const auto& best = recipe_composition("ann-best");
    CHECK(best.mode == AnnotatorMode::classification);
    CHECK(best.positive_sources.at("high-quality-files") == 220000);
    CHECK(best.positive_sources.at("instruction") == 80000);

    const auto& edu = recipe_composition("ann-edu");
    CHECK(edu.mode == AnnotatorMode::regression);
    CHECK(edu.positive_sources.at("edu-annotations") == 400000);

    const auto& ins = recipe_composition("ann-ins");
    CHECK(ins.positive_sources.at("edu-high") == 100000);
    CHECK(ins.positive_sources.at("instruction") == 100000);

    CHECK(recipe_composition("ann-hq").positive_sources.at("high-quality-files") == 220000);
    CHECK_THROWS_AS(recipe_composition("ann-nope"), ConfigError);
}

TEST_CASE("train: two-point regression converges to the mean") {
    TrainingRecipe recipe;
    recipe.name = "reg";
    recipe.mode = AnnotatorMode::regression;
    recipe.examples = {{"p1", "x", 0.0}, {"p2", "x", 4.0}};
    TrainingHyper hyper;
    hyper.epochs = 600;
    hyper.learning_rate = 0.1;
    hyper.l2 = 0.0;
    const AnnotatorModel model = train_annotator(recipe, hyper, small_spec(6));
    CHECK(model.chunk_score("x") == doctest::Approx(2.0).epsilon(0.005));
}

TEST_CASE("train: error paths") {
    TrainingRecipe empty_class;
    empty_class.name = "one-sided";
    empty_class.mode = AnnotatorMode::classification;
    empty_class.examples = {{"a", "text", 1.0}};
    CHECK_THROWS_AS(train_annotator(empty_class, TrainingHyper{}, small_spec()), ConfigError);

    TrainingRecipe diverging;
    diverging.name = "diverge";
    diverging.mode = AnnotatorMode::regression;
    diverging.examples = {{"a", "x y z", 0.0}, {"b", "x y z", 5.0}};
    TrainingHyper hyper;
    hyper.learning_rate = 1e9;
    hyper.epochs = 50;
    try {
        train_annotator(diverging, hyper, small_spec(6));
        FAIL("expected divergence");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
    }
}

TEST_CASE("train: gradient matches central finite differences") {
    std::vector<FeatureVector> xs;
    std::vector<double> ys = {1, 0, 1, 0, 1};
    const FeatureSpec spec = small_spec(8);
    const char* texts[] = {"alpha beta", "gamma delta", "alpha gamma", "beta beta beta", "delta"};
    for (const char* t : texts) xs.push_back(featurize(t, spec));

    SplitMix64 rng(5150);
    std::vector<double> w(spec.dim());
    for (auto& v : w) v = (rng.next_double() - 0.5) * 0.5;
    double bias = 0.12;
    const double l2 = 1e-3;

    std::vector<double> grad;
    double grad_b = 0.0;
    batch_logistic_grad(xs, ys, w, bias, l2, grad, grad_b);

    std::vector<size_t> touched;
    for (const auto& x : xs) {
        for (uint32_t idx : x.indices) touched.push_back(idx);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());

    const double h = 1e-6;
    for (size_t idx : touched) {
        std::vector<double> wp = w, wm = w;
        wp[idx] += h;
        wm[idx] -= h;
        const double numeric =
            (batch_logistic_loss(xs, ys, wp, bias, l2) - batch_logistic_loss(xs, ys, wm, bias, l2)) /
            (2 * h);
        CHECK(grad[idx] == doctest::Approx(numeric).epsilon(1e-4));
    }
    const double numeric_b =
        (batch_logistic_loss(xs, ys, w, bias + h, l2) - batch_logistic_loss(xs, ys, w, bias - h, l2)) /
        (2 * h);
    CHECK(grad_b == doctest::Approx(numeric_b).epsilon(1e-4));
}

TEST_CASE("train: changing the hash seed keeps separable data separable") {
    auto recipe = separable_recipe(123, 40);
    FeatureSpec spec = small_spec(14);
    spec.hash_seed = 0xABCD;
    const AnnotatorModel model = train_annotator(recipe, TrainingHyper{}, spec);
    std::vector<std::pair<double, Label>> scored;
    for (const auto& ex : recipe.examples) {
        scored.emplace_back(model.chunk_score(ex.text), ex.label > 0.5 ? Label::positive : Label::negative);
    }
    CHECK(roc_auc(scored) == 1.0);
}

TEST_CASE("score range stays in [0,1] for arbitrary inputs") {
    AnnotatorModel model;
    model.feature_spec = small_spec();
    SplitMix64 rng(31337);
    model.weights.resize(model.feature_spec.dim());
    for (auto& w : model.weights) w = (rng.next_double() - 0.5) * 50.0;
    model.bias = 3.0;
    for (size_t i = 0; i < 50; ++i) {
        const auto doc = testutil::make_document(14, i, "Go", "r", 1 + i % 40);
        const double s = score_document(model, doc);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("score_corpus: map law and worker-count independence") {
    AnnotatorModel model;
    model.feature_spec = small_spec();
    model.weights.assign(model.feature_spec.dim(), 0.02);
    model.bias = -0.3;

    CHECK(score_corpus(model, {}, 1).empty());

    const auto docs = testutil::make_corpus(500, 64, {"Python", "Go"});
    const auto one = score_corpus(model, docs, 1);
    REQUIRE(one.size() == docs.size());
    for (size_t i = 0; i < docs.size(); ++i) {
        CHECK(one[i].doc_id == docs[i].id);
        CHECK(one[i].score == score_document(model, docs[i]));
        CHECK(one[i].token_count == docs[i].token_count);
    }
    const auto eight = score_corpus(model, docs, 8);
    REQUIRE(eight.size() == one.size());
    for (size_t i = 0; i < one.size(); ++i) {
        CHECK(eight[i].doc_id == one[i].doc_id);
        CHECK(eight[i].score == one[i].score);
    }
}

TEST_CASE("model container round trip and version gate") {
    auto recipe = separable_recipe(321, 10);
    AnnotatorModel model = train_annotator(recipe, TrainingHyper{}, small_spec(8));
    model.recipe_name = "separable";

    testutil::TempDir dir("model");
    const auto path = dir.path() / "annotator.model";
    save_annotator(model, path);
    const AnnotatorModel back = load_annotator(path);
    CHECK(back.mode == model.mode);
    CHECK(back.feature_spec == model.feature_spec);
    CHECK(back.chunk_policy.chunk_chars == model.chunk_policy.chunk_chars);
    CHECK(back.weights == model.weights);
    CHECK(back.bias == model.bias);
    CHECK(back.recipe_name == "separable");
    CHECK(back.loss_trace == model.loss_trace);
    CHECK(back.provenance_hash == model.provenance_hash);

    const auto junk = dir.path() / "junk.model";
    std::ofstream(junk, std::ios::binary) << "not a model";
    CHECK_THROWS_AS(load_annotator(junk), DataError);
}

TEST_CASE("import_embedding_scores") {
    testutil::TempDir dir("vectors");
    const auto path = dir.path() / "vectors.jsonl";

    SUBCASE("zero head maps everything to 0.5") {
        std::ofstream(path) << R"({"doc_id":"a","vector":[1.0,2.0]})" << "\n"
                            << R"({"doc_id":"b","vector":[-3.0,0.5]})" << "\n";
        const auto scores = import_embedding_scores(path, {{0.0, 0.0}, 0.0});
        REQUIRE(scores.size() == 2);
        CHECK(scores[0].score == 0.5);
        CHECK(scores[1].score == 0.5);
    }
    SUBCASE("sigmoid(+-10) saturates within 1e-4") {
        std::ofstream(path) << R"({"doc_id":"hi","vector":[1.0]})" << "\n"
                            << R"({"doc_id":"lo","vector":[-1.0]})" << "\n";
        const auto scores = import_embedding_scores(path, {{10.0}, 0.0});
        REQUIRE(scores.size() == 2);
        CHECK(scores[0].score == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(scores[1].score == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    }
    SUBCASE("empty file yields an empty stream") {
        std::ofstream(path); // touch
        CHECK(import_embedding_scores(path, {{1.0}, 0.0}).empty());
    }
    SUBCASE("dimension mismatch is a configuration error") {
        std::ofstream(path) << R"({"doc_id":"a","vector":[1.0,2.0,3.0]})" << "\n";
        CHECK_THROWS_AS(import_embedding_scores(path, {{1.0}, 0.0}), ConfigError);
    }
    SUBCASE("duplicate ids are rejected") {
        std::ofstream(path) << R"({"doc_id":"a","vector":[1.0]})" << "\n"
                            << R"({"doc_id":"a","vector":[2.0]})" << "\n";
        CHECK_THROWS_AS(import_embedding_scores(path, {{1.0}, 0.0}), DataError);
    }
}

TEST_CASE("score records round trip") {
    testutil::TempDir dir("scores");
    const auto path = dir.path() / "scores.jsonl";
    std::vector<ScoredDocument> scores = {
        {"a", "Python", 0.91, 120}, {"b", "Go", 0.13, 44}};
    write_scores(scores, path);
    const auto back = read_scores(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].doc_id == "a");
    CHECK(back[0].score == 0.91);
    CHECK(back[1].language == "Go");
    CHECK(back[1].token_count == 44);
}

TEST_SUITE_END();
