// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "codesieve/errors.hpp"
#include "codesieve/eval.hpp"
#include "codesieve/hashing.hpp"
#include "testutil.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

using namespace codesieve;

namespace {

// All-pairs counter; the oracle roc_auc must match exactly.
double brute_force_auc(const std::vector<std::pair<double, Label>>& scored) {
    uint64_t numerator2 = 0, pos = 0, neg = 0;
    for (const auto& [sp, lp] : scored) {
        if (lp != Label::positive) continue;
        ++pos;
        for (const auto& [sn, ln] : scored) {
            if (ln != Label::negative) continue;
            if (sp > sn) numerator2 += 2;
            else if (sp == sn) numerator2 += 1;
        }
    }
    for (const auto& [s, l] : scored) {
        if (l == Label::negative) ++neg;
    }
    return static_cast<double>(numerator2) / (2.0 * pos * neg);
}

std::vector<std::pair<double, Label>> random_instance(SplitMix64& rng, size_t max_points) {
    const size_t pos = 1 + rng.next_below(max_points / 2);
    const size_t neg = 1 + rng.next_below(max_points / 2);
    std::vector<std::pair<double, Label>> scored;
    // Coarse grid of score values forces plenty of ties.
    for (size_t i = 0; i < pos; ++i) {
        scored.emplace_back(static_cast<double>(rng.next_below(12)) / 10.0, Label::positive);
    }
    for (size_t i = 0; i < neg; ++i) {
        scored.emplace_back(static_cast<double>(rng.next_below(12)) / 10.0, Label::negative);
    }
    return scored;
}

} // namespace

TEST_SUITE_BEGIN("eval");

TEST_CASE("roc_auc: trivial endpoints") {
    CHECK(roc_auc({{0.9, Label::positive}, {0.8, Label::positive}, {0.2, Label::negative}}) == 1.0);
    CHECK(roc_auc({{0.5, Label::positive}, {0.5, Label::negative}, {0.5, Label::positive}}) == 0.5);
}

TEST_CASE("roc_auc: hand-counted 3-of-4 concordant pairs") {
    const std::vector<std::pair<double, Label>> scored = {
        {0.9, Label::positive}, {0.4, Label::positive}, {0.6, Label::negative}, {0.1, Label::negative}};
    CHECK(roc_auc(scored) == 0.75);
}

TEST_CASE("roc_auc: single-class input is an error") {
    CHECK_THROWS_AS(roc_auc({{0.5, Label::positive}}), ConfigError);
    CHECK_THROWS_AS(roc_auc({{0.5, Label::negative}, {0.2, Label::negative}}), ConfigError);
}

TEST_CASE("roc_auc: exact oracle equivalence on random instances") {
    SplitMix64 rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
        const auto scored = random_instance(rng, 200);
        CHECK(roc_auc(scored) == brute_force_auc(scored));
    }
}

TEST_CASE("roc_auc: invariant under strictly increasing transforms") {
    SplitMix64 rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const auto scored = random_instance(rng, 100);
        auto transformed = scored;
        for (auto& [s, l] : transformed) s = std::tanh(2.0 * s + 1.0);
        CHECK(roc_auc(scored) == roc_auc(transformed));
    }
}

TEST_CASE("roc_auc: negating scores complements the area") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto scored = random_instance(rng, 100);
        auto negated = scored;
        for (auto& [s, l] : negated) s = -s;
        CHECK(roc_auc(negated) == doctest::Approx(1.0 - roc_auc(scored)).epsilon(1e-14));
    }
}

TEST_CASE("average_ranks handles ties with midranks") {
    CHECK(average_ranks({1, 2, 2, 3}) == std::vector<double>{1.0, 2.5, 2.5, 4.0});
    CHECK(average_ranks({5, 5, 5}) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("spearman: monotone, reversed, and hand-ranked cases") {
    CHECK(spearman({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3}, {30, 20, 10}) == doctest::Approx(-1.0));
    // ranks x = (1,2,3), y = (1,3,2): rho = 1 - 6*2/(3*8) = 0.5
    CHECK(spearman({0.6, 0.7, 0.9}, {10, 30, 20}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(spearman({1}, {2}), ConfigError);
}

TEST_CASE("correlation_report: intersection, statistic, and error paths") {
    const std::map<std::string, double> auc = {{"he", 0.6}, {"mb", 0.7}, {"ev", 0.9}};
    const std::map<std::string, double> pass = {{"he", 10}, {"mb", 30}, {"ev", 20}, {"xx", 5}};
    const auto report = correlation_report(auc, pass);
    CHECK(report.paired.size() == 3);
    CHECK(report.correlation == doctest::Approx(0.5));
    CHECK(report.statistic == CorrelationStatistic::spearman);

    const auto pearson_report = correlation_report(auc, pass, CorrelationStatistic::pearson);
    CHECK(pearson_report.correlation == doctest::Approx(pearson({0.6, 0.7, 0.9}, {10, 30, 20})));

    CHECK_THROWS_AS(correlation_report({{"only", 0.5}}, {{"only", 1.0}}), ConfigError);
    CHECK_THROWS_AS(correlation_report(auc, {{"zz", 1.0}}), ConfigError);
}

TEST_CASE("build_validation_set: composition and determinism") {
    BenchmarkCorpus bench;
    bench.name = "bench-164";
    for (int i = 0; i < 164; ++i) {
        bench.entries.push_back({"t" + std::to_string(i), "prompt", "solution " + std::to_string(i)});
    }
    const auto heldout = testutil::make_corpus(8, 50, {"Python"});

    const auto set = build_validation_set(bench, heldout, 20, 42);
    CHECK(set.positives.size() == 164);
    CHECK(set.negatives.size() == 20);

    const auto again = build_validation_set(bench, heldout, 20, 42);
    CHECK(set.negatives == again.negatives);

    const auto other_seed = build_validation_set(bench, heldout, 20, 43);
    CHECK(set.negatives != other_seed.negatives);

    SUBCASE("n_negatives = 0 is rejected") {
        CHECK_THROWS_AS(build_validation_set(bench, heldout, 0, 42), ConfigError);
    }
    SUBCASE("insufficient held-out documents are rejected") {
        CHECK_THROWS_AS(build_validation_set(bench, heldout, 51, 42), ConfigError);
    }
    SUBCASE("held-out ids must be disjoint from training ids") {
        std::unordered_set<std::string> training = {heldout[3].id};
        CHECK_THROWS_AS(build_validation_set(bench, heldout, 5, 42, training), ConfigError);
    }
}

TEST_CASE("pass-rate file: object form and record form") {
    testutil::TempDir dir("pass");
    const auto obj_path = dir.path() / "pass.json";
    std::ofstream(obj_path) << R"({"he": 28.0, "mb": 42.9})";
    auto rates = read_pass_rates(obj_path);
    CHECK(rates.at("he") == 28.0);
    CHECK(rates.at("mb") == 42.9);

    const auto line_path = dir.path() / "pass.jsonl";
    std::ofstream(line_path) << R"({"benchmark":"ev","pass1":18.0})" << "\n";
    rates = read_pass_rates(line_path);
    CHECK(rates.at("ev") == 18.0);
}

TEST_CASE("report files: json plus plot-ready table") {
    testutil::TempDir dir("report");
    const auto report = correlation_report({{"a", 0.5}, {"b", 0.8}}, {{"a", 10.0}, {"b", 20.0}});
    const auto json_path = dir.path() / "report.json";
    const auto table_path = dir.path() / "report.tsv";
    write_auc_report(report, json_path, table_path);
    CHECK(std::filesystem::exists(json_path));
    std::ifstream table(table_path);
    std::string header;
    std::getline(table, header);
    CHECK(header == "benchmark\tauc\tpass1");
}

TEST_SUITE_END();
