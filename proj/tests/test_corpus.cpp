// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "codesieve/corpus_io.hpp"
#include "codesieve/errors.hpp"
#include "codesieve/language.hpp"
#include "codesieve/partition.hpp"
#include "codesieve/tokenizer.hpp"
#include "testutil.hpp"

#include <fstream>
#include <map>
#include <set>

using namespace codesieve;

namespace {
const TokenizerSpec kApprox = TokenizerSpec::approximate();

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& line : lines) out << line << '\n';
}
} // namespace

TEST_SUITE_BEGIN("corpus");

TEST_CASE("count_tokens: empty input") {
    CHECK(count_tokens("", kApprox) == 0);
}

TEST_CASE("count_tokens: word runs and symbols") {
    // "x", "=", "1"
    CHECK(count_tokens("x = 1", kApprox) == 3);
    // "foo", "(", "bar", ")"
    CHECK(count_tokens("foo(bar)", kApprox) == 4);
    CHECK(count_tokens("snake_case_name", kApprox) == 1);
    CHECK(count_tokens("a+b", kApprox) == 3);
    CHECK(count_tokens("  \t\n ", kApprox) == 0);
}

TEST_CASE("count_tokens: multi-byte sequences are word bytes") {
    CHECK(count_tokens("h\xc3\xa9llo w\xc3\xb6rld", kApprox) == 2);
}

TEST_CASE("count_tokens: concatenation monotonicity") {
    SplitMix64 rng(77);
    const std::string alphabet = "abc ()_=.;\n019{}";
    for (int trial = 0; trial < 200; ++trial) {
        std::string a, b;
        for (size_t i = 0; i < rng.next_below(40); ++i) a += alphabet[rng.next_below(alphabet.size())];
        for (size_t i = 0; i < rng.next_below(40); ++i) b += alphabet[rng.next_below(alphabet.size())];
        CHECK(count_tokens(a + " " + b, kApprox) == count_tokens(a, kApprox) + count_tokens(b, kApprox));
    }
}

TEST_CASE("count_tokens: external vocab") {
    testutil::TempDir dir("vocab");
    const auto vocab_path = dir.path() / "vocab.txt";
    write_lines(vocab_path, {"hel", "lo", "hello"});

    TokenizerSpec spec;
    spec.kind = TokenizerKind::external_vocab;

    SUBCASE("missing vocabulary resource is a configuration error") {
        CHECK_THROWS_AS(count_tokens("hello", spec), ConfigError);
    }
    SUBCASE("greedy longest match with single-byte fallback") {
        spec.parameters["vocab_path"] = vocab_path.string();
        CHECK(count_tokens("hello", spec) == 1);   // whole-word entry wins
        CHECK(count_tokens("hellox", spec) == 2);  // "hello" + "x"
        CHECK(count_tokens("xyz", spec) == 3);     // three unknown bytes
        CHECK(count_tokens("hello hello", spec) == 2);
        CHECK(count_tokens("", spec) == 0);
        CHECK(tokenize_pieces("hellox", spec).size() == count_tokens("hellox", spec));
    }
}

TEST_CASE("language set: case-insensitive canonicalization") {
    const auto& langs = LanguageSet::default_set();
    CHECK(langs.size() == 18);
    CHECK(langs.canonicalize("python")->name == "Python");
    CHECK(langs.canonicalize("c#")->name == "C#");
    CHECK(langs.canonicalize("JUPYTER NOTEBOOK")->name == "Jupyter Notebook");
    CHECK(!langs.canonicalize("COBOL").has_value());
    CHECK(LanguageTag{"RUST"} == LanguageTag{"rust"});
}

TEST_CASE("ingest: empty shard yields empty stream") {
    testutil::TempDir dir("ingest-empty");
    const auto shard = dir.path() / "empty.jsonl";
    write_lines(shard, {});
    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox);
    CHECK(result.documents.empty());
    CHECK(result.errors.empty());
}

TEST_CASE("ingest: record missing content is one recorded error") {
    testutil::TempDir dir("ingest-missing");
    const auto shard = dir.path() / "bad.jsonl";
    write_lines(shard, {R"({"repo_name":"r","path":"p","language":"Python"})"});

    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox);
    CHECK(result.documents.empty());
    REQUIRE(result.errors.size() == 1);
    CHECK(result.errors[0].line_number == 1);

    IngestOptions fail_fast;
    fail_fast.policy = IngestPolicy::fail_fast;
    CHECK_THROWS_AS(ingest_shard(shard, LanguageSet::default_set(), kApprox, fail_fast), DataError);
}

TEST_CASE("ingest: three-record fixture, field by field") {
    testutil::TempDir dir("ingest-3");
    const auto shard = dir.path() / "three.jsonl";
    write_lines(shard, {
        R"({"id":"a1","repo_name":"org/alpha","path":"a.py","language":"Python","content":"x = 1\n"})",
        R"({"id":"a2","repo_name":"org/alpha","path":"b.py","language":"python","content":"def f():\n    pass\n"})",
        R"({"id":"g1","repo_name":"org/beta","path":"main.go","language":"Go","content":"package main\n"})",
    });
    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox);
    CHECK(result.errors.empty());
    REQUIRE(result.documents.size() == 3);

    CHECK(result.documents[0].id == "a1");
    CHECK(result.documents[0].repo_name == "org/alpha");
    CHECK(result.documents[0].path == "a.py");
    CHECK(result.documents[0].language == "Python");
    CHECK(result.documents[0].content == "x = 1\n");
    CHECK(result.documents[0].token_count == 3);

    CHECK(result.documents[1].language == "Python"); // canonicalized case
    CHECK(result.documents[1].token_count == count_tokens("def f():\n    pass\n", kApprox));
    CHECK(result.documents[2].language == "Go");
    CHECK(result.documents[2].id == "g1");
}

TEST_CASE("ingest: unknown language and malformed records are rejected") {
    testutil::TempDir dir("ingest-bad");
    const auto shard = dir.path() / "bad.jsonl";
    write_lines(shard, {
        R"({"repo_name":"r","path":"p","language":"COBOL","content":"x"})",
        "{not json",
        std::string("{\"repo_name\":\"r\",\"path\":\"q\",\"language\":\"Python\",\"content\":\"\xff\xfe\"}"),
        R"({"repo_name":"r","path":"ok.py","language":"Python","content":"ok"})",
    });
    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox);
    CHECK(result.documents.size() == 1);
    CHECK(result.documents[0].path == "ok.py");
    CHECK(result.errors.size() == 3);
}

TEST_CASE("utf-8 validation") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("caf\xc3\xa9"));
    CHECK(is_valid_utf8("\xe6\x97\xa5\xe6\x9c\xac"));
    CHECK(!is_valid_utf8("\xff"));
    CHECK(!is_valid_utf8("\xc3"));             // truncated sequence
    CHECK(!is_valid_utf8("\xc0\xaf"));         // overlong
    CHECK(!is_valid_utf8("\xed\xa0\x80"));     // surrogate
}

TEST_CASE("ingest: derived ids are stable and unique per (repo, path, content)") {
    const std::string id1 = derive_document_id("org/r", "a.py", "x = 1");
    const std::string id2 = derive_document_id("org/r", "a.py", "x = 1");
    const std::string id3 = derive_document_id("org/r", "a.py", "x = 2");
    CHECK(id1 == id2);
    CHECK(id1 != id3);
    CHECK(id1.size() == 16);

    testutil::TempDir dir("ingest-noid");
    const auto shard = dir.path() / "noid.jsonl";
    write_lines(shard, {R"({"repo_name":"org/r","path":"a.py","language":"Python","content":"x = 1"})"});
    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox);
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].id == id1);
}

TEST_CASE("ingest: duplicate ids across a corpus are rejected") {
    testutil::TempDir dir("ingest-dup");
    write_lines(dir.path() / "s1.jsonl",
                {R"({"id":"same","repo_name":"r","path":"a.py","language":"Python","content":"a"})"});
    write_lines(dir.path() / "s2.jsonl",
                {R"({"id":"same","repo_name":"r","path":"b.py","language":"Python","content":"b"})"});
    CorpusManifest manifest;
    manifest.shards = {"s1.jsonl", "s2.jsonl"};
    const auto result = ingest_corpus(manifest, dir.path());
    CHECK(result.documents.size() == 1);
    CHECK(result.errors.size() == 1);
}

TEST_CASE("ingest: optional heuristic filters") {
    testutil::TempDir dir("ingest-filters");
    const auto shard = dir.path() / "f.jsonl";
    write_lines(shard, {
        R"({"id":"long","repo_name":"r","path":"l","language":"Python","content":"aaaaaaaaaaaaaaaaaaaaaaaa"})",
        R"({"id":"sym","repo_name":"r","path":"s","language":"Python","content":"+++ --- &&& |||"})",
        R"({"id":"ok","repo_name":"r","path":"o","language":"Python","content":"short = text"})",
    });
    IngestOptions options;
    options.filters.max_line_length = 20;
    options.filters.min_alpha_ratio = 0.5;
    const auto result = ingest_shard(shard, LanguageSet::default_set(), kApprox, options);
    REQUIRE(result.documents.size() == 1);
    CHECK(result.documents[0].id == "ok");
    CHECK(result.errors.size() == 2);
}

TEST_CASE("shard round trip, plain and gzip") {
    auto docs = testutil::make_corpus(11, 25, {"Python", "Go", "Rust"});
    testutil::TempDir dir("roundtrip");
    for (const auto* name : {"shard.jsonl", "shard.jsonl.gz"}) {
        const auto path = dir.path() / name;
        write_shard(docs, path);
        const auto back = read_shard(path, LanguageSet::default_set(), kApprox);
        REQUIRE(back.size() == docs.size());
        for (size_t i = 0; i < docs.size(); ++i) CHECK(back[i] == docs[i]);
    }
}

TEST_CASE("corpus manifest round trip") {
    testutil::TempDir dir("manifest");
    CorpusManifest manifest;
    manifest.shards = {"a.jsonl", "b.jsonl.gz"};
    manifest.master_seed = 12345;
    manifest.tokenizer.vocab_size = 64000;
    const auto path = dir.path() / "corpus.json";
    write_corpus_manifest(manifest, path);
    const auto back = read_corpus_manifest(path);
    CHECK(back.shards == manifest.shards);
    CHECK(back.master_seed == 12345);
    CHECK(back.tokenizer.vocab_size == 64000);
    CHECK(back.languages.size() == 18);
}

TEST_CASE("partition: trivial cases") {
    CHECK(partition_by_language({}).empty());

    std::vector<CodeDocument> docs;
    docs.push_back(testutil::make_document(1, 0, "Python", "r"));
    docs.push_back(testutil::make_document(1, 1, "Python", "r"));
    docs.push_back(testutil::make_document(1, 2, "Go", "r"));
    const auto buckets = partition_by_language(docs);
    REQUIRE(buckets.size() == 2);
    CHECK(buckets.at("Python").size() == 2);
    CHECK(buckets.at("Go").size() == 1);
}

TEST_CASE("partition: 100-document fixture matches an independent count") {
    const std::vector<std::string> langs = {"Python", "Go", "Rust", "Java", "C"};
    auto docs = testutil::make_corpus(42, 100, langs);

    std::map<std::string, size_t> expected;     // independent counting pass
    std::map<std::string, std::vector<std::string>> expected_order;
    for (const auto& doc : docs) {
        expected[doc.language]++;
        expected_order[doc.language].push_back(doc.id);
    }

    const auto buckets = partition_by_language(docs);
    size_t total = 0;
    std::set<std::string> seen_ids;
    for (const auto& [lang, bucket] : buckets) {
        total += bucket.size();
        CHECK(bucket.size() == expected.at(lang));
        for (size_t i = 0; i < bucket.size(); ++i) {
            CHECK(bucket[i].language == lang);
            CHECK(bucket[i].id == expected_order.at(lang)[i]); // input order kept
            CHECK(seen_ids.insert(bucket[i].id).second);       // disjoint buckets
        }
    }
    CHECK(total == 100);
}

TEST_SUITE_END();
