// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "codesieve/errors.hpp"
#include "codesieve/grouping.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/packing.hpp"
#include "codesieve/tokenizer.hpp"
#include "testutil.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

using namespace codesieve;

namespace {

const TokenizerSpec kApprox = TokenizerSpec::approximate();

CodeDocument file_doc(const std::string& id, const std::string& repo, const std::string& lang,
                      const std::string& content) {
    CodeDocument doc;
    doc.id = id;
    doc.repo_name = repo;
    doc.path = id;
    doc.language = lang;
    doc.content = content;
    doc.token_count = count_tokens(content, kApprox);
    return doc;
}

// Tokens of one training document including file separators.
uint64_t training_doc_tokens(const TrainingDocument& doc,
                             const std::unordered_map<std::string, const CodeDocument*>& by_id) {
    uint64_t total = doc.member_ids.empty() ? 0 : doc.member_ids.size() - 1; // separators
    for (const auto& id : doc.member_ids) total += by_id.at(id)->token_count;
    return total;
}

std::multiset<std::string> member_multiset(const std::vector<TrainingDocument>& docs) {
    std::multiset<std::string> all;
    for (const auto& doc : docs) {
        for (const auto& id : doc.member_ids) all.insert(id);
    }
    return all;
}

} // namespace

TEST_SUITE_BEGIN("grouping");

TEST_CASE("one repo with two languages") {
    const std::vector<CodeDocument> files = {
        file_doc("a.py", "org/repo", "Python", "a = 1\n"),
        file_doc("b.py", "org/repo", "Python", "b = 2\n"),
        file_doc("c.go", "org/repo", "Go", "c := 3\n"),
    };
    const auto by_repo = group_documents(files, GroupingStrategy::by_repo, 1);
    REQUIRE(by_repo.size() == 1);
    CHECK(by_repo[0].id == "org/repo");
    CHECK(!by_repo[0].language.has_value()); // mixed scope
    CHECK(by_repo[0].member_ids.size() == 3);

    const auto by_lang = group_documents(files, GroupingStrategy::by_language_and_repo, 1);
    REQUIRE(by_lang.size() == 2);
    CHECK(by_lang[0].id == "Go/org/repo");
    CHECK(by_lang[0].language == "Go");
    CHECK(by_lang[0].member_ids == std::vector<std::string>{"c.go"});
    CHECK(by_lang[1].id == "Python/org/repo");
    CHECK(by_lang[1].language == "Python");
    CHECK(by_lang[1].member_ids.size() == 2);
}

TEST_CASE("empty input gives empty output") {
    CHECK(group_documents({}, GroupingStrategy::by_repo, 1).empty());
}

TEST_CASE("50-file fixture conserves the member multiset under both strategies") {
    const auto files = testutil::make_corpus(606, 50, {"Python", "Go", "Rust"}, 6);
    std::multiset<std::string> expected;
    for (const auto& f : files) expected.insert(f.id);

    for (const auto strategy : {GroupingStrategy::by_repo, GroupingStrategy::by_language_and_repo}) {
        const auto groups = group_documents(files, strategy, 77);
        CHECK(member_multiset(groups) == expected);
    }

    // Strategy invariant: single-language scope everywhere.
    const auto by_lang = group_documents(files, GroupingStrategy::by_language_and_repo, 77);
    const auto by_id = index_documents(files);
    for (const auto& group : by_lang) {
        REQUIRE(group.language.has_value());
        for (const auto& id : group.member_ids) {
            CHECK(by_id.at(id)->language == *group.language);
        }
    }
}

TEST_CASE("member order is a pure function of (seed, id)") {
    auto files = testutil::make_corpus(11, 30, {"Python"}, 2);
    const auto groups = group_documents(files, GroupingStrategy::by_repo, 42);

    auto shuffled = files;
    stable_shuffle(shuffled, 999);
    const auto regroups = group_documents(shuffled, GroupingStrategy::by_repo, 42);
    REQUIRE(groups.size() == regroups.size());
    for (size_t i = 0; i < groups.size(); ++i) {
        CHECK(groups[i].id == regroups[i].id);
        CHECK(groups[i].member_ids == regroups[i].member_ids); // order too
    }

    const auto other_seed = group_documents(files, GroupingStrategy::by_repo, 43);
    bool any_different = false;
    for (size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].member_ids != other_seed[i].member_ids) any_different = true;
    }
    CHECK(any_different);
}

TEST_CASE("training document text joins members with the separator") {
    const std::vector<CodeDocument> files = {
        file_doc("a", "r", "Python", "first"),
        file_doc("b", "r", "Python", "second"),
    };
    TrainingDocument doc;
    doc.id = "r";
    doc.member_ids = {"a", "b"};
    const auto by_id = index_documents(files);
    const std::string text = training_document_text(doc, by_id);
    CHECK(text == std::string("first") + "\x1d" + "second");
    CHECK(count_tokens(text, kApprox) ==
          files[0].token_count + files[1].token_count + 1);
}

TEST_CASE("training documents file round trip") {
    testutil::TempDir dir("groups");
    const auto files = testutil::make_corpus(21, 20, {"Python", "Go"}, 4);
    const auto groups = group_documents(files, GroupingStrategy::by_language_and_repo, 5);
    const auto path = dir.path() / "groups.jsonl";
    write_training_documents(groups, path);
    const auto back = read_training_documents(path);
    REQUIRE(back.size() == groups.size());
    for (size_t i = 0; i < groups.size(); ++i) {
        CHECK(back[i].id == groups[i].id);
        CHECK(back[i].language == groups[i].language);
        CHECK(back[i].member_ids == groups[i].member_ids);
    }
}

TEST_SUITE_END();

// ---------------------------------------------------------------------------

TEST_SUITE_BEGIN("packing");

TEST_CASE("fold_token_id lands in the content id range") {
    for (const char* piece : {"def", "(", "x", "_private"}) {
        const uint32_t id = fold_token_id(piece, 64000);
        CHECK(id >= 3);
        CHECK(id < 64000);
        CHECK(id == fold_token_id(piece, 64000));
    }
}

TEST_CASE("one document of exactly seq_len tokens (with the boundary) packs to a single unpadded sequence") {
    // 63 content tokens + 1 boundary = 64.
    std::string content;
    for (int i = 0; i < 63; ++i) content += "tok" + std::to_string(i) + " ";
    const auto file = file_doc("only", "r", "Python", content);
    REQUIRE(file.token_count == 63);

    TrainingDocument doc;
    doc.id = "r";
    doc.member_ids = {"only"};
    const std::vector<CodeDocument> files = {file};
    PackingParams params;
    params.seq_len = 64;
    const auto seqs = pack_sequences({doc}, index_documents(files), kApprox, params);
    REQUIRE(seqs.size() == 1);
    CHECK(seqs[0].tokens.size() == 64);
    CHECK(seqs[0].pad_count == 0);
    CHECK(seqs[0].tokens.back() == params.boundary_id);
    REQUIRE(seqs[0].spans.size() == 1);
    CHECK(seqs[0].spans[0].training_doc_id == "r");
    CHECK(seqs[0].spans[0].begin == 0);
    CHECK(seqs[0].spans[0].end == 64);
}

TEST_CASE("empty input packs to an empty stream") {
    CHECK(pack_sequences({}, {}, kApprox, PackingParams{}).empty());
}

TEST_CASE("token conservation and fixed length on a sizable fixture") {
    const auto files = testutil::make_corpus(31, 120, {"Python", "Go"}, 8);
    const auto groups = group_documents(files, GroupingStrategy::by_language_and_repo, 3);
    const auto by_id = index_documents(files);

    uint64_t doc_tokens = 0;
    for (const auto& group : groups) doc_tokens += training_doc_tokens(group, by_id);
    const uint64_t boundaries = groups.size(); // one boundary after each document

    PackingParams params;
    params.seq_len = 512;
    params.seed = 17;
    const auto seqs = pack_sequences(groups, by_id, kApprox, params);

    const uint64_t total_with_markers = doc_tokens + boundaries;
    const uint64_t expected_seqs = (total_with_markers + params.seq_len - 1) / params.seq_len;
    CHECK(seqs.size() == expected_seqs);

    uint64_t non_pad = 0, pad = 0;
    for (const auto& seq : seqs) {
        CHECK(seq.tokens.size() == params.seq_len); // every sequence is full length
        non_pad += seq.tokens.size() - seq.pad_count;
        pad += seq.pad_count;

        // spans tile the non-pad region exactly
        uint64_t cursor = 0;
        for (const auto& span : seq.spans) {
            CHECK(span.begin == cursor);
            CHECK(span.end > span.begin);
            cursor = span.end;
        }
        CHECK(cursor == seq.tokens.size() - seq.pad_count);
    }
    CHECK(non_pad == total_with_markers);
    CHECK(pad == expected_seqs * params.seq_len - total_with_markers);

    SUBCASE("pad arithmetic from the measured token total") {
        // With this fixture: pad = n_seqs * seq_len - (tokens + markers).
        CHECK(pad == seqs.size() * params.seq_len - (doc_tokens + boundaries));
    }
}

TEST_CASE("epoch coverage: every file's tokens appear exactly k times") {
    const auto files = testutil::make_corpus(47, 24, {"Python"}, 4);
    const auto groups = group_documents(files, GroupingStrategy::by_repo, 9);
    const auto by_id = index_documents(files);

    PackingParams one;
    one.seq_len = 256;
    one.seed = 5;
    one.repetitions = 1;
    PackingParams three = one;
    three.repetitions = 3;

    const auto single = pack_sequences(groups, by_id, kApprox, one);
    const auto tripled = pack_sequences(groups, by_id, kApprox, three);

    auto non_pad_total = [](const std::vector<PackedSequence>& seqs) {
        uint64_t total = 0;
        for (const auto& s : seqs) total += s.tokens.size() - s.pad_count;
        return total;
    };
    CHECK(non_pad_total(tripled) == 3 * non_pad_total(single));

    // per-document span mass is exactly k x (doc tokens + boundary)
    std::map<std::string, uint64_t> span_mass;
    for (const auto& seq : tripled) {
        for (const auto& span : seq.spans) span_mass[span.training_doc_id] += span.end - span.begin;
    }
    for (const auto& group : groups) {
        CHECK(span_mass.at(group.id) == 3 * (training_doc_tokens(group, by_id) + 1));
    }

    // repetitions get independent shuffles: epochs differ in order
    CHECK(tripled.size() >= 2);
}

TEST_CASE("packing is deterministic in (inputs, seed)") {
    const auto files = testutil::make_corpus(77, 40, {"Go"}, 5);
    const auto groups = group_documents(files, GroupingStrategy::by_repo, 1);
    const auto by_id = index_documents(files);
    PackingParams params;
    params.seq_len = 128;
    params.seed = 99;

    const auto a = pack_sequences(groups, by_id, kApprox, params);
    const auto b = pack_sequences(groups, by_id, kApprox, params);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].tokens == b[i].tokens);

    params.seed = 100;
    const auto c = pack_sequences(groups, by_id, kApprox, params);
    bool differs = false;
    for (size_t i = 0; i < std::min(a.size(), c.size()); ++i) {
        if (a[i].tokens != c[i].tokens) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("packed shard files: binary payload, sidecar index, debug text") {
    testutil::TempDir dir("packed");
    const auto files = testutil::make_corpus(3, 30, {"Python"}, 3);
    const auto groups = group_documents(files, GroupingStrategy::by_repo, 2);
    PackingParams params;
    params.seq_len = 128;
    params.shard_sequences = 2;
    params.debug_text = true;
    const auto seqs = pack_sequences(groups, index_documents(files), kApprox, params);
    REQUIRE(!seqs.empty());

    const auto stats = write_packed_shards(seqs, dir.path(), params);
    CHECK(stats.sequences == seqs.size());
    REQUIRE(!stats.shard_files.empty());

    // first shard holds min(2, n) sequences of 4-byte ids
    const auto bin = stats.shard_files[0];
    const auto bytes = std::filesystem::file_size(bin);
    CHECK(bytes == std::min<uint64_t>(2, seqs.size()) * params.seq_len * 4);

    std::ifstream idx(bin.string().substr(0, bin.string().size() - 4) + ".index.jsonl");
    std::string line;
    size_t index_lines = 0;
    while (std::getline(idx, line)) ++index_lines;
    CHECK(index_lines == std::min<size_t>(2, seqs.size()));

    CHECK(std::filesystem::exists(bin.string().substr(0, bin.string().size() - 4) + ".txt"));

    // binary payload round-trips the first sequence
    std::ifstream raw(bin, std::ios::binary);
    std::vector<unsigned char> buf(params.seq_len * 4);
    raw.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    for (size_t t = 0; t < params.seq_len; ++t) {
        const uint32_t tok = static_cast<uint32_t>(buf[4 * t]) |
                             (static_cast<uint32_t>(buf[4 * t + 1]) << 8) |
                             (static_cast<uint32_t>(buf[4 * t + 2]) << 16) |
                             (static_cast<uint32_t>(buf[4 * t + 3]) << 24);
        CHECK(tok == seqs[0].tokens[t]);
    }
}

TEST_CASE("packing rejects degenerate parameters") {
    PackingParams zero_len;
    zero_len.seq_len = 0;
    CHECK_THROWS_AS(pack_sequences({}, {}, kApprox, zero_len), ConfigError);

    TokenizerSpec tiny_vocab = kApprox;
    tiny_vocab.vocab_size = 3;
    CHECK_THROWS_AS(pack_sequences({}, {}, tiny_vocab, PackingParams{}), ConfigError);
}

TEST_SUITE_END();
