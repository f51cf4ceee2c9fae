// SPDX-License-Identifier: Apache-2.0
#include "codesieve/pipeline.hpp"

#include "codesieve/annotator.hpp"
#include "codesieve/corpus_io.hpp"
#include "codesieve/decontam.hpp"
#include "codesieve/dedup.hpp"
#include "codesieve/errors.hpp"
#include "codesieve/eval.hpp"
#include "codesieve/grouping.hpp"
#include "codesieve/hashing.hpp"
#include "codesieve/packing.hpp"
#include "codesieve/schedule.hpp"
#include "codesieve/selection.hpp"
#include "codesieve/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <unordered_set>

namespace codesieve {

using nlohmann::json;

std::string tool_version() {
    return "0.1.0";
}

// ---------------------------------------------------------------------------
// Config parsing and validation

namespace {

[[noreturn]] void config_fail(const std::string& context, const std::string& what) {
    throw ConfigError("config: " + context + ": " + what);
}

void require_keys(const json& block, const std::string& context,
                  std::initializer_list<const char*> allowed) {
    if (!block.is_object()) config_fail(context, "expected an object");
    for (auto it = block.begin(); it != block.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) config_fail(context, "unknown key \"" + it.key() + "\"");
    }
}

uint64_t get_u64(const json& block, const char* key, uint64_t fallback, const std::string& context) {
    if (!block.contains(key)) return fallback;
    const auto& v = block[key];
    if (v.is_number_unsigned()) return v.get<uint64_t>();
    if (v.is_number_integer() && v.get<int64_t>() >= 0) return static_cast<uint64_t>(v.get<int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d == std::floor(d)) return static_cast<uint64_t>(d);
    }
    config_fail(context, std::string("\"") + key + "\" must be a non-negative integer");
}

double get_double(const json& block, const char* key, double fallback, const std::string& context) {
    if (!block.contains(key)) return fallback;
    if (!block[key].is_number()) config_fail(context, std::string("\"") + key + "\" must be a number");
    return block[key].get<double>();
}

std::string get_string(const json& block, const char* key, const std::string& fallback,
                       const std::string& context) {
    if (!block.contains(key)) return fallback;
    if (!block[key].is_string()) config_fail(context, std::string("\"") + key + "\" must be a string");
    return block[key].get<std::string>();
}

bool get_bool(const json& block, const char* key, bool fallback, const std::string& context) {
    if (!block.contains(key)) return fallback;
    if (!block[key].is_boolean()) config_fail(context, std::string("\"") + key + "\" must be a boolean");
    return block[key].get<bool>();
}

json block_of(const json& root, const char* key) {
    if (!root.contains(key)) return json::object();
    return root[key];
}

void validate_config(const json& j) {
    require_keys(j, "root",
                 {"version", "corpus_manifest", "work_dir", "master_seed", "workers", "ingest",
                  "dedup", "decontam", "annotator", "selection", "grouping", "packing", "schedule",
                  "eval", "synthetic"});
    if (!j.contains("corpus_manifest")) config_fail("root", "missing \"corpus_manifest\"");
    if (!j.contains("work_dir")) config_fail("root", "missing \"work_dir\"");

    require_keys(block_of(j, "ingest"), "ingest", {"policy", "max_line_length", "min_alpha_ratio"});
    const std::string policy = get_string(block_of(j, "ingest"), "policy", "skip", "ingest");
    if (policy != "skip" && policy != "fail") config_fail("ingest", "policy must be \"skip\" or \"fail\"");

    require_keys(block_of(j, "dedup"), "dedup",
                 {"shingle_ngram", "signature_len", "bands", "threshold"});
    require_keys(block_of(j, "decontam"), "decontam", {"benchmarks", "ngram", "min_hits", "scope"});
    const std::string scope = get_string(block_of(j, "decontam"), "scope", "prompts_and_solutions", "decontam");
    if (scope != "prompts_and_solutions" && scope != "prompts_only" && scope != "solutions_only") {
        config_fail("decontam", "scope must be prompts_and_solutions | prompts_only | solutions_only");
    }

    const json ann = block_of(j, "annotator");
    require_keys(ann, "annotator",
                 {"recipe", "dim_log2", "hash_seed", "use_bigrams", "chunk_chars", "epochs",
                  "learning_rate", "l2", "recipes"});
    if (ann.contains("recipes")) {
        if (!ann["recipes"].is_object()) config_fail("annotator.recipes", "expected an object");
        for (auto it = ann["recipes"].begin(); it != ann["recipes"].end(); ++it) {
            require_keys(it.value(), "annotator.recipes." + it.key(),
                         {"mode", "positives", "negatives", "labels"});
            for (const char* side : {"positives", "negatives"}) {
                if (!it.value().contains(side)) continue;
                if (!it.value()[side].is_array()) {
                    config_fail("annotator.recipes." + it.key(), std::string(side) + " must be an array");
                }
                for (const auto& src : it.value()[side]) {
                    require_keys(src, "annotator.recipes." + it.key() + "." + side,
                                 {"path", "from_corpus", "count", "role"});
                }
            }
        }
    }

    const json sel = block_of(j, "selection");
    require_keys(sel, "selection", {"total_horizon_tokens", "repetitions", "mix"});
    if (sel.contains("mix") && !sel["mix"].is_object() &&
        !(sel["mix"].is_string() && sel["mix"].get<std::string>() == "measured")) {
        config_fail("selection", "mix must be \"measured\" or a {language: weight} object");
    }

    const json grp = block_of(j, "grouping");
    require_keys(grp, "grouping", {"strategy", "variant", "input", "file_separator"});
    const std::string strategy = get_string(grp, "strategy", "by_language_and_repo", "grouping");
    grouping_strategy_from_name(strategy); // throws on bad value
    const std::string input = get_string(grp, "input", "clean", "grouping");
    if (input != "clean" && input != "selected" && input != "phase3") {
        config_fail("grouping", "input must be clean | selected | phase3");
    }

    require_keys(block_of(j, "packing"), "packing",
                 {"seq_len", "pad_id", "file_sep_id", "boundary_id", "shard_sequences",
                  "debug_text", "variant", "repetitions"});

    const json sched = block_of(j, "schedule");
    require_keys(sched, "schedule", {"batch_size", "stride", "general", "continued", "variants"});
    require_keys(block_of(sched, "general"), "schedule.general",
                 {"horizon_tokens", "warmup_iters", "max_lr", "min_lr"});
    require_keys(block_of(sched, "continued"), "schedule.continued",
                 {"horizon_tokens", "rewarmup_iters", "max_lr", "min_lr"});
    if (sched.contains("variants")) {
        for (const auto& v : sched["variants"]) {
            const std::string name = v.get<std::string>();
            if (name != "general" && name != "rewarmup" && name != "linear" && name != "constant") {
                config_fail("schedule.variants", "unknown variant \"" + name + "\"");
            }
        }
    }

    require_keys(block_of(j, "eval"), "eval",
                 {"n_negatives", "statistic", "pass_rates", "heldout", "benchmarks", "models"});
    const std::string stat = get_string(block_of(j, "eval"), "statistic", "spearman", "eval");
    if (stat != "spearman" && stat != "pearson") config_fail("eval", "statistic must be spearman | pearson");

    const json synth = block_of(j, "synthetic");
    require_keys(synth, "synthetic",
                 {"template", "template_file", "max_seed_chars", "python_target",
                  "seed_horizon_tokens", "passthrough", "client", "max_attempts",
                  "backoff_base_ms", "seed_jaccard_bound"});
    const json client = block_of(synth, "client");
    require_keys(client, "synthetic.client",
                 {"mode", "behavior", "endpoint", "path", "model", "timeout_seconds", "auth_env"});
    const std::string mode = get_string(client, "mode", "mock", "synthetic.client");
    if (mode != "mock" && mode != "http") config_fail("synthetic.client", "mode must be mock | http");
    const std::string behavior = get_string(client, "behavior", "transform", "synthetic.client");
    if (behavior != "transform" && behavior != "echo_seed" && behavior != "empty" && behavior != "fail") {
        config_fail("synthetic.client", "behavior must be transform | echo_seed | empty | fail");
    }
    const std::string passthrough = get_string(synth, "passthrough", "selected", "synthetic");
    if (passthrough != "selected" && passthrough != "none") {
        config_fail("synthetic", "passthrough must be selected | none");
    }
}

json apply_override(json root, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override must look like key.path=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value; // plain string

    json* node = &root;
    size_t pos = 0;
    while (true) {
        const size_t dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
    return root;
}

} // namespace

PipelineConfig PipelineConfig::from_json(json j, const std::filesystem::path& config_dir) {
    validate_config(j);
    PipelineConfig config;
    config.raw = std::move(j);
    config.config_dir = config_dir;
    config.corpus_manifest = config.raw["corpus_manifest"].get<std::string>();
    config.work_dir = config.raw["work_dir"].get<std::string>();
    if (config.work_dir.is_relative()) config.work_dir = config_dir / config.work_dir;
    if (config.raw.contains("master_seed")) {
        config.master_seed = get_u64(config.raw, "master_seed", 0, "root");
    }
    config.workers = static_cast<size_t>(get_u64(config.raw, "workers", 1, "root"));
    if (config.workers == 0) config_fail("root", "workers must be >= 1");
    return config;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& config_path,
                                    const std::vector<std::string>& overrides) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config file not found: " + config_path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config parse error in " + config_path.string() + ": " + e.what());
    }
    for (const auto& o : overrides) j = apply_override(std::move(j), o);
    return from_json(std::move(j), std::filesystem::absolute(config_path).parent_path());
}

std::string PipelineConfig::config_hash() const {
    return to_hex(hash128(raw.dump()));
}

std::filesystem::path PipelineConfig::resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : config_dir / p;
}

// ---------------------------------------------------------------------------
// Atomic writes, file hashing, run manifest

void atomic_write(const std::filesystem::path& final_path,
                  const std::function<void(const std::filesystem::path&)>& writer) {
    if (final_path.has_parent_path()) std::filesystem::create_directories(final_path.parent_path());
    const std::filesystem::path tmp = final_path.string() + ".tmp";
    std::error_code ec;
    std::filesystem::remove_all(tmp, ec);
    writer(tmp);
    if (!std::filesystem::exists(tmp)) {
        throw DataError("atomic write produced nothing at " + tmp.string());
    }
    std::filesystem::remove_all(final_path, ec);
    std::filesystem::rename(tmp, final_path);
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot hash missing file: " + path.string());
    uint64_t lo = kFnvOffset;
    uint64_t hi = 0x6C62272E07BB0142ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            const unsigned char c = static_cast<unsigned char>(buf[i]);
            lo = (lo ^ c) * kFnvPrime;
            hi = (hi ^ c) * kFnvPrime;
        }
    }
    return to_hex(Hash128{lo, hi});
}

json read_run_manifest(const std::filesystem::path& work_dir) {
    const auto path = work_dir / "run_manifest.json";
    std::ifstream in(path);
    if (!in) return json::object();
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) return json::object();
    return j;
}

namespace {

void update_run_manifest(const PipelineConfig& config, const StageSummary& summary,
                         const std::map<std::string, std::string>& input_hashes) {
    json manifest = read_run_manifest(config.work_dir);
    manifest["tool_version"] = tool_version();
    manifest["config_hash"] = config.config_hash();
    json entry;
    entry["inputs"] = input_hashes;
    entry["outputs"] = summary.outputs;
    entry["counters"] = summary.counters;
    manifest["stages"][summary.stage] = entry;
    atomic_write(config.work_dir / "run_manifest.json", [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::trunc);
        out << manifest.dump(2) << '\n';
    });
}

// ---------------------------------------------------------------------------
// Stage context and shared loaders

struct StageCtx {
    const PipelineConfig& config;
    std::filesystem::path work;
    std::map<std::string, std::string> inputs; // recorded into the manifest
    StageSummary summary;

    explicit StageCtx(const PipelineConfig& cfg, std::string stage_name) : config(cfg), work(cfg.work_dir) {
        summary.stage = std::move(stage_name);
        std::filesystem::create_directories(work);
    }

    const json& block(const char* key) const {
        static const json empty = json::object();
        if (!config.raw.contains(key)) return empty;
        return config.raw[key];
    }

    void note_input(const std::filesystem::path& path) {
        if (!std::filesystem::exists(path)) {
            throw UpstreamMissingError("input not found: " + path.string());
        }
        inputs[path.filename().string()] = hash_file(path);
    }

    void note_output(const std::filesystem::path& path) {
        summary.outputs[std::filesystem::relative(path, work).string()] = hash_file(path);
    }

    void note_output_dir(const std::filesystem::path& dir) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) note_output(f);
    }

    uint64_t master_seed() const {
        if (config.master_seed) return *config.master_seed;
        return read_corpus_manifest(config.resolve(config.corpus_manifest)).master_seed;
    }

    CorpusManifest corpus_manifest() const {
        return read_corpus_manifest(config.resolve(config.corpus_manifest));
    }

    std::filesystem::path require_artifact(const std::string& name, const std::string& producer) const {
        const auto path = work / name;
        if (!std::filesystem::exists(path)) {
            throw UpstreamMissingError("missing " + name + "; run the \"" + producer + "\" stage first");
        }
        return path;
    }

    std::vector<CodeDocument> load_documents(const std::string& artifact, const std::string& producer) {
        const auto path = require_artifact(artifact, producer);
        const CorpusManifest manifest = corpus_manifest();
        return read_shard(path, manifest.languages, manifest.tokenizer);
    }
};

// Documents for a grouping/packing input selector.
std::vector<CodeDocument> load_grouping_input(StageCtx& ctx, const std::string& input) {
    if (input == "clean") {
        auto docs = ctx.load_documents("clean.jsonl", "decontam");
        ctx.note_input(ctx.work / "clean.jsonl");
        return docs;
    }
    if (input == "selected") {
        auto docs = ctx.load_documents("selected.jsonl", "select");
        ctx.note_input(ctx.work / "selected.jsonl");
        return docs;
    }
    auto docs = ctx.load_documents("phase3/corpus.jsonl", "assemble");
    ctx.note_input(ctx.work / "phase3/corpus.jsonl");
    return docs;
}

// Text records for annotator training sources: JSON lines with "content" (or
// "text") and optional "id".
std::vector<LabeledExample> read_text_records(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw UpstreamMissingError("training source not found: " + path.string());
    }
    LineReader reader(path);
    std::vector<LabeledExample> out;
    std::string line;
    uint64_t line_number = 0;
    while (reader.next(line)) {
        ++line_number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw DataError(path.string() + ":" + std::to_string(line_number) + ": malformed record");
        }
        LabeledExample ex;
        if (j.contains("content") && j["content"].is_string()) {
            ex.text = j["content"].get<std::string>();
        } else if (j.contains("text") && j["text"].is_string()) {
            ex.text = j["text"].get<std::string>();
        } else {
            throw DataError(path.string() + ":" + std::to_string(line_number) +
                            ": record lacks \"content\" or \"text\"");
        }
        ex.id = j.value("id", path.filename().string() + ":" + std::to_string(line_number));
        out.push_back(std::move(ex));
    }
    return out;
}

// Seed-deterministic sample of `count` items (0 = all), keyed by example id.
void sample_examples(std::vector<LabeledExample>& examples, uint64_t count, uint64_t seed) {
    if (count == 0 || count >= examples.size()) return;
    std::sort(examples.begin(), examples.end(), [&](const LabeledExample& a, const LabeledExample& b) {
        const uint64_t ka = derive_seed(seed, a.id);
        const uint64_t kb = derive_seed(seed, b.id);
        if (ka != kb) return ka < kb;
        return a.id < b.id;
    });
    examples.resize(count);
}

// ---------------------------------------------------------------------------
// Stage implementations

void stage_ingest(StageCtx& ctx) {
    const CorpusManifest manifest = ctx.corpus_manifest();
    const auto manifest_path = ctx.config.resolve(ctx.config.corpus_manifest);
    ctx.note_input(manifest_path);
    const auto manifest_dir = manifest_path.parent_path();
    for (const auto& shard : manifest.shards) {
        ctx.note_input(shard.is_absolute() ? shard : manifest_dir / shard);
    }

    const json block = ctx.block("ingest");
    IngestOptions options;
    options.policy = get_string(block, "policy", "skip", "ingest") == "fail"
                         ? IngestPolicy::fail_fast
                         : IngestPolicy::skip_and_count;
    if (block.contains("max_line_length")) {
        options.filters.max_line_length = get_u64(block, "max_line_length", 0, "ingest");
    }
    if (block.contains("min_alpha_ratio")) {
        options.filters.min_alpha_ratio = get_double(block, "min_alpha_ratio", 0.0, "ingest");
    }

    IngestResult result = ingest_corpus(manifest, manifest_dir, options);

    uint64_t tokens = 0;
    for (const auto& doc : result.documents) tokens += doc.token_count;

    atomic_write(ctx.work / "ingested.jsonl", [&](const std::filesystem::path& tmp) {
        write_shard(result.documents, tmp);
    });
    atomic_write(ctx.work / "ingest_errors.jsonl", [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& err : result.errors) {
            json j;
            j["shard"] = err.shard.filename().string();
            j["line"] = err.line_number;
            j["reason"] = err.reason;
            out << j.dump() << '\n';
        }
    });
    ctx.note_output(ctx.work / "ingested.jsonl");
    ctx.note_output(ctx.work / "ingest_errors.jsonl");
    ctx.summary.counters["documents"] = result.documents.size();
    ctx.summary.counters["errors"] = result.errors.size();
    ctx.summary.counters["tokens"] = tokens;
}

void stage_dedup(StageCtx& ctx) {
    auto docs = ctx.load_documents("ingested.jsonl", "ingest");
    ctx.note_input(ctx.work / "ingested.jsonl");
    const json block = ctx.block("dedup");

    DedupResult exact = exact_dedup(std::move(docs));

    NearDedupParams params;
    params.shingle_ngram = static_cast<size_t>(get_u64(block, "shingle_ngram", 5, "dedup"));
    params.signature_len = static_cast<size_t>(get_u64(block, "signature_len", 128, "dedup"));
    params.bands = static_cast<size_t>(get_u64(block, "bands", 16, "dedup"));
    params.threshold = get_double(block, "threshold", 0.85, "dedup");
    params.seed = derive_seed(ctx.master_seed(), "dedup");
    params.workers = ctx.config.workers;
    DedupResult near = near_dedup(std::move(exact.kept), params);

    std::vector<DropRecord> dropped = std::move(exact.dropped);
    dropped.insert(dropped.end(), near.dropped.begin(), near.dropped.end());

    atomic_write(ctx.work / "deduped.jsonl", [&](const std::filesystem::path& tmp) {
        write_shard(near.kept, tmp);
    });
    atomic_write(ctx.work / "dedup_report.jsonl", [&](const std::filesystem::path& tmp) {
        write_dedup_report(dropped, tmp);
    });
    ctx.note_output(ctx.work / "deduped.jsonl");
    ctx.note_output(ctx.work / "dedup_report.jsonl");
    ctx.summary.counters["kept"] = near.kept.size();
    ctx.summary.counters["dropped_exact"] = dropped.size() - near.dropped.size();
    ctx.summary.counters["dropped_near"] = near.dropped.size();
}

void stage_decontam(StageCtx& ctx) {
    auto docs = ctx.load_documents("deduped.jsonl", "dedup");
    ctx.note_input(ctx.work / "deduped.jsonl");
    const json block = ctx.block("decontam");

    DecontamResult result;
    if (block.contains("benchmarks")) {
        const auto bench_path = ctx.config.resolve(get_string(block, "benchmarks", "", "decontam"));
        ctx.note_input(bench_path);
        const auto benchmarks = read_benchmarks(bench_path);
        const std::string scope_name = get_string(block, "scope", "prompts_and_solutions", "decontam");
        IndexScope scope = IndexScope::prompts_and_solutions;
        if (scope_name == "prompts_only") scope = IndexScope::prompts_only;
        if (scope_name == "solutions_only") scope = IndexScope::solutions_only;
        const auto index = build_ngram_index(benchmarks,
                                             static_cast<size_t>(get_u64(block, "ngram", 10, "decontam")),
                                             scope);
        result = decontaminate(std::move(docs), index, get_u64(block, "min_hits", 1, "decontam"));
    } else {
        result.kept = std::move(docs);
    }

    atomic_write(ctx.work / "clean.jsonl", [&](const std::filesystem::path& tmp) {
        write_shard(result.kept, tmp);
    });
    atomic_write(ctx.work / "decontam_report.jsonl", [&](const std::filesystem::path& tmp) {
        write_removal_report(result.removed, tmp);
    });
    ctx.note_output(ctx.work / "clean.jsonl");
    ctx.note_output(ctx.work / "decontam_report.jsonl");
    ctx.summary.counters["kept"] = result.kept.size();
    ctx.summary.counters["removed"] = result.removed.size();
}

AnnotatorMode mode_from_string(const std::string& s, const std::string& context) {
    if (s == "classification") return AnnotatorMode::classification;
    if (s == "regression") return AnnotatorMode::regression;
    config_fail(context, "mode must be classification | regression");
}

void stage_train_annotator(StageCtx& ctx) {
    const json block = ctx.block("annotator");
    const std::string recipe_name = get_string(block, "recipe", "ann-best", "annotator");
    if (!block.contains("recipes") || !block["recipes"].contains(recipe_name)) {
        throw ConfigError("annotator: no source definition for recipe \"" + recipe_name +
                          "\" under annotator.recipes");
    }
    const json sources = block["recipes"][recipe_name];

    AnnotatorMode mode = AnnotatorMode::classification;
    bool mode_known = false;
    for (const auto& named : named_recipe_compositions()) {
        if (named.name == recipe_name) {
            mode = named.mode;
            mode_known = true;
        }
    }
    if (sources.contains("mode")) {
        mode = mode_from_string(sources["mode"].get<std::string>(), "annotator.recipes." + recipe_name);
        mode_known = true;
    }
    if (!mode_known) {
        throw ConfigError("annotator: custom recipe \"" + recipe_name + "\" must declare a mode");
    }

    const uint64_t seed = ctx.master_seed();
    TrainingRecipe recipe;
    recipe.name = recipe_name;
    recipe.mode = mode;

    // Labels for regression recipes: doc_id -> score in [0,5].
    std::map<std::string, double> labels;
    if (mode == AnnotatorMode::regression) {
        if (!sources.contains("labels")) {
            throw ConfigError("annotator: regression recipe \"" + recipe_name +
                              "\" requires a labels file");
        }
        const auto labels_path = ctx.config.resolve(sources["labels"].get<std::string>());
        if (!std::filesystem::exists(labels_path)) {
            throw UpstreamMissingError("label file not found: " + labels_path.string());
        }
        ctx.note_input(labels_path);
        LineReader reader(labels_path);
        std::string line;
        while (reader.next(line)) {
            if (line.empty()) continue;
            json j = json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("doc_id") || !j.contains("score")) {
                throw DataError("malformed label record in " + labels_path.string());
            }
            const double score = j["score"].get<double>();
            if (score < 0.0 || score > 5.0) {
                throw DataError("label outside [0,5] for " + j["doc_id"].get<std::string>());
            }
            labels[j["doc_id"].get<std::string>()] = score;
        }
    }

    auto add_side = [&](const char* side, double label) {
        if (!sources.contains(side)) return;
        for (const auto& src : sources[side]) {
            const uint64_t count = get_u64(src, "count", 0, "annotator source");
            std::vector<LabeledExample> examples;
            if (get_bool(src, "from_corpus", false, "annotator source")) {
                auto docs = ctx.load_documents("clean.jsonl", "decontam");
                for (auto& doc : docs) {
                    examples.push_back({doc.id, std::move(doc.content), label});
                }
            } else {
                const auto path = ctx.config.resolve(src.at("path").get<std::string>());
                ctx.note_input(path);
                examples = read_text_records(path);
                for (auto& ex : examples) ex.label = label;
            }
            if (count > examples.size()) {
                throw ConfigError("annotator: source asks for " + std::to_string(count) +
                                  " examples, only " + std::to_string(examples.size()) + " available");
            }
            sample_examples(examples, count, derive_seed(seed, std::string("train/") + side));
            for (auto& ex : examples) recipe.examples.push_back(std::move(ex));
        }
    };
    add_side("positives", 1.0);
    add_side("negatives", 0.0);

    if (mode == AnnotatorMode::regression) {
        uint64_t missing = 0;
        for (auto& ex : recipe.examples) {
            auto it = labels.find(ex.id);
            if (it == labels.end()) {
                ++missing;
            } else {
                ex.label = it->second;
            }
        }
        if (missing > 0) {
            throw ConfigError("annotator: " + std::to_string(missing) +
                              " training documents lack labels in the label file");
        }
    }

    FeatureSpec spec;
    spec.dim_log2 = static_cast<uint32_t>(get_u64(block, "dim_log2", 20, "annotator"));
    spec.hash_seed = get_u64(block, "hash_seed", 0x5EEDED, "annotator");
    spec.use_bigrams = get_bool(block, "use_bigrams", true, "annotator");
    ChunkPolicy chunks{get_u64(block, "chunk_chars", 2000, "annotator")};

    TrainingHyper hyper;
    hyper.epochs = static_cast<uint32_t>(get_u64(block, "epochs", 3, "annotator"));
    hyper.learning_rate = get_double(block, "learning_rate", 0.1, "annotator");
    hyper.l2 = get_double(block, "l2", 1e-6, "annotator");
    hyper.shuffle_seed = derive_seed(seed, "annotator");

    AnnotatorModel model = train_annotator(recipe, hyper, spec, chunks);

    const auto model_path = ctx.work / ("annotator-" + recipe_name + ".model");
    atomic_write(model_path, [&](const std::filesystem::path& tmp) { save_annotator(model, tmp); });
    const auto ids_path = ctx.work / ("annotator-" + recipe_name + ".train_ids.txt");
    atomic_write(ids_path, [&](const std::filesystem::path& tmp) {
        std::vector<std::string> ids;
        for (const auto& ex : recipe.examples) ids.push_back(ex.id);
        std::sort(ids.begin(), ids.end());
        std::ofstream out(tmp, std::ios::trunc);
        for (const auto& id : ids) out << id << '\n';
    });
    ctx.note_output(model_path);
    ctx.note_output(ids_path);
    ctx.summary.counters["examples"] = recipe.examples.size();
    ctx.summary.counters["epochs"] = hyper.epochs;
}

void stage_score(StageCtx& ctx) {
    const json block = ctx.block("annotator");
    const std::string recipe_name = get_string(block, "recipe", "ann-best", "annotator");
    const auto model_path = ctx.require_artifact("annotator-" + recipe_name + ".model", "train-annotator");
    ctx.note_input(model_path);
    const AnnotatorModel model = load_annotator(model_path);

    auto docs = ctx.load_documents("clean.jsonl", "decontam");
    ctx.note_input(ctx.work / "clean.jsonl");
    auto scores = score_corpus(model, docs, ctx.config.workers);

    const auto out_path = ctx.work / ("scores-" + recipe_name + ".jsonl");
    atomic_write(out_path, [&](const std::filesystem::path& tmp) { write_scores(scores, tmp); });
    ctx.note_output(out_path);
    ctx.summary.counters["documents"] = scores.size();
    ctx.summary.stage = "score[" + recipe_name + "]";
}

MixRatio mix_from_config(const json& sel_block, const std::vector<ScoredDocument>& records) {
    if (sel_block.contains("mix") && sel_block["mix"].is_object()) {
        MixRatio mix;
        for (auto it = sel_block["mix"].begin(); it != sel_block["mix"].end(); ++it) {
            mix.weights[it.key()] = it.value().get<double>();
        }
        mix.validate();
        return mix;
    }
    std::map<std::string, uint64_t> mass;
    for (const auto& rec : records) mass[rec.language] += rec.token_count;
    return MixRatio::measured(mass);
}

void stage_select(StageCtx& ctx) {
    const json block = ctx.block("selection");
    const std::string recipe_name = get_string(ctx.block("annotator"), "recipe", "ann-best", "annotator");
    const auto scores_path = ctx.require_artifact("scores-" + recipe_name + ".jsonl", "score");
    ctx.note_input(scores_path);
    const auto records = read_scores(scores_path);

    const uint64_t horizon = get_u64(block, "total_horizon_tokens", 50000000000ULL, "selection");
    const uint32_t k = static_cast<uint32_t>(get_u64(block, "repetitions", 4, "selection"));
    SelectionPlan plan = plan_repetitions(horizon, k);
    const MixRatio mix = mix_from_config(block, records);
    plan.quotas = compute_quotas(mix, plan.unique_budget);
    SelectionResult result = select_top_percentile(records, plan.quotas);

    atomic_write(ctx.work / "selection.json", [&](const std::filesystem::path& tmp) {
        write_selection_manifest(plan, result, mix, tmp);
    });
    ctx.note_output(ctx.work / "selection.json");

    // Materialize the filtered shard for downstream grouping.
    auto docs = ctx.load_documents("clean.jsonl", "decontam");
    std::unordered_set<std::string> selected(result.selected_ids.begin(), result.selected_ids.end());
    std::vector<CodeDocument> subset;
    for (auto& doc : docs) {
        if (selected.count(doc.id)) subset.push_back(std::move(doc));
    }
    atomic_write(ctx.work / "selected.jsonl", [&](const std::filesystem::path& tmp) {
        write_shard(subset, tmp);
    });
    ctx.note_output(ctx.work / "selected.jsonl");

    uint64_t selected_tokens = 0, shortfalls = 0;
    for (const auto& [lang, fill] : result.fills) {
        selected_tokens += fill.selected_tokens;
        if (fill.shortfall) ++shortfalls;
    }
    ctx.summary.counters["selected_docs"] = result.selected_ids.size();
    ctx.summary.counters["selected_tokens"] = selected_tokens;
    ctx.summary.counters["shortfall_languages"] = shortfalls;
    ctx.summary.counters["repetition"] = plan.repetition;
}

void stage_group(StageCtx& ctx) {
    const json block = ctx.block("grouping");
    const std::string variant = get_string(block, "variant", "phase1", "grouping");
    const std::string input = get_string(block, "input", "clean", "grouping");
    const auto strategy = grouping_strategy_from_name(
        get_string(block, "strategy", "by_language_and_repo", "grouping"));

    auto docs = load_grouping_input(ctx, input);
    const auto groups = group_documents(docs, strategy, derive_seed(ctx.master_seed(), "group/" + variant));

    const auto out_path = ctx.work / ("groups-" + variant + ".jsonl");
    atomic_write(out_path, [&](const std::filesystem::path& tmp) {
        write_training_documents(groups, tmp);
    });
    ctx.note_output(out_path);
    ctx.summary.counters["training_documents"] = groups.size();
    ctx.summary.counters["files"] = docs.size();
    ctx.summary.stage = "group[" + variant + "]";
}

void stage_pack(StageCtx& ctx) {
    const json block = ctx.block("packing");
    const std::string variant = get_string(block, "variant", "phase1", "packing");
    const std::string input = get_string(ctx.block("grouping"), "input", "clean", "grouping");

    const auto groups_path = ctx.require_artifact("groups-" + variant + ".jsonl", "group");
    ctx.note_input(groups_path);
    const auto groups = read_training_documents(groups_path);
    auto docs = load_grouping_input(ctx, input);
    const auto by_id = index_documents(docs);

    const CorpusManifest manifest = ctx.corpus_manifest();
    PackingParams params;
    params.seq_len = get_u64(block, "seq_len", 8192, "packing");
    params.pad_id = static_cast<uint32_t>(get_u64(block, "pad_id", 0, "packing"));
    params.file_sep_id = static_cast<uint32_t>(get_u64(block, "file_sep_id", 1, "packing"));
    params.boundary_id = static_cast<uint32_t>(get_u64(block, "boundary_id", 2, "packing"));
    params.shard_sequences = get_u64(block, "shard_sequences", 1024, "packing");
    params.debug_text = get_bool(block, "debug_text", false, "packing");
    params.repetitions = static_cast<uint32_t>(get_u64(block, "repetitions", 1, "packing"));
    params.seed = derive_seed(ctx.master_seed(), "pack/" + variant);

    const auto sequences = pack_sequences(groups, by_id, manifest.tokenizer, params);

    const auto out_dir = ctx.work / ("packed-" + variant);
    PackStats stats;
    atomic_write(out_dir, [&](const std::filesystem::path& tmp) {
        std::filesystem::create_directories(tmp);
        stats = write_packed_shards(sequences, tmp, params);
    });

    json pack_manifest;
    pack_manifest["seq_len"] = params.seq_len;
    pack_manifest["repetitions"] = params.repetitions;
    pack_manifest["pad_id"] = params.pad_id;
    pack_manifest["file_sep_id"] = params.file_sep_id;
    pack_manifest["boundary_id"] = params.boundary_id;
    pack_manifest["sequences"] = stats.sequences;
    pack_manifest["tokens"] = stats.total_tokens;
    pack_manifest["pad_tokens"] = stats.pad_tokens;
    pack_manifest["boundary_tokens"] = stats.boundary_tokens;
    json shard_hashes = json::object();
    {
        std::vector<std::filesystem::path> files;
        if (std::filesystem::exists(out_dir)) {
            for (const auto& entry : std::filesystem::recursive_directory_iterator(out_dir)) {
                if (entry.is_regular_file()) files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            shard_hashes[std::filesystem::relative(f, out_dir).string()] = hash_file(f);
        }
    }
    pack_manifest["files"] = shard_hashes;
    const auto manifest_path = ctx.work / ("pack-" + variant + ".json");
    atomic_write(manifest_path, [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::trunc);
        out << pack_manifest.dump(2) << '\n';
    });

    if (std::filesystem::exists(out_dir)) ctx.note_output_dir(out_dir);
    ctx.note_output(manifest_path);
    ctx.summary.counters["sequences"] = stats.sequences;
    ctx.summary.counters["tokens"] = stats.total_tokens;
    ctx.summary.counters["pad_tokens"] = stats.pad_tokens;
    ctx.summary.stage = "pack[" + variant + "]";
}

void stage_schedule(StageCtx& ctx) {
    const json block = ctx.block("schedule");
    const json general = block_of(block, "general");
    const json continued = block_of(block, "continued");
    const uint64_t batch = get_u64(block, "batch_size", 512, "schedule");
    const uint64_t stride = get_u64(block, "stride", 100, "schedule");
    const uint64_t seq_len = get_u64(ctx.block("packing"), "seq_len", 8192, "packing");

    std::vector<std::string> variants = {"general", "rewarmup"};
    if (block.contains("variants")) {
        variants = block["variants"].get<std::vector<std::string>>();
    }

    const uint64_t general_horizon = get_u64(general, "horizon_tokens", 500000000000ULL, "schedule.general");
    const uint64_t continued_horizon =
        get_u64(continued, "horizon_tokens",
                get_u64(ctx.block("selection"), "total_horizon_tokens", 50000000000ULL, "selection"),
                "schedule.continued");
    const double max_lr = get_double(general, "max_lr", 5.3e-4, "schedule.general");
    const double min_lr = get_double(general, "min_lr", 5.3e-5, "schedule.general");

    for (const auto& variant : variants) {
        SchedulePhase phase;
        phase.max_lr = get_double(continued, "max_lr", max_lr, "schedule.continued");
        phase.min_lr = get_double(continued, "min_lr", min_lr, "schedule.continued");
        if (variant == "general") {
            phase.shape = ScheduleShape::cosine_with_warmup;
            phase.max_lr = max_lr;
            phase.min_lr = min_lr;
            phase.warmup_iters = get_u64(general, "warmup_iters", 600, "schedule.general");
            phase.total_iters = iterations_for_tokens(general_horizon, seq_len, batch);
        } else if (variant == "rewarmup") {
            phase.shape = ScheduleShape::rewarmup_linear_decay;
            phase.warmup_iters = get_u64(continued, "rewarmup_iters", 1000, "schedule.continued");
            phase.total_iters = iterations_for_tokens(continued_horizon, seq_len, batch);
        } else if (variant == "linear") {
            phase.shape = ScheduleShape::linear_anneal;
            phase.warmup_iters = 0;
            phase.total_iters = iterations_for_tokens(continued_horizon, seq_len, batch);
        } else { // constant
            phase.shape = ScheduleShape::constant;
            phase.warmup_iters = 0;
            phase.total_iters = iterations_for_tokens(continued_horizon, seq_len, batch);
        }
        const auto rows = emit_schedule(phase, stride);
        const auto path = ctx.work / ("schedule-" + variant + ".tsv");
        atomic_write(path, [&](const std::filesystem::path& tmp) {
            write_schedule_table(rows, tmp);
        });
        ctx.note_output(path);
        ctx.summary.counters["rows_" + variant] = rows.size();
    }
}

void stage_eval_annotator(StageCtx& ctx) {
    const json block = ctx.block("eval");
    std::vector<std::string> models;
    if (block.contains("models")) {
        models = block["models"].get<std::vector<std::string>>();
    } else {
        models = {get_string(ctx.block("annotator"), "recipe", "ann-best", "annotator")};
    }

    std::filesystem::path bench_path;
    if (block.contains("benchmarks")) {
        bench_path = ctx.config.resolve(get_string(block, "benchmarks", "", "eval"));
    } else if (ctx.block("decontam").contains("benchmarks")) {
        bench_path = ctx.config.resolve(
            get_string(ctx.block("decontam"), "benchmarks", "", "decontam"));
    } else {
        throw ConfigError("eval: no benchmark file configured");
    }
    ctx.note_input(bench_path);
    const auto benchmarks = read_benchmarks(bench_path);

    std::vector<CodeDocument> heldout;
    if (block.contains("heldout")) {
        const auto heldout_path = ctx.config.resolve(get_string(block, "heldout", "", "eval"));
        const CorpusManifest manifest = ctx.corpus_manifest();
        heldout = read_shard(heldout_path, manifest.languages, manifest.tokenizer);
        ctx.note_input(heldout_path);
    } else {
        heldout = ctx.load_documents("clean.jsonl", "decontam");
        ctx.note_input(ctx.work / "clean.jsonl");
    }

    const size_t n_negatives = static_cast<size_t>(get_u64(block, "n_negatives", 1000, "eval"));
    const auto statistic = get_string(block, "statistic", "spearman", "eval") == "pearson"
                               ? CorrelationStatistic::pearson
                               : CorrelationStatistic::spearman;
    const uint64_t seed = derive_seed(ctx.master_seed(), "eval");

    std::map<std::string, double> pass_rates;
    if (block.contains("pass_rates")) {
        const auto pass_path = ctx.config.resolve(get_string(block, "pass_rates", "", "eval"));
        ctx.note_input(pass_path);
        pass_rates = read_pass_rates(pass_path);
    }

    for (const auto& recipe_name : models) {
        const auto model_path = ctx.require_artifact("annotator-" + recipe_name + ".model",
                                                     "train-annotator");
        ctx.note_input(model_path);
        const AnnotatorModel model = load_annotator(model_path);

        // Negatives must be unseen during training.
        std::unordered_set<std::string> train_ids;
        const auto ids_path = ctx.work / ("annotator-" + recipe_name + ".train_ids.txt");
        if (std::filesystem::exists(ids_path)) {
            std::ifstream in(ids_path);
            std::string id;
            while (std::getline(in, id)) {
                if (!id.empty()) train_ids.insert(id);
            }
        }
        std::vector<CodeDocument> unseen;
        for (const auto& doc : heldout) {
            if (!train_ids.count(doc.id)) unseen.push_back(doc);
        }

        std::map<std::string, double> auc_by_benchmark;
        for (const auto& bench : benchmarks) {
            const ValidationSet set = build_validation_set(bench, unseen, n_negatives, seed, train_ids);
            std::vector<std::pair<double, Label>> scored;
            for (const auto& [id, text] : set.positives) {
                CodeDocument doc;
                doc.content = text;
                scored.emplace_back(score_document(model, doc), Label::positive);
            }
            for (const auto& [id, text] : set.negatives) {
                CodeDocument doc;
                doc.content = text;
                scored.emplace_back(score_document(model, doc), Label::negative);
            }
            auc_by_benchmark[bench.name] = roc_auc(scored);
        }

        const auto json_path = ctx.work / ("auc_report-" + recipe_name + ".json");
        const auto table_path = ctx.work / ("auc_report-" + recipe_name + ".tsv");
        if (!pass_rates.empty()) {
            const AucReport report = correlation_report(auc_by_benchmark, pass_rates, statistic);
            atomic_write(json_path, [&](const std::filesystem::path& tmp) {
                write_auc_report(report, tmp, table_path.string() + ".tmp2");
            });
            std::filesystem::rename(table_path.string() + ".tmp2", table_path);
        } else {
            json j;
            j["per_benchmark"] = auc_by_benchmark;
            atomic_write(json_path, [&](const std::filesystem::path& tmp) {
                std::ofstream out(tmp, std::ios::trunc);
                out << j.dump(2) << '\n';
            });
            atomic_write(table_path, [&](const std::filesystem::path& tmp) {
                std::ofstream out(tmp, std::ios::trunc);
                out << "benchmark\tauc\n";
                char buf[128];
                for (const auto& [name, auc] : auc_by_benchmark) {
                    std::snprintf(buf, sizeof(buf), "%s\t%.17g\n", name.c_str(), auc);
                    out << buf;
                }
            });
        }
        ctx.note_output(json_path);
        ctx.note_output(table_path);
        ctx.summary.counters["benchmarks_" + recipe_name] = auc_by_benchmark.size();
    }
}

void stage_emit_seeds(StageCtx& ctx) {
    const json block = ctx.block("synthetic");
    const std::string recipe_name = get_string(ctx.block("annotator"), "recipe", "ann-best", "annotator");
    const auto scores_path = ctx.require_artifact("scores-" + recipe_name + ".jsonl", "score");
    ctx.note_input(scores_path);
    const auto records = read_scores(scores_path);

    const double python_target = get_double(block, "python_target", 0.5, "synthetic");
    const uint64_t horizon = get_u64(block, "seed_horizon_tokens", 2000000000ULL, "synthetic");

    std::map<std::string, uint64_t> mass;
    for (const auto& rec : records) mass[rec.language] += rec.token_count;
    const MixRatio mix = MixRatio::measured(mass);
    const MixRatio reweighted = reweight_python(mix, python_target);

    SelectionPlan plan = plan_repetitions(horizon, 1);
    plan.quotas = compute_quotas(reweighted, plan.unique_budget);
    const SelectionResult seeds = select_seeds(records, plan);

    atomic_write(ctx.work / "seeds.json", [&](const std::filesystem::path& tmp) {
        write_selection_manifest(plan, seeds, reweighted, tmp);
    });
    ctx.note_output(ctx.work / "seeds.json");

    auto docs = ctx.load_documents("clean.jsonl", "decontam");
    ctx.note_input(ctx.work / "clean.jsonl");
    std::unordered_set<std::string> selected(seeds.selected_ids.begin(), seeds.selected_ids.end());
    std::vector<CodeDocument> seed_docs;
    for (auto& doc : docs) {
        if (selected.count(doc.id)) seed_docs.push_back(std::move(doc));
    }
    std::sort(seed_docs.begin(), seed_docs.end(),
              [](const CodeDocument& a, const CodeDocument& b) { return a.id < b.id; });

    const std::string template_id = get_string(block, "template", "oss-instruct-pretrain-v1", "synthetic");
    std::optional<std::filesystem::path> template_file;
    if (block.contains("template_file")) {
        template_file = ctx.config.resolve(get_string(block, "template_file", "", "synthetic"));
    }
    const uint64_t max_seed_chars = get_u64(block, "max_seed_chars", 4000, "synthetic");
    const auto requests = emit_generation_requests(seed_docs, template_id, max_seed_chars, template_file);

    atomic_write(ctx.work / "requests.jsonl", [&](const std::filesystem::path& tmp) {
        write_request_log(requests, tmp);
    });
    ctx.note_output(ctx.work / "requests.jsonl");
    ctx.summary.counters["seeds"] = seed_docs.size();
    ctx.summary.counters["requests"] = requests.size();
}

std::vector<GenerationRequest> read_request_log_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("request log not found: " + path.string());
    std::vector<GenerationRequest> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        GenerationRequest req;
        req.request_id = j.at("request_id").get<std::string>();
        req.seed_doc_id = j.at("seed_doc_id").get<std::string>();
        req.language = j.at("language").get<std::string>();
        req.prompt_text = j.at("prompt_text").get<std::string>();
        req.max_seed_chars = j.value("max_seed_chars", uint64_t{4000});
        out.push_back(std::move(req));
    }
    return out;
}

void stage_collect_synth(StageCtx& ctx) {
    const json block = ctx.block("synthetic");
    const auto requests_path = ctx.require_artifact("requests.jsonl", "emit-seeds");
    ctx.note_input(requests_path);
    const auto requests = read_request_log_file(requests_path);

    const json client_block = block_of(block, "client");
    std::unique_ptr<GenerationClient> client;
    if (get_string(client_block, "mode", "mock", "synthetic.client") == "http") {
        HttpClientConfig http;
        http.endpoint = get_string(client_block, "endpoint", http.endpoint, "synthetic.client");
        http.path = get_string(client_block, "path", http.path, "synthetic.client");
        http.timeout_seconds = static_cast<int>(get_u64(client_block, "timeout_seconds", 60, "synthetic.client"));
        const std::string auth_env =
            get_string(client_block, "auth_env", "CODESIEVE_GEN_TOKEN", "synthetic.client");
        if (const char* token = std::getenv(auth_env.c_str())) http.auth_token = token;
        client = make_http_client(http);
    } else {
        MockBehavior behavior;
        const std::string kind = get_string(client_block, "behavior", "transform", "synthetic.client");
        if (kind == "echo_seed") behavior.kind = MockBehavior::Kind::echo_seed;
        if (kind == "empty") behavior.kind = MockBehavior::Kind::empty;
        if (kind == "fail") behavior.kind = MockBehavior::Kind::fail;
        behavior.seed = derive_seed(ctx.master_seed(), "generation");
        client = make_mock_client(behavior);
    }

    CollectOptions options;
    options.model = get_string(client_block, "model", "offline-mock", "synthetic.client");
    options.max_attempts = static_cast<uint32_t>(get_u64(block, "max_attempts", 3, "synthetic"));
    options.backoff_base_ms = static_cast<uint32_t>(get_u64(block, "backoff_base_ms", 100, "synthetic"));
    options.seed_jaccard_bound = get_double(block, "seed_jaccard_bound", 0.85, "synthetic");
    options.shingle_ngram = static_cast<size_t>(get_u64(ctx.block("dedup"), "shingle_ngram", 5, "dedup"));
    options.workers = ctx.config.workers;

    NgramIndex index;
    const json decontam_block = ctx.block("decontam");
    if (decontam_block.contains("benchmarks")) {
        const auto bench_path = ctx.config.resolve(get_string(decontam_block, "benchmarks", "", "decontam"));
        index = build_ngram_index(read_benchmarks(bench_path),
                                  static_cast<size_t>(get_u64(decontam_block, "ngram", 10, "decontam")));
        options.decontam_index = &index;
    }

    const auto responses = collect_responses(requests, *client, options);

    atomic_write(ctx.work / "responses.jsonl", [&](const std::filesystem::path& tmp) {
        write_response_log(responses, tmp);
    });
    ctx.note_output(ctx.work / "responses.jsonl");
    uint64_t accepted = 0;
    for (const auto& resp : responses) {
        if (resp.accepted) ++accepted;
    }
    ctx.summary.counters["responses"] = responses.size();
    ctx.summary.counters["accepted"] = accepted;
    ctx.summary.counters["rejected"] = responses.size() - accepted;
}

void stage_assemble(StageCtx& ctx) {
    const json block = ctx.block("synthetic");
    const auto responses_path = ctx.require_artifact("responses.jsonl", "collect-synth");
    ctx.note_input(responses_path);
    const auto responses = read_response_log(responses_path);

    std::vector<CodeDocument> passthrough;
    if (get_string(block, "passthrough", "selected", "synthetic") == "selected") {
        passthrough = ctx.load_documents("selected.jsonl", "select");
        ctx.note_input(ctx.work / "selected.jsonl");
    }

    const CorpusManifest manifest = ctx.corpus_manifest();
    const std::string template_id = get_string(block, "template", "oss-instruct-pretrain-v1", "synthetic");
    const AssembledCorpus corpus = assemble_phase3_corpus(responses, passthrough, template_id,
                                                          manifest.tokenizer, manifest.languages);

    atomic_write(ctx.work / "phase3" / "corpus.jsonl", [&](const std::filesystem::path& tmp) {
        write_shard(corpus.documents, tmp);
    });

    uint64_t synth_docs = corpus.seed_provenance.size();
    uint64_t synth_tokens = 0, pass_tokens = 0;
    for (const auto& doc : corpus.documents) {
        if (doc.repo_name.rfind("synthetic/", 0) == 0) {
            synth_tokens += doc.token_count;
        } else {
            pass_tokens += doc.token_count;
        }
    }
    json m;
    m["template"] = template_id;
    m["blend"] = {
        {"passthrough_docs", corpus.documents.size() - synth_docs},
        {"synthetic_docs", synth_docs},
        {"passthrough_tokens", pass_tokens},
        {"synthetic_tokens", synth_tokens},
    };
    json prov = json::array();
    for (const auto& [synth_id, seed_id] : corpus.seed_provenance) {
        prov.push_back({{"id", synth_id}, {"seed_doc_id", seed_id}});
    }
    m["seed_provenance"] = prov;
    atomic_write(ctx.work / "phase3" / "manifest.json", [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::trunc);
        out << m.dump(2) << '\n';
    });

    ctx.note_output(ctx.work / "phase3" / "corpus.jsonl");
    ctx.note_output(ctx.work / "phase3" / "manifest.json");
    ctx.summary.counters["documents"] = corpus.documents.size();
    ctx.summary.counters["synthetic_documents"] = synth_docs;
}

} // namespace

// ---------------------------------------------------------------------------
// Dispatch

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {
        "ingest", "dedup", "decontam", "train-annotator", "score", "select", "group",
        "pack", "schedule", "eval-annotator", "emit-seeds", "collect-synth", "assemble",
    };
    return names;
}

bool is_stage_name(const std::string& name) {
    const auto& names = stage_names();
    return std::find(names.begin(), names.end(), name) != names.end();
}

std::string StageSummary::to_json_line() const {
    json j;
    j["stage"] = stage;
    j["status"] = "ok";
    j["wall_ms"] = wall_ms;
    j["counters"] = counters;
    j["outputs"] = outputs;
    return j.dump();
}

StageSummary run_stage(const PipelineConfig& config, const std::string& stage_name) {
    if (!is_stage_name(stage_name)) {
        throw ConfigError("unknown stage \"" + stage_name + "\"");
    }
    StageCtx ctx(config, stage_name);
    const auto start = std::chrono::steady_clock::now();

    if (stage_name == "ingest") stage_ingest(ctx);
    else if (stage_name == "dedup") stage_dedup(ctx);
    else if (stage_name == "decontam") stage_decontam(ctx);
    else if (stage_name == "train-annotator") stage_train_annotator(ctx);
    else if (stage_name == "score") stage_score(ctx);
    else if (stage_name == "select") stage_select(ctx);
    else if (stage_name == "group") stage_group(ctx);
    else if (stage_name == "pack") stage_pack(ctx);
    else if (stage_name == "schedule") stage_schedule(ctx);
    else if (stage_name == "eval-annotator") stage_eval_annotator(ctx);
    else if (stage_name == "emit-seeds") stage_emit_seeds(ctx);
    else if (stage_name == "collect-synth") stage_collect_synth(ctx);
    else if (stage_name == "assemble") stage_assemble(ctx);

    const auto end = std::chrono::steady_clock::now();
    ctx.summary.wall_ms =
        static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count());
    update_run_manifest(config, ctx.summary, ctx.inputs);
    return ctx.summary;
}

// ---------------------------------------------------------------------------
// Recipes

const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names = {
        "phase1", "phase2", "phase3",
        "ablation-table2", "ablation-table3", "ablation-table4", "ablation-table5",
    };
    return names;
}

namespace {

PipelineConfig with_overrides(const PipelineConfig& config,
                              const std::vector<std::pair<std::string, json>>& sets) {
    json j = config.raw;
    for (const auto& [path, value] : sets) {
        json* node = &j;
        size_t pos = 0;
        while (true) {
            const size_t dot = path.find('.', pos);
            const std::string key =
                path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
            if (dot == std::string::npos) {
                (*node)[key] = value;
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
    return PipelineConfig::from_json(std::move(j), config.config_dir);
}

} // namespace

std::vector<StageSummary> run_recipe(const PipelineConfig& config, const std::string& recipe_name) {
    std::vector<StageSummary> summaries;
    auto step = [&](const PipelineConfig& cfg, const std::string& stage) {
        summaries.push_back(run_stage(cfg, stage));
    };

    if (recipe_name == "phase1") {
        step(config, "ingest");
        step(config, "dedup");
        step(config, "decontam");
        const auto cfg = with_overrides(config, {{"grouping.variant", "phase1"},
                                                 {"grouping.input", "clean"},
                                                 {"packing.variant", "phase1"},
                                                 {"packing.repetitions", 1}});
        step(cfg, "group");
        step(cfg, "pack");
        step(config, "schedule");
        return summaries;
    }
    if (recipe_name == "phase2") {
        step(config, "train-annotator");
        step(config, "score");
        step(config, "select");
        const uint64_t k = get_u64(block_of(config.raw, "selection"), "repetitions", 4, "selection");
        const auto cfg = with_overrides(config, {{"grouping.variant", "phase2"},
                                                 {"grouping.input", "selected"},
                                                 {"packing.variant", "phase2"},
                                                 {"packing.repetitions", k}});
        step(cfg, "group");
        step(cfg, "pack");
        step(config, "schedule");
        return summaries;
    }
    if (recipe_name == "phase3") {
        step(config, "emit-seeds");
        step(config, "collect-synth");
        step(config, "assemble");
        const auto cfg = with_overrides(config, {{"grouping.variant", "phase3"},
                                                 {"grouping.input", "phase3"},
                                                 {"packing.variant", "phase3"},
                                                 {"packing.repetitions", 1}});
        step(cfg, "group");
        step(cfg, "pack");
        return summaries;
    }
    if (recipe_name == "ablation-table2") {
        for (const auto& [variant, strategy] :
             std::vector<std::pair<std::string, std::string>>{
                 {"table2-by-repo", "by_repo"},
                 {"table2-by-lang-repo", "by_language_and_repo"}}) {
            const auto cfg = with_overrides(config, {{"grouping.variant", variant},
                                                     {"grouping.input", "clean"},
                                                     {"grouping.strategy", strategy},
                                                     {"packing.variant", variant},
                                                     {"packing.repetitions", 1}});
            step(cfg, "group");
            step(cfg, "pack");
        }
        return summaries;
    }
    if (recipe_name == "ablation-table3") {
        const json ann = block_of(config.raw, "annotator");
        if (!ann.contains("recipes") || ann["recipes"].empty()) {
            throw ConfigError("ablation-table3: annotator.recipes must define the recipe variants");
        }
        for (auto it = ann["recipes"].begin(); it != ann["recipes"].end(); ++it) {
            const auto cfg = with_overrides(config, {{"annotator.recipe", it.key()}});
            step(cfg, "train-annotator");
            step(cfg, "score");
        }
        return summaries;
    }
    if (recipe_name == "ablation-table4") {
        const auto cfg = with_overrides(
            config, {{"schedule.variants", json::array({"linear", "constant", "rewarmup"})}});
        step(cfg, "schedule");
        return summaries;
    }
    if (recipe_name == "ablation-table5") {
        const json sel = block_of(config.raw, "selection");
        const uint64_t horizon = get_u64(sel, "total_horizon_tokens", 50000000000ULL, "selection");
        json plans = json::array();
        for (uint32_t k = 1; k <= 5; ++k) {
            const SelectionPlan plan = plan_repetitions(horizon, k);
            plans.push_back({{"repetition", plan.repetition},
                             {"total_budget_tokens", plan.total_budget_tokens},
                             {"unique_budget", plan.unique_budget},
                             {"remainder", plan.remainder}});
        }
        atomic_write(config.work_dir / "table5_plans.json", [&](const std::filesystem::path& tmp) {
            std::ofstream out(tmp, std::ios::trunc);
            out << plans.dump(2) << '\n';
        });
        // With scores on disk, also materialize the per-k selections.
        const std::string recipe = get_string(block_of(config.raw, "annotator"), "recipe",
                                              "ann-best", "annotator");
        if (std::filesystem::exists(config.work_dir / ("scores-" + recipe + ".jsonl"))) {
            for (uint32_t k = 1; k <= 5; ++k) {
                const auto cfg = with_overrides(config, {{"selection.repetitions", k}});
                StageSummary s = run_stage(cfg, "select");
                // Keep each k's manifest around.
                std::filesystem::copy_file(config.work_dir / "selection.json",
                                           config.work_dir / ("selection-k" + std::to_string(k) + ".json"),
                                           std::filesystem::copy_options::overwrite_existing);
                s.stage = "select[k=" + std::to_string(k) + "]";
                summaries.push_back(std::move(s));
            }
        }
        return summaries;
    }
    throw ConfigError("unknown recipe \"" + recipe_name + "\"; expected one of phase1, phase2, "
                      "phase3, ablation-table2, ablation-table3, ablation-table4, ablation-table5");
}

} // namespace codesieve
