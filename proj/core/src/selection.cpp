// SPDX-License-Identifier: Apache-2.0
#include "codesieve/selection.hpp"

#include "codesieve/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace codesieve {

using nlohmann::json;

void MixRatio::validate() const {
    double sum = 0.0;
    for (const auto& [lang, w] : weights) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw ConfigError("mix ratio: negative or non-finite weight for " + lang);
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("mix ratio: weights sum to " + std::to_string(sum) + ", expected 1");
    }
}

MixRatio MixRatio::measured(const std::map<std::string, uint64_t>& token_mass) {
    MixRatio mix;
    uint64_t total = 0;
    for (const auto& [lang, mass] : token_mass) total += mass;
    if (total == 0) throw ConfigError("mix ratio: corpus has zero tokens");
    for (const auto& [lang, mass] : token_mass) {
        mix.weights[lang] = static_cast<double>(mass) / static_cast<double>(total);
    }
    return mix;
}

std::map<std::string, uint64_t> compute_quotas(const MixRatio& mix, uint64_t unique_budget) {
    mix.validate();
    if (unique_budget == 0) throw ConfigError("compute_quotas: zero budget");

    struct Part {
        std::string lang;
        uint64_t floor_quota;
        double remainder;
    };
    std::vector<Part> parts;
    uint64_t assigned = 0;
    for (const auto& [lang, w] : mix.weights) {
        const double exact = w * static_cast<double>(unique_budget);
        const double fl = std::floor(exact);
        parts.push_back({lang, static_cast<uint64_t>(fl), exact - fl});
        assigned += static_cast<uint64_t>(fl);
    }
    uint64_t leftover = unique_budget - assigned;
    // Largest remainder first; ties go to the lexicographically smaller name.
    std::sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return a.lang < b.lang;
    });
    for (size_t i = 0; i < parts.size() && leftover > 0; ++i, --leftover) {
        parts[i].floor_quota += 1;
    }
    std::map<std::string, uint64_t> quotas;
    for (const auto& p : parts) quotas[p.lang] = p.floor_quota;
    return quotas;
}

MixRatio reweight_python(const MixRatio& mix, double target_python) {
    mix.validate();
    if (!(target_python > 0.0 && target_python < 1.0)) {
        throw ConfigError("reweight_python: target must be in (0,1)");
    }
    auto it = mix.weights.find("Python");
    if (it == mix.weights.end()) {
        throw ConfigError("reweight_python: Python not present in mix");
    }
    const double old_python = it->second;
    const double other_mass = 1.0 - old_python;
    if (other_mass <= 0.0) {
        throw ConfigError("reweight_python: no non-Python mass to rescale");
    }
    const double scale = (1.0 - target_python) / other_mass;
    MixRatio out;
    for (const auto& [lang, w] : mix.weights) {
        out.weights[lang] = (lang == "Python") ? target_python : w * scale;
    }
    return out;
}

SelectionPlan plan_repetitions(uint64_t total_horizon, uint32_t k) {
    if (k == 0) throw ConfigError("plan_repetitions: k must be >= 1");
    if (total_horizon == 0) throw ConfigError("plan_repetitions: zero token horizon");
    SelectionPlan plan;
    plan.total_budget_tokens = total_horizon;
    plan.repetition = k;
    plan.unique_budget = total_horizon / k;
    plan.remainder = total_horizon - plan.unique_budget * k;
    return plan;
}

SelectionResult select_top_percentile(const std::vector<ScoredDocument>& records,
                                      const std::map<std::string, uint64_t>& quotas) {
    std::map<std::string, std::vector<const ScoredDocument*>> by_lang;
    for (const auto& rec : records) {
        if (!std::isfinite(rec.score)) {
            throw DataError("select: non-finite score for document " + rec.doc_id);
        }
        if (rec.token_count == 0) {
            throw DataError("select: zero token_count for document " + rec.doc_id);
        }
        if (!quotas.count(rec.language)) {
            throw ConfigError("select: no quota for language " + rec.language);
        }
        by_lang[rec.language].push_back(&rec);
    }

    SelectionResult result;
    for (const auto& [lang, quota] : quotas) {
        result.fills[lang].quota = quota;
    }
    for (auto& [lang, recs] : by_lang) {
        std::sort(recs.begin(), recs.end(), [](const ScoredDocument* a, const ScoredDocument* b) {
            if (a->score != b->score) return a->score > b->score;
            return a->doc_id < b->doc_id;
        });
        auto& fill = result.fills[lang];
        for (const auto* rec : recs) {
            if (fill.selected_tokens >= fill.quota) break;
            result.selected_ids.push_back(rec->doc_id);
            fill.selected_tokens += rec->token_count;
            fill.selected_docs += 1;
        }
        fill.shortfall = fill.selected_tokens < fill.quota;
    }
    std::sort(result.selected_ids.begin(), result.selected_ids.end());
    return result;
}

void write_selection_manifest(const SelectionPlan& plan,
                              const SelectionResult& result,
                              const MixRatio& mix,
                              const std::filesystem::path& path) {
    json j;
    j["plan"] = {
        {"total_budget_tokens", plan.total_budget_tokens},
        {"repetition", plan.repetition},
        {"unique_budget", plan.unique_budget},
        {"remainder", plan.remainder},
        {"quotas", plan.quotas},
    };
    j["mix"] = mix.weights;
    json fills = json::object();
    for (const auto& [lang, fill] : result.fills) {
        fills[lang] = {
            {"quota", fill.quota},
            {"selected_tokens", fill.selected_tokens},
            {"selected_docs", fill.selected_docs},
            {"shortfall", fill.shortfall},
        };
    }
    j["fills"] = fills;
    j["selected_ids"] = result.selected_ids;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write selection manifest: " + path.string());
    out << j.dump(2) << '\n';
}

SelectionManifest read_selection_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UpstreamMissingError("selection manifest not found: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("selection manifest parse error: " + std::string(e.what()));
    }
    SelectionManifest m;
    const auto& p = j.at("plan");
    m.plan.total_budget_tokens = p.at("total_budget_tokens").get<uint64_t>();
    m.plan.repetition = p.at("repetition").get<uint32_t>();
    m.plan.unique_budget = p.at("unique_budget").get<uint64_t>();
    m.plan.remainder = p.at("remainder").get<uint64_t>();
    if (p.contains("quotas")) {
        m.plan.quotas = p.at("quotas").get<std::map<std::string, uint64_t>>();
    }
    m.mix.weights = j.at("mix").get<std::map<std::string, double>>();
    for (auto it = j.at("fills").begin(); it != j.at("fills").end(); ++it) {
        LanguageFill fill;
        fill.quota = it.value().at("quota").get<uint64_t>();
        fill.selected_tokens = it.value().at("selected_tokens").get<uint64_t>();
        fill.selected_docs = it.value().at("selected_docs").get<uint64_t>();
        fill.shortfall = it.value().at("shortfall").get<bool>();
        m.result.fills[it.key()] = fill;
    }
    m.result.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
    return m;
}

} // namespace codesieve
