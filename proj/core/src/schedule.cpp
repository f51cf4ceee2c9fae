// SPDX-License-Identifier: Apache-2.0
#include "codesieve/schedule.hpp"

#include "codesieve/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace codesieve {

ScheduleShape schedule_shape_from_name(const std::string& name) {
    if (name == "cosine_with_warmup") return ScheduleShape::cosine_with_warmup;
    if (name == "rewarmup_linear_decay") return ScheduleShape::rewarmup_linear_decay;
    if (name == "constant") return ScheduleShape::constant;
    if (name == "linear_anneal") return ScheduleShape::linear_anneal;
    throw ConfigError("schedule: unknown shape '" + name + "'");
}

std::string schedule_shape_name(ScheduleShape shape) {
    switch (shape) {
        case ScheduleShape::cosine_with_warmup: return "cosine_with_warmup";
        case ScheduleShape::rewarmup_linear_decay: return "rewarmup_linear_decay";
        case ScheduleShape::constant: return "constant";
        case ScheduleShape::linear_anneal: return "linear_anneal";
    }
    return "cosine_with_warmup";
}

void SchedulePhase::validate() const {
    if (total_iters == 0) throw ConfigError("schedule: total_iters must be > 0");
    if (warmup_iters > total_iters) throw ConfigError("schedule: warmup_iters exceeds total_iters");
    if (!(max_lr >= min_lr) || min_lr < 0.0) {
        throw ConfigError("schedule: require max_lr >= min_lr >= 0");
    }
}

double lr_at(const SchedulePhase& phase, uint64_t iter) {
    phase.validate();
    if (iter > phase.total_iters) {
        throw ConfigError("schedule: iteration " + std::to_string(iter) + " outside [0, " +
                          std::to_string(phase.total_iters) + "]");
    }
    const double t_iter = static_cast<double>(iter);
    const double warm = static_cast<double>(phase.warmup_iters);
    const double total = static_cast<double>(phase.total_iters);

    switch (phase.shape) {
        case ScheduleShape::cosine_with_warmup: {
            if (iter < phase.warmup_iters) return phase.max_lr * (t_iter / warm);
            if (phase.total_iters == phase.warmup_iters) return phase.max_lr;
            const double t = (t_iter - warm) / (total - warm);
            return phase.min_lr + (phase.max_lr - phase.min_lr) * 0.5 * (1.0 + std::cos(M_PI * t));
        }
        case ScheduleShape::rewarmup_linear_decay: {
            if (iter < phase.warmup_iters) return phase.max_lr * (t_iter / warm);
            if (phase.total_iters == phase.warmup_iters) return phase.max_lr;
            const double t = (t_iter - warm) / (total - warm);
            return phase.max_lr * (1.0 - t);
        }
        case ScheduleShape::constant:
            return phase.min_lr;
        case ScheduleShape::linear_anneal:
            return phase.min_lr * (1.0 - t_iter / total);
    }
    return 0.0;
}

std::vector<ScheduleRow> emit_schedule(const SchedulePhase& phase, uint64_t stride) {
    if (stride == 0) throw ConfigError("schedule: stride must be >= 1");
    phase.validate();
    std::vector<ScheduleRow> rows;
    for (uint64_t iter = 0; iter < phase.total_iters; iter += stride) {
        rows.push_back({iter, lr_at(phase, iter)});
    }
    rows.push_back({phase.total_iters, lr_at(phase, phase.total_iters)});
    return rows;
}

void write_schedule_table(const std::vector<ScheduleRow>& rows, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write schedule table: " + path.string());
    out << "iter\tlr\n";
    char buf[64];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%llu\t%.17g\n",
                      static_cast<unsigned long long>(row.iter), row.lr);
        out << buf;
    }
}

uint64_t iterations_for_tokens(uint64_t phase_tokens, uint64_t seq_len, uint64_t batch_size) {
    if (seq_len == 0 || batch_size == 0) throw ConfigError("schedule: seq_len and batch_size must be > 0");
    const uint64_t per_iter = seq_len * batch_size;
    return (phase_tokens + per_iter - 1) / per_iter;
}

} // namespace codesieve
