// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace codesieve {

enum class ScheduleShape {
    cosine_with_warmup,    // 0 -> max over warmup, cosine max -> min
    rewarmup_linear_decay, // 0 -> max over warmup, linear max -> 0
    constant,              // min everywhere
    linear_anneal,         // linear min -> 0 over the whole phase
};

ScheduleShape schedule_shape_from_name(const std::string& name);
std::string schedule_shape_name(ScheduleShape shape);

// A learning-rate curve evaluable at any iteration in [0, total_iters].
struct SchedulePhase {
    ScheduleShape shape = ScheduleShape::cosine_with_warmup;
    double max_lr = 5.3e-4;
    double min_lr = 5.3e-5;
    uint64_t warmup_iters = 600;
    uint64_t total_iters = 0;

    void validate() const; // throws ConfigError on violation
};

double lr_at(const SchedulePhase& phase, uint64_t iter);

struct ScheduleRow {
    uint64_t iter = 0;
    double lr = 0.0;
};

// Sampled table including iteration 0, every stride, and total_iters.
std::vector<ScheduleRow> emit_schedule(const SchedulePhase& phase, uint64_t stride);

// Plain tabular text (iter <TAB> lr) with round-trip decimal floats.
void write_schedule_table(const std::vector<ScheduleRow>& rows, const std::filesystem::path& path);

// Iterations needed to consume a token horizon at seq_len * batch_size
// tokens per iteration (ceiling).
uint64_t iterations_for_tokens(uint64_t phase_tokens, uint64_t seq_len = 8192, uint64_t batch_size = 512);

} // namespace codesieve
