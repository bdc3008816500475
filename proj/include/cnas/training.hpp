#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnas/dataset.hpp"
#include "cnas/elastic_net.hpp"
#include "cnas/schedule.hpp"

namespace cnas {

struct TrainOptions {
    int batch_size = 64;
    KdConfig kd;
    SgdConfig sgd{.momentum = 0.9, .weight_decay = 0.0, .clip_norm = 1.0};
    SamplingMode sampling = SamplingMode::PerConfiguration;
    // Held-out images used for the per-phase evaluation (0 = all).
    int eval_images = 0;
};

struct StepRecord {
    std::string phase;
    int epoch = 0;
    int step = 0;  // within the phase
    double loss = 0.0;
    double lr = 0.0;
};

struct EpochRecord {
    std::string phase;
    int epoch = 0;
    double mean_loss = 0.0;
};

struct PhaseEval {
    std::string phase;
    double min_acc = 0.0, median_acc = 0.0, max_acc = 0.0;
};

struct TrainingLog {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    std::vector<PhaseEval> evals;

    // phase,epoch,step,loss,lr with an optional leading "# key=value" line.
    void write_steps_csv(const std::string& path, const std::string& provenance = {}) const;
    nlohmann::json summary() const;
};

using StepCallback = std::function<void(const StepRecord&)>;

// Runs the phases in order on `params`. Each step draws one resolution and
// n_sample architectures from the phase's unlocked levels; the learning
// rate follows a cosine decay to zero within each phase. Distilling phases
// use a frozen copy of the supernet taken when the first of them starts,
// sliced at the largest architecture. Deterministic per seed.
TrainingLog run_training(SupernetParams& params, const TrainingSchedule& schedule, const Dataset& train,
                         const Dataset& test, std::uint64_t seed, const TrainOptions& options = {},
                         const StepCallback& on_step = {});

// Top-1 accuracy of slice_subnet(params, arch) on `data`, memoized per
// architecture. The returned function keeps references to both arguments.
std::function<double(const ArchSpec&)> memo_accuracy(const SupernetParams& params, const Dataset& data);

}  // namespace cnas
