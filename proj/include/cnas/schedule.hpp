#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnas/arch_space.hpp"

namespace cnas {

enum class ScheduleKind {
    // Teacher, elastic kernel, two depth phases, two width phases.
    ProgressiveShrinking,
    // Teacher, then every compound configuration at once.
    SingleStage,
    // Teacher, elastic kernel, then every compound configuration.
    ElasticKernelThenCompound,
};

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

// A training phase unlocks the `*_levels` largest levels of each dimension
// (0 unlocks all of them) and samples `n_sample` subnetworks per step.
struct TrainPhase {
    std::string name;
    int depth_levels = 0;
    int width_levels = 0;
    int kernel_levels = 0;
    int n_sample = 1;
    int epochs = 1;
    double lr = 0.1;
    bool distill = false;

    bool operator==(const TrainPhase&) const = default;
};

struct TrainingSchedule {
    std::vector<TrainPhase> phases;
    // Expected seconds per epoch, keyed by phase name.
    std::map<std::string, double> epoch_seconds;

    int total_epochs() const;
    void check(const SearchSpaceDef& space) const;
};

// Reference batch size the preset learning rates are quoted at.
inline constexpr int kReferenceBatch = 1536;

// Phase list at epoch multiplier `scale` (epochs rounded up) with learning
// rates scaled linearly from kReferenceBatch to `batch_size`. The time
// model is one second per epoch for every phase.
TrainingSchedule make_schedule(ScheduleKind kind, double scale = 1.0, int batch_size = kReferenceBatch);

// Per-epoch wall time of each preset phase measured on the 6-GPU reference
// run (hours and minutes of the recorded phase duration over its epochs).
std::map<std::string, double> reference_epoch_seconds(ScheduleKind kind);

// Sum over phases of epochs * expected epoch time. Throws MissingTimeEntry.
double family_train_time(const TrainingSchedule& schedule);

// Level mask for the phase resolved against the space's level lists.
LevelMask unlocked_mask(const TrainPhase& phase, const SearchSpaceDef& space);

nlohmann::json to_json(const TrainingSchedule& schedule);
TrainingSchedule schedule_from_json(const nlohmann::json& j);

}  // namespace cnas
