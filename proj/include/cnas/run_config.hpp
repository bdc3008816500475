#pragma once

// JSON run configuration shared by the CLI subcommands.
//
//   {
//     "seed": 7,                                  required
//     "space": "toy-compound" | {space object},
//     "base": "toy" | "mobilenet-v3" | {base object},
//     "schedule": {"kind": "single-stage", "scale": 0.0833, "batch_size": 64},
//     "kd": {"lambda": 1.0, "temperature": 1.0},
//     "sgd": {"momentum": 0.9, "weight_decay": 0, "clip_norm": 1.0},
//     "dataset": {"kind": "synthetic", "n_train": 1000, "n_test": 500, "side": 32,
//                 "classes": 10, "seed": 7}
//              | {"kind": "csv", "train": "train.csv", "test": "test.csv"},
//     "latency": {"kind": "synthetic", "ms_per_mflop": 7.5, "overhead_ms": 10, "noise_sigma": 0}
//              | {"kind": "lut", "path": "table.csv"},
//     "search": {"preset": "compofa-fixed", "iterations": 50, "population": 100,
//                "parent_fraction": 0.25, "p_mut": 0.1, "mutation_share": 0.5,
//                "target_ms": 30, "max_retries": 100},
//     "output_dir": "out"
//   }
//
// Missing sections take the defaults shown. Dataset and search seeds
// default to the master seed.

#include <memory>
#include <string>

#include <json.hpp>

#include "cnas/dataset.hpp"
#include "cnas/elastic_net.hpp"
#include "cnas/evo_search.hpp"
#include "cnas/latency.hpp"
#include "cnas/schedule.hpp"
#include "cnas/training.hpp"

namespace cnas {

struct RunConfig {
    nlohmann::json json;  // fully resolved, defaults filled in
    std::uint64_t seed = 0;
    SearchSpaceDef space;
    BaseArchConfig base;
    ScheduleKind schedule_kind = ScheduleKind::SingleStage;
    double schedule_scale = 1.0 / 12.0;
    int batch_size = 64;
    KdConfig kd;
    SgdConfig sgd;
    EvoConfig evo;
    std::string output_dir = "out";

    // 16 hex digits of FNV-1a over the canonical JSON dump.
    std::string hash() const;

    TrainingSchedule schedule() const;
    DataSplit load_data() const;
    std::unique_ptr<LatencyModel> latency_model() const;
};

// Fills defaults, validates, and checks that referenced paths exist.
// Throws ConfigError.
RunConfig resolve_run_config(nlohmann::json j);
nlohmann::json read_json_file(const std::string& path);

std::string fnv1a_hex(const std::string& text);

}  // namespace cnas
