#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cnas/arch_space.hpp"
#include "cnas/latency.hpp"

namespace cnas {

using FitnessFn = std::function<double(const ArchSpec&)>;

struct EvoConfig {
    int iterations = 500;
    int population = 100;
    double parent_fraction = 0.25;
    double p_mut = 0.1;
    // Probability that a child comes from mutation rather than crossover.
    double mutation_share = 0.5;
    double target_ms = 0.0;
    int max_retries = 100;
    std::uint64_t seed = 0;

    void check() const;
};

// "default" (N=500), "compofa-elastic" (N=300), "compofa-fixed" (N=50);
// population 100 throughout. Throws ConfigError.
EvoConfig evo_preset(const std::string& name);

struct Candidate {
    ArchSpec arch;
    double fitness = 0.0;
    double latency_ms = 0.0;
};

struct SearchResult {
    Candidate best;
    std::vector<double> history;  // best-so-far fitness after each iteration
    std::uint64_t model_invocations = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    double wall_seconds = 0.0;

    // Everything except wall time, which is non-deterministic.
    nlohmann::json to_json() const;
};

// Strict weak order: higher fitness, then lower latency, then enumeration order.
bool better(const SearchSpaceDef& space, const Candidate& a, const Candidate& b);

// Aging evolution. Latency goes through `cache` when one is given, else
// straight to the model. Throws InfeasibleTarget when even min_arch exceeds
// the target and RetriesExhausted when a feasible draw is not found within
// max_retries attempts.
SearchResult run_search(const SearchSpaceDef& space, const FitnessFn& fitness, const LatencyModel& model,
                        LatencyCache* cache, const EvoConfig& config);

struct ExhaustiveResult {
    Candidate best;
    std::uint64_t scanned = 0;
    std::uint64_t feasible = 0;
};

// Feasible argmax over enumerate(space). Throws SpaceTooLarge, InfeasibleTarget.
ExhaustiveResult exhaustive_best(const SearchSpaceDef& space, const FitnessFn& fitness, const LatencyModel& model,
                                 double target_ms, std::uint64_t limit, LatencyCache* cache = nullptr);

}  // namespace cnas
