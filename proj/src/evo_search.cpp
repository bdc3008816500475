#include "cnas/evo_search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <set>

#include "cnas/errors.hpp"

namespace cnas {

void EvoConfig::check() const {
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    if (population < 2) throw ConfigError("population must be >= 2");
    auto frac = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!frac(parent_fraction)) throw ConfigError("parent fraction must lie in (0, 1]");
    if (!(p_mut >= 0.0 && p_mut <= 1.0)) throw ConfigError("mutation probability must lie in [0, 1]");
    if (!(mutation_share >= 0.0 && mutation_share <= 1.0)) throw ConfigError("mutation share must lie in [0, 1]");
    if (!(target_ms > 0.0)) throw ConfigError("latency target must be positive");
    if (max_retries < 1) throw ConfigError("max retries must be >= 1");
}

EvoConfig evo_preset(const std::string& name) {
    EvoConfig c;
    if (name == "default" || name == "ofa") return c;
    if (name == "compofa-elastic") {
        c.iterations = 300;
        return c;
    }
    if (name == "compofa-fixed") {
        c.iterations = 50;
        return c;
    }
    throw ConfigError("unknown search preset '" + name + "'");
}

nlohmann::json SearchResult::to_json() const {
    return {{"arch", cnas::to_json(best.arch)},
            {"fitness", best.fitness},
            {"latency_ms", best.latency_ms},
            {"history", history},
            {"model_invocations", model_invocations},
            {"cache_hits", cache_hits},
            {"cache_misses", cache_misses}};
}

bool better(const SearchSpaceDef& space, const Candidate& a, const Candidate& b) {
    if (a.fitness != b.fitness) return a.fitness > b.fitness;
    if (a.latency_ms != b.latency_ms) return a.latency_ms < b.latency_ms;
    return compare_archs(space, a.arch, b.arch) < 0;
}

namespace {

class LatencySource {
public:
    LatencySource(const LatencyModel& model, LatencyCache* cache) : counted_(model), cache_(cache) {
        if (cache_) {
            hits0_ = cache_->hits();
            misses0_ = cache_->misses();
        }
    }
    double operator()(const ArchSpec& a) { return cache_ ? cached_estimate(*cache_, counted_, a) : counted_.latency_ms(a); }
    void report(SearchResult& r) const {
        r.model_invocations = counted_.invocations();
        if (cache_) {
            r.cache_hits = cache_->hits() - hits0_;
            r.cache_misses = cache_->misses() - misses0_;
        }
    }

private:
    CountingLatencyModel counted_;
    LatencyCache* cache_;
    std::uint64_t hits0_ = 0, misses0_ = 0;
};

}  // namespace

SearchResult run_search(const SearchSpaceDef& space, const FitnessFn& fitness, const LatencyModel& model,
                        LatencyCache* cache, const EvoConfig& cfg) {
    space.check();
    cfg.check();
    const auto t0 = std::chrono::steady_clock::now();
    LatencySource latency(model, cache);

    const double floor_ms = latency(min_arch(space));
    if (floor_ms > cfg.target_ms)
        throw InfeasibleTarget("smallest architecture needs " + std::to_string(floor_ms) + " ms, target is " +
                               std::to_string(cfg.target_ms) + " ms");

    Rng rng(cfg.seed);
    // Encodings already admitted. A feasible proposal seen before is kept
    // only as a fallback, so the retry budget goes to unexplored archs.
    std::set<std::string> seen;
    auto feasible_draw = [&](const auto& propose) {
        std::optional<ArchSpec> fallback;
        double fallback_ms = 0.0;
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            ArchSpec a = propose();
            const double ms = latency(a);
            if (ms > cfg.target_ms) continue;
            if (seen.insert(encode(space, a).to_string()).second) return Candidate{a, fitness(a), ms};
            if (!fallback) {
                fallback = std::move(a);
                fallback_ms = ms;
            }
        }
        if (fallback) return Candidate{*fallback, fitness(*fallback), fallback_ms};
        throw RetriesExhausted("no feasible architecture within " + std::to_string(cfg.max_retries) + " draws");
    };

    SearchResult result;
    std::deque<Candidate> population;
    for (int i = 0; i < cfg.population; ++i) {
        population.push_back(feasible_draw([&] { return sample_uniform(space, rng); }));
        if (i == 0 || better(space, population.back(), result.best)) result.best = population.back();
    }

    const auto n_parents = static_cast<std::size_t>(
        std::max(1.0, std::ceil(cfg.parent_fraction * static_cast<double>(cfg.population) - 1e-9)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<const Candidate*> ranked;
    for (int it = 0; it < cfg.iterations; ++it) {
        ranked.clear();
        for (const auto& c : population) ranked.push_back(&c);
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](const Candidate* a, const Candidate* b) { return better(space, *a, *b); });
        ranked.resize(std::min(n_parents, ranked.size()));
        std::uniform_int_distribution<std::size_t> pick(0, ranked.size() - 1);
        Candidate child = feasible_draw([&] {
            if (unit(rng) < cfg.mutation_share) return mutate(space, ranked[pick(rng)]->arch, cfg.p_mut, rng);
            const ArchSpec& a = ranked[pick(rng)]->arch;
            const ArchSpec& b = ranked[pick(rng)]->arch;
            return crossover(space, a, b, rng);
        });
        if (better(space, child, result.best)) result.best = child;
        population.push_back(std::move(child));
        population.pop_front();
        result.history.push_back(result.best.fitness);
    }
    latency.report(result);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

ExhaustiveResult exhaustive_best(const SearchSpaceDef& space, const FitnessFn& fitness, const LatencyModel& model,
                                 double target_ms, std::uint64_t limit, LatencyCache* cache) {
    ExhaustiveResult r;
    bool found = false;
    for_each_arch(space, limit, [&](const ArchSpec& a) {
        ++r.scanned;
        const double ms = cache ? cached_estimate(*cache, model, a) : model.latency_ms(a);
        if (ms > target_ms) return;
        ++r.feasible;
        Candidate c{a, fitness(a), ms};
        if (!found || better(space, c, r.best)) {
            r.best = std::move(c);
            found = true;
        }
    });
    if (!found) throw InfeasibleTarget("no architecture meets the " + std::to_string(target_ms) + " ms target");
    return r;
}

}  // namespace cnas
