// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.
//
//   cnas_acceptance [--only 1,2,...] [--cache DIR] [--known-failures 8,...]
//
// --cache keeps trained supernets under DIR keyed by config hash, so a
// rerun skips training. Without it every family is trained from scratch.
// Criteria listed in --known-failures still print FAIL when they fail but
// do not change the exit status.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnas/analysis.hpp"
#include "cnas/checkpoint.hpp"
#include "cnas/evo_search.hpp"
#include "cnas/run_config.hpp"
#include "cnas/schedule.hpp"
#include "cnas/training.hpp"
#include "fixtures.hpp"
#include "oracle_net.hpp"

using namespace cnas;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::map<int, bool> g_results;

void report(int id, const char* title, Verdict& v) {
    g_results[id] = v.pass;
    std::printf("%s criterion %d %s:%s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.str().c_str());
    std::fflush(stdout);
}

void log(const std::string& msg) {
    std::fprintf(stderr, "[acceptance] %s\n", msg.c_str());
    std::fflush(stderr);
}

// ---- trained families --------------------------------------------------

constexpr std::uint64_t kSeeds[] = {1, 2, 3};

struct Family {
    std::string space;
    ScheduleKind kind;
    std::uint64_t seed;
    RunConfig rc;
    SupernetParams params;
    DataSplit data;
    AccuracyFn acc;
    double train_seconds = 0.0;
};

class Families {
public:
    explicit Families(std::string cache_dir) : cache_dir_(std::move(cache_dir)) {}

    Family& get(const std::string& space, ScheduleKind kind, std::uint64_t seed) {
        for (auto& f : store_)
            if (f.space == space && f.kind == kind && f.seed == seed) return f;
        Family& f = store_.emplace_back();
        f.space = space;
        f.kind = kind;
        f.seed = seed;
        f.rc = resolve_run_config({{"seed", seed}, {"space", space}, {"schedule", {{"kind", to_string(kind)}}}});
        f.data = f.rc.load_data();
        const std::string tag = space + "/" + to_string(kind) + "/seed " + std::to_string(seed);
        const fs::path ckpt = cache_dir_.empty() ? fs::path() : fs::path(cache_dir_) / (f.rc.hash() + ".bin");
        if (!ckpt.empty() && fs::exists(ckpt)) {
            f.params = load_supernet(ckpt.string());
            f.train_seconds = read_blob(ckpt.string()).header.value("train_seconds", 0.0);
            log("loaded " + tag + " from " + ckpt.string());
        } else {
            log("training " + tag);
            const auto t0 = Clock::now();
            f.params = build_supernet(f.rc.base, f.rc.space, f.rc.seed);
            TrainOptions opt;
            opt.batch_size = f.rc.batch_size;
            opt.kd = f.rc.kd;
            opt.sgd = f.rc.sgd;
            run_training(f.params, f.rc.schedule(), f.data.train, f.data.test, f.rc.seed, opt);
            f.train_seconds = since(t0);
            log("trained " + tag + " in " + std::to_string(f.train_seconds) + " s");
            if (!ckpt.empty()) {
                fs::create_directories(ckpt.parent_path());
                save_supernet(ckpt.string(), f.params, "config_hash=" + f.rc.hash());
                // Record the training time alongside the weights.
                Blob b = read_blob(ckpt.string());
                b.header["train_seconds"] = f.train_seconds;
                write_blob(ckpt.string(), b);
            }
        }
        f.acc = memo_accuracy(f.params, f.data.test);
        return f;
    }

    double total_train_seconds() const {
        double s = 0.0;
        for (const auto& f : store_) s += f.train_seconds;
        return s;
    }
    std::size_t size() const { return store_.size(); }
    std::deque<Family>& all() { return store_; }

private:
    std::string cache_dir_;
    std::deque<Family> store_;  // stable addresses for memo_accuracy
};

const BaseArchConfig& toy() {
    static const BaseArchConfig b = BaseArchConfig::toy();
    return b;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---- 1 ----------------------------------------------------------------

std::string u128_str(unsigned __int128 v) {
    std::string s;
    do {
        s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    } while (v);
    return s;
}

// Independent count over one resolution: per block, sum over depths of
// (per-layer choices)^depth, where a layer picks width and kernel under
// independent coupling and only a kernel under compound coupling.
unsigned __int128 count_by_levels(const SearchSpaceDef& s) {
    const unsigned __int128 kernels = s.kernel_mode.is_fixed() ? 1 : s.levels.kernels.size();
    const unsigned __int128 per_layer = s.coupling == Coupling::Compound ? kernels : kernels * s.levels.widths.size();
    unsigned __int128 per_block = 0;
    for (int depth : s.levels.depths) {
        unsigned __int128 c = 1;
        for (int d = 0; d < depth; ++d) c *= per_layer;
        per_block += c;
    }
    unsigned __int128 total = 1;
    for (int b = 0; b < s.blocks; ++b) total *= per_block;
    return total;
}

void criterion1() {
    Verdict v;
    const auto t0 = Clock::now();
    const std::string fixed = cardinality(space_preset("compofa-fixed")).str();
    const std::string elastic = cardinality(space_preset("compofa-elastic")).str();
    const std::string ofa = cardinality(space_preset("ofa")).str();
    const double secs = since(t0);
    unsigned __int128 p = 1;
    for (int i = 0; i < 5; ++i) p *= 7371;
    const auto enumerated = enumerate(space_preset("compofa-fixed"), 1000).size();
    v.require(fixed == "243" && enumerated == 243 && u128_str(count_by_levels(space_preset("compofa-fixed"))) == "243",
              "compofa-fixed 243");
    v.require(elastic == "21924480357" && elastic == u128_str(117ULL * 117 * 117 * 117 * 117), "compofa-elastic 117^5");
    v.require(elastic == u128_str(count_by_levels(space_preset("compofa-elastic"))), "compofa-elastic level count");
    v.require(ofa == u128_str(p) && ofa == u128_str(count_by_levels(space_preset("ofa"))), "ofa 7371^5");
    v.require(secs < 1.0, "runtime < 1 s");
    v.detail << " fixed=" << fixed << " elastic=" << elastic << " ofa=" << ofa << " (oracle " << u128_str(p)
             << ") in " << fmt(secs) << " s";
    report(1, "cardinality", v);
}

// ---- 2 ----------------------------------------------------------------

void criterion2() {
    Verdict v;
    const auto ps = make_schedule(ScheduleKind::ProgressiveShrinking);
    const auto ss = make_schedule(ScheduleKind::SingleStage);
    const auto ek = make_schedule(ScheduleKind::ElasticKernelThenCompound);
    v.require(ps.total_epochs() == 605 && ss.total_epochs() == 330 && ek.total_epochs() == 455, "epoch totals");
    const double ratio = family_train_time(ss) / family_train_time(ps);
    v.require(std::abs(ratio - 330.0 / 605.0) < 1e-12, "unit-time ratio 330/605");
    auto timed = ps;
    timed.epoch_seconds = reference_epoch_seconds(ScheduleKind::ProgressiveShrinking);
    const double hours = family_train_time(timed) / 3600.0;
    const double want = 163.0 + 3.0 / 60.0;
    v.require(std::abs(hours - want) * 60.0 <= 2.0, "163h03m +- 2 min");
    v.detail << " totals " << ps.total_epochs() << "/" << ss.total_epochs() << "/" << ek.total_epochs() << " ratio "
             << fmt(ratio, 6) << " progressive wall " << static_cast<int>(hours) << "h"
             << fmt((hours - std::floor(hours)) * 60.0, 2) << "m";
    report(2, "schedule accounting", v);
}

// ---- 3 ----------------------------------------------------------------

void criterion3() {
    Verdict v;
    const auto space = ofa_space();
    auto p = build_supernet(toy(), space, 41);
    fixtures::jitter(p, 42);
    ArchSpec a = max_arch(space);
    a.resolution = toy().input_side;
    const Tensor batch = fixtures::random_batch(10, toy().input_channels, toy().input_side, 43);
    const Matrix s = forward(slice_subnet(p, a), batch);
    double worst = 0.0;
    for (int n = 0; n < 10; ++n) {
        const auto o = oracle::forward_sample(p, a, oracle::sample_of(batch, n), true);
        for (int k = 0; k < toy().classes; ++k) worst = std::max(worst, std::abs(s(n, k) - o[static_cast<std::size_t>(k)]));
    }
    v.require(worst <= 1e-6, "max |delta| <= 1e-6");
    v.detail << " max |delta| = " << worst << " over 10 inputs";
    report(3, "slicing identity", v);
}

// ---- 4 ----------------------------------------------------------------

void criterion4() {
    Verdict v;
    const auto t0 = Clock::now();
    const auto space = fixtures::micro_space();
    auto p = build_supernet(fixtures::micro_base(), space, 51);
    fixtures::jitter(p, 52);
    const Tensor batch = fixtures::random_batch(4, 2, 8, 53);
    Rng rng(54);
    std::vector<int> labels(4);
    std::uniform_int_distribution<int> cls(0, 2);
    for (auto& l : labels) l = cls(rng);
    const auto r = fixtures::finite_difference_check(p, max_arch(space), batch, labels, nullptr, KdConfig{0.0, 1.0},
                                                     20, 55);
    const double secs = since(t0);
    v.require(r.checked == 20, "20 parameters checked");
    v.require(r.max_rel_error <= 1e-4, "relative error <= 1e-4");
    v.require(secs < 60.0, "runtime < 1 min");
    v.detail << " max rel error " << r.max_rel_error << " over " << r.checked << " params in " << fmt(secs, 2) << " s";
    report(4, "gradient correctness", v);
}

// ---- 5 and 6 ----------------------------------------------------------

constexpr double kTargets[] = {20.0, 25.0, 30.0, 35.0};

EvoConfig fixed_search(double target, std::uint64_t seed) {
    EvoConfig c = evo_preset("compofa-fixed");
    c.target_ms = target;
    c.seed = seed;
    return c;
}

// Accuracy of every architecture of the space, evaluated once.
FitnessFn exhaustive_table(const SearchSpaceDef& space, const AccuracyFn& acc) {
    auto table = std::make_shared<std::map<std::string, double>>();
    for (const auto& a : enumerate(space, 1000)) (*table)[to_json(a).dump()] = acc(a);
    return [table](const ArchSpec& a) { return table->at(to_json(a).dump()); };
}

void criterion5_6(Families& fam) {
    Family& f = fam.get("toy-compound", ScheduleKind::SingleStage, kSeeds[0]);
    const SyntheticLatencyModel model(toy(), {});
    const auto t0 = Clock::now();
    const FitnessFn fit = exhaustive_table(f.rc.space, f.acc);

    Verdict v5;
    LatencyCache shared(f.rc.space);
    std::uint64_t cached_calls = 0, plain_calls = 0;
    for (double target : kTargets) {
        const auto ex = exhaustive_best(f.rc.space, fit, model, target, 1000);
        int hits = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto r = run_search(f.rc.space, fit, model, &shared, fixed_search(target, seed));
            hits += r.best.arch == ex.best.arch || r.best.fitness >= ex.best.fitness - 0.001;
            cached_calls += r.model_invocations;
        }
        v5.require(hits >= 19, "target " + fmt(target, 0) + " ms");
        v5.detail << " " << fmt(target, 0) << "ms:" << hits << "/20 (oracle acc " << fmt(ex.best.fitness) << ")";
    }
    const double secs = since(t0);
    v5.require(secs < 300.0, "runtime < 5 min");
    v5.detail << " in " << fmt(secs, 1) << " s";
    report(5, "search vs oracle", v5);

    Verdict v6;
    for (double target : kTargets)
        for (std::uint64_t seed = 0; seed < 20; ++seed)
            plain_calls += run_search(f.rc.space, fit, model, nullptr, fixed_search(target, seed)).model_invocations;
    // Default settings: one search at the default 30 ms target.
    EvoConfig def = resolve_run_config({{"seed", kSeeds[0]}}).evo;
    const auto plain = run_search(f.rc.space, fit, model, nullptr, def);
    LatencyCache cache(f.rc.space);
    const auto cold = run_search(f.rc.space, fit, model, &cache, def);
    const auto warm = run_search(f.rc.space, fit, model, &cache, def);
    v6.require(warm.model_invocations == 0, "warm rerun issues 0 invocations");
    v6.require(warm.best.arch == cold.best.arch && warm.history == cold.history && cold.best.arch == plain.best.arch &&
                   cold.history == plain.history,
               "identical result");
    const double single = 1.0 - static_cast<double>(cold.model_invocations) / static_cast<double>(plain.model_invocations);
    const double sweep = 1.0 - static_cast<double>(cached_calls) / static_cast<double>(plain_calls);
    v6.require(single >= 0.5, "single-run reduction >= 50%");
    v6.require(sweep >= 0.5, "sweep reduction >= 50%");
    v6.detail << " warm invocations " << warm.model_invocations << "; default run " << plain.model_invocations << " -> "
              << cold.model_invocations << " (" << fmt(100 * single, 1) << "% fewer); 80-run sweep " << plain_calls
              << " -> " << cached_calls << " (" << fmt(100 * sweep, 1) << "% fewer)";
    report(6, "memoization", v6);
}

// ---- 7 ----------------------------------------------------------------

// Uniform independent draws, smallest quarter by MACs.
std::vector<ArchSpec> smallest_quartile(const SearchSpaceDef& space, std::uint64_t seed, int n = 400) {
    Rng rng(seed);
    std::vector<std::pair<std::uint64_t, ArchSpec>> v;
    for (int i = 0; i < n; ++i) {
        ArchSpec a = sample_uniform(space, rng);
        v.emplace_back(count_flops(toy(), a).macs, std::move(a));
    }
    std::stable_sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<ArchSpec> out;
    for (int i = 0; i < n / 4; ++i) out.push_back(v[static_cast<std::size_t>(i)].second);
    return out;
}

void criterion7(Families& fam) {
    Verdict v;
    const auto compound = enumerate(space_preset("toy-compound"), 1000);
    std::vector<double> ss_means, ps_means;
    v.detail << " (a)";
    for (auto seed : kSeeds) {
        auto& ss = fam.get("toy-compound", ScheduleKind::SingleStage, seed);
        auto& ps = fam.get("toy-compound", ScheduleKind::ProgressiveShrinking, seed);
        std::vector<double> a, b;
        for (const auto& x : compound) {
            a.push_back(ss.acc(x));
            b.push_back(ps.acc(x));
        }
        ss_means.push_back(mean(a));
        ps_means.push_back(mean(b));
        v.detail << " seed" << seed << " single " << fmt(mean(a)) << " progressive " << fmt(mean(b)) << ";";
    }
    const double gap = mean(ss_means) - mean(ps_means);
    v.require(std::abs(gap) <= 0.01, "(a) |single - progressive| <= 1 point");
    v.detail << " 3-seed gap " << fmt(100 * gap, 2) << " points. (b)";

    int positive = 0, negative = 0;
    for (auto seed : kSeeds) {
        auto& ss = fam.get("toy-independent", ScheduleKind::SingleStage, seed);
        auto& ps = fam.get("toy-independent", ScheduleKind::ProgressiveShrinking, seed);
        std::vector<double> a, b;
        for (const auto& x : smallest_quartile(ss.rc.space, 1000 + seed)) {
            a.push_back(ss.acc(x));
            b.push_back(ps.acc(x));
        }
        const double deficit = mean(b) - mean(a);
        positive += deficit > 0.0;
        negative += deficit < 0.0;
        v.detail << " seed" << seed << " deficit " << fmt(100 * deficit, 2) << " points;";
    }
    v.require(positive == 3, "(b) deficit positive for all 3 seeds");
    const double hours = fam.total_train_seconds() / 3600.0;
    v.require(hours <= 8.0, "training <= 8 h CPU");
    v.detail << " training " << fmt(hours, 2) << " h for " << fam.size() << " supernets";
    report(7, "phase ablation", v);
}

// ---- 8 ----------------------------------------------------------------

void criterion8(Families& fam) {
    Verdict v;
    const SyntheticLatencyModel model(toy(), {});
    const auto compound = enumerate(space_preset("toy-compound"), 1000);
    int wins = 0, compared = 0;
    for (auto seed : kSeeds) {
        auto& comp = fam.get("toy-compound", ScheduleKind::SingleStage, seed);
        auto& ind = fam.get("toy-independent", ScheduleKind::ProgressiveShrinking, seed);
        std::map<long, std::vector<double>> comp_buckets;
        for (const auto& a : compound)
            comp_buckets[static_cast<long>(std::floor(model.latency_ms(a) / 5.0))].push_back(comp.acc(a));
        const auto r = bucket_cdf(ind.rc.space, 50, model, ind.acc, 5.0, seed);
        int seed_wins = 0, seed_compared = 0;
        for (const auto& b : r.buckets) {
            const auto it = comp_buckets.find(static_cast<long>(std::lround(b.bucket.lower_ms / 5.0)));
            if (it == comp_buckets.end()) continue;
            std::vector<double> ia;
            for (const auto& s : b.bucket.members) ia.push_back(s.accuracy);
            seed_wins += mean(it->second) >= mean(ia);
            ++seed_compared;
        }
        wins += seed_wins;
        compared += seed_compared;
        v.detail << " seed" << seed << " " << seed_wins << "/" << seed_compared << ";";
    }
    v.require(compared > 0 && 2 * wins > compared, "compound mean >= independent in a majority of buckets");
    v.detail << " total " << wins << "/" << compared << " buckets.";

    // Constructed dominance: every compound arch outscores every independent one.
    auto hashed = [](const ArchSpec& a, double lo, double hi, std::uint64_t salt) {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
        for (unsigned char c : to_json(a).dump()) h = (h ^ c) * 0x100000001b3ULL;
        h ^= h >> 29;
        return lo + (hi - lo) * static_cast<double>(h >> 11) * 0x1.0p-53;
    };
    BucketCdfOptions opt;
    opt.lo_ms = 15.0;
    opt.hi_ms = 39.9;
    const auto rc = bucket_cdf(space_preset("toy-compound"), 50, model,
                               [&](const ArchSpec& a) { return hashed(a, 0.70, 0.80, 1); }, 5.0, 1, opt);
    const auto ri = bucket_cdf(space_preset("toy-independent"), 50, model,
                               [&](const ArchSpec& a) { return hashed(a, 0.55, 0.70, 2); }, 5.0, 1, opt);
    int dominated = 0, pairs = 0;
    for (const auto& bc : rc.buckets)
        for (const auto& bi : ri.buckets)
            if (bc.bucket.lower_ms == bi.bucket.lower_ms) {
                ++pairs;
                dominated += cdf_dominates(bc.cdf, bi.cdf) && !cdf_dominates(bi.cdf, bc.cdf);
            }
    v.require(pairs > 0 && dominated == pairs, "constructed fixture dominance");
    v.detail << " constructed fixture: " << dominated << "/" << pairs << " buckets dominate";
    report(8, "population dominance", v);
}

// ---- 9 ----------------------------------------------------------------

void criterion9() {
    Verdict v;
    Rng rng(91);
    int pareto_bad = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 500)(rng);
        std::uniform_int_distribution<int> lat(0, trial % 2 ? 40 : 100000), acc(0, trial % 3 ? 30 : 100000);
        std::vector<ParetoPoint> pts;
        for (int i = 0; i < n; ++i) pts.push_back(ParetoPoint{10.0 + lat(rng) * 0.5, acc(rng) / 100000.0, 0});
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            bool keep = true;
            for (std::size_t j = 0; j < pts.size() && keep; ++j) {
                if (j == i) continue;
                const bool same = pts[j].latency_ms == pts[i].latency_ms && pts[j].accuracy == pts[i].accuracy;
                const bool dom = pts[j].latency_ms <= pts[i].latency_ms && pts[j].accuracy >= pts[i].accuracy && !same;
                if (dom || (same && j < i)) keep = false;
            }
            if (keep) want.push_back(i);
        }
        std::vector<std::size_t> got;
        for (const auto& p : pareto_front(pts)) got.push_back(p.index);
        std::sort(got.begin(), got.end());
        pareto_bad += got != want;
    }
    v.require(pareto_bad == 0, "pareto vs O(n^2) oracle");

    int cdf_bad = 0, box_bad = 0;
    std::uniform_int_distribution<int> grid(0, 50);
    std::uniform_real_distribution<double> u;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> accs(static_cast<std::size_t>(5 + trial * 7));
        for (auto& a : accs) a = grid(rng) / 50.0;
        const auto c = make_cdf(accs);
        for (int k = -1; k <= 51; ++k) {
            const double e = 1.0 - k / 50.0;
            std::size_t below = 0;
            for (double a : accs) below += (1.0 - a) <= e;
            cdf_bad += c.at(e) != static_cast<double>(below) / static_cast<double>(accs.size());
        }
        std::vector<double> x(static_cast<std::size_t>(1 + trial * 3));
        for (auto& val : x) val = u(rng);
        const auto b = boxplot_stats(x);
        std::sort(x.begin(), x.end());
        const std::size_t n = x.size();
        auto q = [&](double p) {
            const double h = (static_cast<double>(n) - 1) * p + 1;
            const auto j = static_cast<std::size_t>(h);
            const double lo = x[j - 1], hi = x[std::min(j, n - 1)];
            return lo + (h - static_cast<double>(j)) * (hi - lo);
        };
        box_bad += b.q1 != q(0.25) || b.median != q(0.5) || b.q3 != q(0.75) || b.min != x.front() || b.max != x.back();
    }
    v.require(cdf_bad == 0, "cdf bit-exact");
    v.require(box_bad == 0, "quartiles bit-exact");

    const std::vector<double> two{0.0, 1.0}, three{0.2, 0.4, 0.9};
    const double t1 = std::tan(std::numbers::pi * 0.475);
    const double err1 = std::abs(bucket_mean_ci(two).half_width - t1 * std::sqrt(0.5) / std::sqrt(2.0));
    const double p = 0.95, t2 = (2 * p - 1) / std::sqrt(2 * p * (1 - p));
    const double sd = std::sqrt((0.09 + 0.01 + 0.16) / 2.0);
    const double err2 = std::abs(bucket_mean_ci(three, 0.9).half_width - t2 * sd / std::sqrt(3.0));
    v.require(err1 <= 1e-12 && err2 <= 1e-12, "t-interval closed form");
    v.detail << " pareto mismatches " << pareto_bad << "/40, cdf mismatches " << cdf_bad << ", quartile mismatches "
             << box_bad << ", t-interval errors " << err1 << " " << err2;
    report(9, "analysis oracles", v);
}

// ---- 10 ---------------------------------------------------------------

void criterion10(Families& fam) {
    Verdict v;
    const SyntheticLatencyModel model(toy(), {});
    int ok_acc = 0, ok_lat = 0, n = 0;
    for (auto& f : fam.all()) {
        const Heatmap h = heatmap_grid(f.rc.space, f.acc, model, f.rc.space.max_resolution());
        const auto d4 = static_cast<std::size_t>(std::find(h.depths.begin(), h.depths.end(), 4) - h.depths.begin());
        const auto d2 = static_cast<std::size_t>(std::find(h.depths.begin(), h.depths.end(), 2) - h.depths.begin());
        const auto w6 = static_cast<std::size_t>(std::find(h.widths.begin(), h.widths.end(), 6.0) - h.widths.begin());
        const auto w3 = static_cast<std::size_t>(std::find(h.widths.begin(), h.widths.end(), 3.0) - h.widths.begin());
        if (d4 == h.depths.size() || d2 == h.depths.size() || w6 == h.widths.size() || w3 == h.widths.size()) {
            v.require(false, "grid has d in {2,4} and w in {3,6}");
            continue;
        }
        bool lat = true;
        for (std::size_t i = 0; i < h.depths.size(); ++i)
            for (std::size_t j = 0; j < h.widths.size(); ++j) {
                if (i > 0) lat = lat && h.latency_ms[i][j] > h.latency_ms[i - 1][j];
                if (j > 0) lat = lat && h.latency_ms[i][j] > h.latency_ms[i][j - 1];
            }
        ok_acc += h.accuracy[d4][w6] >= h.accuracy[d2][w3];
        ok_lat += lat;
        ++n;
        v.detail << " " << f.space << "/" << to_string(f.kind) << "/" << f.seed << " " << fmt(h.accuracy[d2][w3], 3)
                 << "->" << fmt(h.accuracy[d4][w6], 3) << ";";
    }
    v.require(n > 0 && ok_acc == n, "acc(4,6) >= acc(2,3)");
    v.require(n > 0 && ok_lat == n, "latency strictly increasing");
    v.detail << " " << ok_acc << "/" << n << " supernets ordered, latency monotone " << ok_lat << "/" << n;
    report(10, "heatmap diagonal", v);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    std::vector<int> only;
    std::vector<int> known;
    std::string cache_dir;
    app.add_option("--known-failures", known, "criteria whose failure is expected")->delimiter(',');
    app.add_option("--only", only, "criteria to run")->delimiter(',')->check(CLI::Range(1, 10));
    app.add_option("--cache", cache_dir, "directory for trained supernets");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> want = only.empty() ? std::set<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}
                                            : std::set<int>(only.begin(), only.end());

    Families fam(cache_dir);
    const auto t0 = Clock::now();
    try {
        if (want.contains(1)) criterion1();
        if (want.contains(2)) criterion2();
        if (want.contains(3)) criterion3();
        if (want.contains(4)) criterion4();
        if (want.contains(9)) criterion9();
        if (want.contains(5) || want.contains(6)) criterion5_6(fam);
        if (want.contains(7)) criterion7(fam);
        if (want.contains(8)) criterion8(fam);
        if (want.contains(10)) {
            if (fam.size() == 0) fam.get("toy-compound", ScheduleKind::SingleStage, kSeeds[0]);
            criterion10(fam);
        }
    } catch (const std::exception& e) {
        std::printf("FAIL aborted: %s\n", e.what());
        return 1;
    }
    int failed = 0, unexpected = 0;
    for (const auto& [id, ok] : g_results)
        if (!ok) {
            ++failed;
            if (std::find(known.begin(), known.end(), id) == known.end()) ++unexpected;
            else std::printf("criterion %d failed as expected\n", id);
        }
    std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(g_results.size()) - failed, g_results.size(),
                since(t0));
    return unexpected == 0 ? 0 : 1;
}
