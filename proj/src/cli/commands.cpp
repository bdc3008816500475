#include "cnas/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnas/analysis.hpp"
#include "cnas/checkpoint.hpp"
#include "cnas/errors.hpp"
#include "cnas/evo_search.hpp"
#include "cnas/latency.hpp"
#include "cnas/predictor.hpp"
#include "cnas/run_config.hpp"
#include "cnas/training.hpp"

namespace cnas {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kEnumerationLimit = 1'000'000;

// Options shared by every config-driven subcommand. Flags given on the
// command line replace the matching config fields.
struct ConfigFlags {
    std::string path;
    std::optional<std::uint64_t> seed;
    std::string space;
    std::string out_dir;
    std::optional<double> target_ms;

    void attach(CLI::App* app) {
        app->add_option("--config", path, "JSON run configuration")->check(CLI::ExistingFile);
        app->add_option("--seed", seed, "master seed (overrides config)");
        app->add_option("--space", space, "space preset (overrides config)");
        app->add_option("--out", out_dir, "output directory (overrides config)");
    }

    json merged() const {
        json j = path.empty() ? json::object() : read_json_file(path);
        if (seed) j["seed"] = *seed;
        if (!space.empty()) j["space"] = space;
        if (!out_dir.empty()) j["output_dir"] = out_dir;
        if (target_ms) j["search"]["target_ms"] = *target_ms;
        return j;
    }

    RunConfig resolve() const { return resolve_run_config(merged()); }
};

std::string provenance(const RunConfig& rc) { return "config_hash=" + rc.hash(); }

fs::path output_dir(const RunConfig& rc) {
    fs::path dir(rc.output_dir);
    fs::create_directories(dir);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void write_timing(const fs::path& dir, const std::string& command, double seconds) {
    write_json(dir / ("timing_" + command + ".json"), {{"command", command}, {"wall_seconds", seconds}});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SearchSpaceDef space_from_flag(const std::string& name) {
    if (name.empty()) throw ConfigError("--space or --config is required");
    return space_preset(name);
}

// Fitness from a trained supernet (test-set accuracy) or a predictor file.
struct Evaluator {
    std::optional<SupernetParams> params;
    DataSplit data;
    std::optional<PredictorNet> predictor;
    SearchSpaceDef space;
    AccuracyFn acc;

    Evaluator(const RunConfig& rc, const std::string& checkpoint, const std::string& predictor_path)
        : space(rc.space) {
        if (!predictor_path.empty()) {
            predictor = load_predictor(predictor_path);
            acc = [this](const ArchSpec& a) { return predict(*predictor, encode(space, a)); };
            return;
        }
        if (checkpoint.empty()) throw ConfigError("--checkpoint or --predictor is required");
        params = load_supernet(checkpoint);
        data = rc.load_data();
        acc = memo_accuracy(*params, data.test);
    }
};

ArchSpec named_arch(const SearchSpaceDef& space, const std::string& which) {
    if (which == "max") return max_arch(space);
    if (which == "min") return min_arch(space);
    if (which == "median") return median_arch(space);
    throw ConfigError("--which must be max, min or median");
}

// Every architecture when the space is small enough, else n seeded draws.
std::vector<ArchSpec> population(const SearchSpaceDef& space, int n, std::uint64_t seed) {
    if (cardinality(space) <= BigInt(n)) return enumerate(space, kEnumerationLimit);
    Rng rng(seed);
    std::vector<ArchSpec> v;
    for (int i = 0; i < n; ++i) v.push_back(sample_uniform(space, rng));
    return v;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Weight-shared supernet training, search and analysis"};
    app.require_subcommand(1);

    // cardinality
    auto* card = app.add_subcommand("cardinality", "exact number of architectures in a space");
    std::string card_space;
    card->add_option("--space", card_space, "space preset")->required();

    // sample
    auto* samp = app.add_subcommand("sample", "draw architectures uniformly");
    std::string samp_space;
    std::uint64_t samp_seed = 0;
    int samp_count = 1;
    bool samp_encode = false;
    samp->add_option("--space", samp_space, "space preset")->required();
    samp->add_option("--seed", samp_seed, "sampling seed")->required();
    samp->add_option("--count", samp_count, "number of architectures")->check(CLI::PositiveNumber);
    samp->add_flag("--encode", samp_encode, "print the bit encoding instead of JSON");

    // train
    auto* train = app.add_subcommand("train", "train a supernet with the configured schedule");
    ConfigFlags train_cfg;
    train_cfg.attach(train);
    int eval_images = 0;
    train->add_option("--eval-images", eval_images, "held-out images for per-phase evaluation (0 = all)");

    // search
    auto* search = app.add_subcommand("search", "latency-constrained architecture search");
    ConfigFlags search_cfg;
    search_cfg.attach(search);
    std::string checkpoint, predictor_path, cache_path;
    bool exhaustive = false;
    search->add_option("--target-ms", search_cfg.target_ms, "latency target (overrides config)");
    search->add_option("--checkpoint", checkpoint, "trained supernet")->check(CLI::ExistingFile);
    search->add_option("--predictor", predictor_path, "accuracy predictor used as fitness")->check(CLI::ExistingFile);
    search->add_option("--cache", cache_path, "latency cache file (read if present, written after)");
    search->add_flag("--exhaustive", exhaustive, "scan the whole space instead of evolving");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "population statistics and figure data");
    analyze->require_subcommand(1);
    ConfigFlags an_cfg;
    std::string an_checkpoint, an_predictor;
    int an_n = 50;
    double bucket_ms = 5.0;
    std::string sampling = "rejection";
    auto add_eval = [&](CLI::App* sub) {
        an_cfg.attach(sub);
        sub->add_option("--checkpoint", an_checkpoint, "trained supernet")->check(CLI::ExistingFile);
        sub->add_option("--predictor", an_predictor, "accuracy predictor")->check(CLI::ExistingFile);
        sub->add_option("--n", an_n, "samples (per bucket for cdf)")->check(CLI::PositiveNumber);
    };
    auto* an_cdf = analyze->add_subcommand("cdf", "per-bucket error CDFs");
    add_eval(an_cdf);
    an_cdf->add_option("--bucket-ms", bucket_ms, "bucket width")->check(CLI::PositiveNumber);
    an_cdf->add_option("--sampling", sampling, "rejection or bucket")
        ->check(CLI::IsMember({"rejection", "bucket"}));
    auto* an_pareto = analyze->add_subcommand("pareto", "accuracy/latency Pareto front");
    add_eval(an_pareto);
    auto* an_heat = analyze->add_subcommand("heatmap", "uniform depth x width grid");
    add_eval(an_heat);
    auto* an_box = analyze->add_subcommand("boxplot", "per-bucket accuracy quartiles");
    add_eval(an_box);
    an_box->add_option("--bucket-ms", bucket_ms, "bucket width")->check(CLI::PositiveNumber);
    auto* an_cost = analyze->add_subcommand("cost", "dollar and CO2 cost of GPU hours");
    double gpu_hours = 0.0, price = kV100PricePerHour, co2 = kCo2LbsPerGpuHour;
    an_cost->add_option("--gpu-hours", gpu_hours, "GPU hours")->required();
    an_cost->add_option("--price", price, "dollars per GPU hour");
    an_cost->add_option("--co2", co2, "pounds of CO2 per GPU hour");

    // flops
    auto* flops = app.add_subcommand("flops", "multiply-accumulate count of one architecture");
    ConfigFlags flops_cfg;
    flops->add_option("--config", flops_cfg.path, "JSON run configuration")->check(CLI::ExistingFile);
    flops->add_option("--space", flops_cfg.space, "space preset");
    std::string arch_json, which = "max";
    flops->add_option("--arch", arch_json, "architecture JSON");
    flops->add_option("--which", which, "max, min or median when --arch is absent");

    // lut
    auto* lut = app.add_subcommand("lut", "latency lookup tables");
    lut->require_subcommand(1);
    auto* lut_validate = lut->add_subcommand("validate", "parse and check a table");
    std::string lut_path;
    lut_validate->add_option("path", lut_path, "table CSV")->required()->check(CLI::ExistingFile);
    auto* lut_gen = lut->add_subcommand("gen-synthetic", "table from the synthetic latency model");
    ConfigFlags lut_cfg;
    lut_cfg.attach(lut_gen);
    std::string lut_out;
    lut_gen->add_option("--path", lut_out, "output CSV")->required();

    // predictor
    auto* pred = app.add_subcommand("predictor", "accuracy predictor data and fitting");
    pred->require_subcommand(1);
    auto* pred_pairs = pred->add_subcommand("pairs", "sample architectures and record supernet accuracy");
    ConfigFlags pairs_cfg;
    pairs_cfg.attach(pred_pairs);
    std::string pairs_ckpt, pairs_out;
    int pairs_n = 500;
    pred_pairs->add_option("--checkpoint", pairs_ckpt, "trained supernet")->required()->check(CLI::ExistingFile);
    pred_pairs->add_option("--n", pairs_n, "architectures to sample")->check(CLI::PositiveNumber);
    pred_pairs->add_option("--path", pairs_out, "output CSV")->required();
    auto* pred_fit = pred->add_subcommand("fit", "train a predictor on a pairs CSV");
    ConfigFlags fit_cfg;
    fit_cfg.attach(pred_fit);
    std::string fit_pairs, fit_out;
    PredictorConfig fit_opt;
    pred_fit->add_option("--pairs", fit_pairs, "pairs CSV")->required()->check(CLI::ExistingFile);
    pred_fit->add_option("--path", fit_out, "output predictor blob")->required();
    pred_fit->add_option("--hidden", fit_opt.hidden, "hidden units")->check(CLI::PositiveNumber);
    pred_fit->add_option("--epochs", fit_opt.epochs, "training epochs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        out.precision(17);
        if (*card) {
            out << cardinality(space_from_flag(card_space)).str() << '\n';
        } else if (*samp) {
            const SearchSpaceDef space = space_from_flag(samp_space);
            Rng rng(samp_seed);
            for (int i = 0; i < samp_count; ++i) {
                const ArchSpec a = sample_uniform(space, rng);
                out << (samp_encode ? encode(space, a).to_string() : to_json(a).dump()) << '\n';
            }
        } else if (*train) {
            const auto t0 = std::chrono::steady_clock::now();
            const RunConfig rc = train_cfg.resolve();
            const auto dir = output_dir(rc);
            const DataSplit data = rc.load_data();
            SupernetParams params = build_supernet(rc.base, rc.space, rc.seed);
            TrainOptions opt;
            opt.batch_size = rc.batch_size;
            opt.kd = rc.kd;
            opt.sgd = rc.sgd;
            opt.eval_images = eval_images;
            const TrainingLog log = run_training(params, rc.schedule(), data.train, data.test, rc.seed, opt);
            save_supernet((dir / "supernet.bin").string(), params, provenance(rc));
            log.write_steps_csv((dir / "steps.csv").string(), provenance(rc));
            json summary = log.summary();
            summary["config_hash"] = rc.hash();
            summary["config"] = rc.json;
            write_json(dir / "train.json", summary);
            write_timing(dir, "train", seconds_since(t0));
            out << "wrote " << (dir / "supernet.bin").string() << '\n';
        } else if (*search) {
            const auto t0 = std::chrono::steady_clock::now();
            const RunConfig rc = search_cfg.resolve();
            const auto dir = output_dir(rc);
            Evaluator ev(rc, checkpoint, predictor_path);
            const auto model = rc.latency_model();
            std::optional<LatencyCache> cache;
            if (!cache_path.empty()) {
                cache.emplace(rc.space);
                if (fs::exists(cache_path)) cache->load(cache_path);
            }
            LatencyCache* cp = cache ? &*cache : nullptr;
            json result;
            if (exhaustive) {
                const ExhaustiveResult r =
                    exhaustive_best(rc.space, ev.acc, *model, rc.evo.target_ms, kEnumerationLimit, cp);
                result = {{"arch", to_json(r.best.arch)},
                          {"fitness", r.best.fitness},
                          {"latency_ms", r.best.latency_ms},
                          {"scanned", r.scanned},
                          {"feasible", r.feasible}};
            } else {
                result = run_search(rc.space, ev.acc, *model, cp, rc.evo).to_json();
            }
            result["mode"] = exhaustive ? "exhaustive" : "evolution";
            result["target_ms"] = rc.evo.target_ms;
            result["config_hash"] = rc.hash();
            if (cache) cache->save(cache_path);
            write_json(dir / "search.json", result);
            write_timing(dir, "search", seconds_since(t0));
            out << result.dump() << '\n';
        } else if (*analyze) {
            if (*an_cost) {
                const CostReport c = cost_report(gpu_hours, price, co2);
                out << json{{"gpu_hours", c.gpu_hours},
                            {"price_per_hour", c.price_per_hour},
                            {"co2_lbs_per_hour", c.co2_lbs_per_hour},
                            {"dollars", c.dollars},
                            {"co2_lbs", c.co2_lbs}}
                           .dump()
                    << '\n';
                return kExitOk;
            }
            const RunConfig rc = an_cfg.resolve();
            const auto dir = output_dir(rc);
            Evaluator ev(rc, an_checkpoint, an_predictor);
            const auto model = rc.latency_model();
            const std::string prov = provenance(rc);
            if (*an_cdf) {
                BucketCdfOptions opt;
                opt.sampling = sampling == "bucket" ? BucketSampling::SampleThenBucket
                                                    : BucketSampling::PerBucketRejection;
                const auto r = bucket_cdf(rc.space, an_n, *model, ev.acc, bucket_ms, rc.seed, opt);
                write_cdf_csv((dir / "cdf.csv").string(), r.buckets, prov);
                out << "buckets " << r.buckets.size() << " skipped " << r.skipped.size() << '\n';
            } else if (*an_pareto) {
                std::vector<ParetoPoint> pts;
                for (const auto& a : population(rc.space, an_n, rc.seed))
                    pts.push_back(ParetoPoint{model->latency_ms(a), ev.acc(a), 0});
                const auto front = pareto_front(pts);
                write_pareto_csv((dir / "pareto.csv").string(), front, prov);
                out << "front " << front.size() << " of " << pts.size() << '\n';
            } else if (*an_heat) {
                const Heatmap h = heatmap_grid(rc.space, ev.acc, *model, rc.space.max_resolution());
                write_heatmap_csv((dir / "heatmap.csv").string(), h, prov);
                out << "heatmap " << h.depths.size() << "x" << h.widths.size() << '\n';
            } else if (*an_box) {
                std::map<long, std::vector<double>> by_bucket;
                for (const auto& a : population(rc.space, an_n, rc.seed))
                    by_bucket[static_cast<long>(std::floor(model->latency_ms(a) / bucket_ms))].push_back(ev.acc(a));
                json rows = json::array();
                for (const auto& [b, accs] : by_bucket) {
                    const BoxStats s = boxplot_stats(accs);
                    rows.push_back({{"bucket_lo", static_cast<double>(b) * bucket_ms},
                                    {"bucket_hi", static_cast<double>(b + 1) * bucket_ms},
                                    {"count", accs.size()},
                                    {"min", s.min},
                                    {"q1", s.q1},
                                    {"median", s.median},
                                    {"q3", s.q3},
                                    {"max", s.max}});
                }
                const json doc{{"config_hash", rc.hash()}, {"buckets", rows}};
                write_json(dir / "boxplot.json", doc);
                out << rows.size() << " buckets\n";
            }
        } else if (*flops) {
            json j = flops_cfg.path.empty() ? json::object() : read_json_file(flops_cfg.path);
            if (!flops_cfg.space.empty()) j["space"] = flops_cfg.space;
            if (!j.contains("seed")) j["seed"] = 0;  // FLOPs use no randomness
            const RunConfig rc = resolve_run_config(j);
            const ArchSpec a = arch_json.empty() ? named_arch(rc.space, which) : arch_from_json(json::parse(arch_json));
            if (!validate(rc.space, a)) throw InvalidArch("architecture is not in the configured space");
            const FlopBreakdown b = flop_breakdown(rc.base, a);
            out << json{{"macs", b.total()}, {"stem", b.stem}, {"blocks", b.blocks}, {"head", b.head}}.dump() << '\n';
        } else if (*pred) {
            if (*pred_pairs) {
                const RunConfig rc = pairs_cfg.resolve();
                Evaluator ev(rc, pairs_ckpt, {});
                Rng rng(rc.seed);
                std::vector<TrainingPair> pairs;
                for (int i = 0; i < pairs_n; ++i) {
                    const ArchSpec a = sample_uniform(rc.space, rng);
                    pairs.push_back(TrainingPair{encode(rc.space, a), ev.acc(a)});
                }
                save_pairs_csv(pairs, pairs_out);
                out << "wrote " << pairs.size() << " pairs to " << pairs_out << '\n';
            } else {
                const RunConfig rc = fit_cfg.resolve();
                fit_opt.seed = rc.seed;
                const auto pairs = load_pairs_csv(fit_pairs);
                const PredictorFit fit = train_predictor(pairs, fit_opt);
                save_predictor(fit_out, fit.net, provenance(rc));
                out << json{{"pairs", pairs.size()},
                            {"train_rmse", fit.train_rmse},
                            {"validation_rmse", fit.validation_rmse},
                            {"config_hash", rc.hash()}}
                           .dump()
                    << '\n';
            }
        } else if (*lut) {
            if (*lut_validate) {
                const LatencyTable t = load_lut(lut_path);
                out << "ok device=" << t.device << " entries=" << t.entries.size() << '\n';
            } else {
                const RunConfig rc = lut_cfg.resolve();
                const json& lat = rc.json.at("latency");
                if (lat.at("kind") != "synthetic") throw ConfigError("gen-synthetic needs a synthetic latency config");
                SyntheticCoeffs c;
                c.ms_per_mflop = lat.at("ms_per_mflop").get<double>();
                c.overhead_ms = lat.at("overhead_ms").get<double>();
                c.noise_sigma = 0.0;
                const LatencyTable t = synthetic_lut(rc.base, rc.space, c);
                save_lut(t, lut_out);
                out << "wrote " << t.entries.size() << " entries to " << lut_out << '\n';
            }
        }
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace cnas
