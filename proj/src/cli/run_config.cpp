#include "cnas/run_config.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cnas/errors.hpp"

namespace cnas {

namespace {

using nlohmann::json;

// Inserts `defaults` keys missing from `j`; nested objects merge recursively.
void fill(json& j, const json& defaults) {
    for (auto it = defaults.begin(); it != defaults.end(); ++it) {
        if (!j.contains(it.key()))
            j[it.key()] = it.value();
        else if (j[it.key()].is_object() && it.value().is_object())
            fill(j[it.key()], it.value());
    }
}

void require_file(const json& j, const char* key) {
    const auto path = j.at(key).get<std::string>();
    if (!std::filesystem::is_regular_file(path))
        throw ConfigError(std::string(key) + " path '" + path + "' does not exist");
}

template <class T>
T field(const json& j, const char* section, const char* key) {
    try {
        return j.at(section).at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(section) + "." + key + ": " + e.what());
    }
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
}

RunConfig resolve_run_config(nlohmann::json j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("seed") || !j["seed"].is_number_integer() || j["seed"].get<std::int64_t>() < 0)
        throw ConfigError("config needs a non-negative integer 'seed'");
    RunConfig rc;
    rc.seed = j["seed"].get<std::uint64_t>();

    fill(j, {{"space", "toy-compound"},
             {"base", "toy"},
             {"schedule", {{"kind", "single-stage"}, {"scale", 1.0 / 12.0}, {"batch_size", 64}}},
             {"kd", {{"lambda", 1.0}, {"temperature", 1.0}}},
             {"sgd", {{"momentum", 0.9}, {"weight_decay", 0.0}, {"clip_norm", TrainOptions{}.sgd.clip_norm}}},
             {"dataset", {{"kind", "synthetic"}}},
             {"latency", {{"kind", "synthetic"}}},
             {"search", {{"preset", "compofa-fixed"}}},
             {"output_dir", "out"}});

    try {
        rc.space = j["space"].is_string() ? space_preset(j["space"].get<std::string>()) : space_from_json(j["space"]);
        rc.space.check();
        rc.base = base_from_json(j["base"]);
        rc.base.check();
        if (rc.base.blocks() != rc.space.blocks)
            throw ConfigError("base has " + std::to_string(rc.base.blocks()) + " blocks, space has " +
                              std::to_string(rc.space.blocks));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("space/base: ") + e.what());
    } catch (const InvalidSpace& e) {
        throw ConfigError(e.what());
    }

    rc.schedule_kind = schedule_kind_from_string(field<std::string>(j, "schedule", "kind"));
    rc.schedule_scale = field<double>(j, "schedule", "scale");
    rc.batch_size = field<int>(j, "schedule", "batch_size");
    if (!(rc.schedule_scale > 0.0)) throw ConfigError("schedule.scale must be positive");
    if (rc.batch_size < 1) throw ConfigError("schedule.batch_size must be >= 1");
    rc.kd.lambda = field<double>(j, "kd", "lambda");
    rc.kd.temperature = field<double>(j, "kd", "temperature");
    if (!(rc.kd.temperature > 0.0)) throw ConfigError("kd.temperature must be positive");
    rc.sgd.momentum = field<double>(j, "sgd", "momentum");
    rc.sgd.weight_decay = field<double>(j, "sgd", "weight_decay");
    rc.sgd.clip_norm = field<double>(j, "sgd", "clip_norm");

    auto& ds = j["dataset"];
    const auto ds_kind = field<std::string>(j, "dataset", "kind");
    if (ds_kind == "synthetic") {
        const SyntheticDataConfig d;
        fill(ds, {{"n_train", d.n_train},
                  {"n_test", d.n_test},
                  {"side", rc.base.input_side},
                  {"classes", rc.base.classes},
                  {"seed", rc.seed}});
    } else if (ds_kind == "csv") {
        require_file(ds, "train");
        require_file(ds, "test");
    } else {
        throw ConfigError("dataset.kind must be 'synthetic' or 'csv'");
    }

    auto& lat = j["latency"];
    const auto lat_kind = field<std::string>(j, "latency", "kind");
    if (lat_kind == "synthetic") {
        const SyntheticCoeffs c;
        fill(lat, {{"ms_per_mflop", c.ms_per_mflop}, {"overhead_ms", c.overhead_ms}, {"noise_sigma", c.noise_sigma}});
    } else if (lat_kind == "lut") {
        require_file(lat, "path");
    } else {
        throw ConfigError("latency.kind must be 'synthetic' or 'lut'");
    }

    auto& s = j["search"];
    rc.evo = evo_preset(field<std::string>(j, "search", "preset"));
    fill(s, {{"iterations", rc.evo.iterations},
             {"population", rc.evo.population},
             {"parent_fraction", rc.evo.parent_fraction},
             {"p_mut", rc.evo.p_mut},
             {"mutation_share", rc.evo.mutation_share},
             {"target_ms", 30.0},
             {"max_retries", rc.evo.max_retries},
             {"seed", rc.seed}});
    rc.evo.iterations = field<int>(j, "search", "iterations");
    rc.evo.population = field<int>(j, "search", "population");
    rc.evo.parent_fraction = field<double>(j, "search", "parent_fraction");
    rc.evo.p_mut = field<double>(j, "search", "p_mut");
    rc.evo.mutation_share = field<double>(j, "search", "mutation_share");
    rc.evo.target_ms = field<double>(j, "search", "target_ms");
    rc.evo.max_retries = field<int>(j, "search", "max_retries");
    rc.evo.seed = field<std::uint64_t>(j, "search", "seed");
    rc.evo.check();

    rc.output_dir = j["output_dir"].get<std::string>();
    rc.json = std::move(j);
    return rc;
}

std::string RunConfig::hash() const { return fnv1a_hex(json.dump()); }

TrainingSchedule RunConfig::schedule() const {
    TrainingSchedule s = make_schedule(schedule_kind, schedule_scale, batch_size);
    s.check(space);
    return s;
}

DataSplit RunConfig::load_data() const {
    const auto& ds = json.at("dataset");
    if (ds.at("kind") == "synthetic") {
        SyntheticDataConfig d;
        d.n_train = ds.at("n_train").get<int>();
        d.n_test = ds.at("n_test").get<int>();
        d.side = ds.at("side").get<int>();
        d.classes = ds.at("classes").get<int>();
        d.channels = base.input_channels;
        d.seed = ds.at("seed").get<std::uint64_t>();
        return make_synthetic(d);
    }
    const int side = base.input_side;
    return DataSplit{load_image_csv(ds.at("train").get<std::string>(), base.input_channels, side, base.classes),
                     load_image_csv(ds.at("test").get<std::string>(), base.input_channels, side, base.classes)};
}

std::unique_ptr<LatencyModel> RunConfig::latency_model() const {
    const auto& lat = json.at("latency");
    if (lat.at("kind") == "lut") return std::make_unique<LutLatencyModel>(load_lut(lat.at("path").get<std::string>()));
    SyntheticCoeffs c;
    c.ms_per_mflop = lat.at("ms_per_mflop").get<double>();
    c.overhead_ms = lat.at("overhead_ms").get<double>();
    c.noise_sigma = lat.at("noise_sigma").get<double>();
    return std::make_unique<SyntheticLatencyModel>(base, c, seed);
}

}  // namespace cnas
