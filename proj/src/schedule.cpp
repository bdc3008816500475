#include "cnas/schedule.hpp"

#include <cmath>

#include "cnas/errors.hpp"

namespace cnas {

namespace {

// Learning rates at kReferenceBatch.
constexpr double kTeacherLr = 1.95;
constexpr double kKernelLr = 0.72;
constexpr double kShortLr = 0.06;
constexpr double kLongLr = 0.18;

int scaled_epochs(int epochs, double scale) {
    return std::max(1, static_cast<int>(std::ceil(epochs * scale - 1e-9)));
}

double hm(int hours, int minutes) { return hours * 3600.0 + minutes * 60.0; }

}  // namespace

std::string to_string(ScheduleKind kind) {
    switch (kind) {
        case ScheduleKind::ProgressiveShrinking: return "progressive";
        case ScheduleKind::SingleStage: return "single-stage";
        case ScheduleKind::ElasticKernelThenCompound: return "elastic-kernel";
    }
    return "unknown";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "progressive") return ScheduleKind::ProgressiveShrinking;
    if (name == "single-stage") return ScheduleKind::SingleStage;
    if (name == "elastic-kernel") return ScheduleKind::ElasticKernelThenCompound;
    throw ConfigError("unknown schedule kind '" + name + "'");
}

int TrainingSchedule::total_epochs() const {
    int t = 0;
    for (const auto& p : phases) t += p.epochs;
    return t;
}

void TrainingSchedule::check(const SearchSpaceDef& space) const {
    auto unlocked = [](int levels, std::size_t available) {
        return levels == 0 ? available : static_cast<std::size_t>(levels);
    };
    std::size_t pd = 0, pw = 0, pk = 0;
    for (const auto& p : phases) {
        if (p.n_sample < 1) throw ConfigError("phase " + p.name + ": n_sample must be >= 1");
        if (p.epochs < 1) throw ConfigError("phase " + p.name + ": epochs must be >= 1");
        if (p.depth_levels < 0 || p.width_levels < 0 || p.kernel_levels < 0)
            throw ConfigError("phase " + p.name + ": level counts must be >= 0");
        const auto d = unlocked(p.depth_levels, space.levels.depths.size());
        const auto w = unlocked(p.width_levels, space.levels.widths.size());
        const auto k = unlocked(p.kernel_levels, space.levels.kernels.size());
        if (d > space.levels.depths.size() || w > space.levels.widths.size() || k > space.levels.kernels.size())
            throw ConfigError("phase " + p.name + " unlocks more levels than the space has");
        if (d < pd || w < pw || k < pk) throw ConfigError("phase " + p.name + " locks previously unlocked levels");
        pd = d;
        pw = w;
        pk = k;
    }
}

TrainingSchedule make_schedule(ScheduleKind kind, double scale, int batch_size) {
    if (!(scale > 0.0)) throw ConfigError("epoch scale must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be positive");
    const double lr_scale = static_cast<double>(batch_size) / kReferenceBatch;
    TrainingSchedule s;
    auto add = [&](std::string name, int d, int w, int k, int n, int epochs, double lr, bool distill) {
        s.phases.push_back(TrainPhase{std::move(name), d, w, k, n, scaled_epochs(epochs, scale), lr * lr_scale, distill});
    };
    add("Teacher", 1, 1, 1, 1, 180, kTeacherLr, false);
    switch (kind) {
        case ScheduleKind::ProgressiveShrinking:
            add("ElasticKernel", 1, 1, 0, 1, 125, kKernelLr, true);
            add("ElasticDepth-1", 2, 1, 0, 2, 25, kShortLr, true);
            add("ElasticDepth-2", 0, 1, 0, 2, 125, kLongLr, true);
            add("ElasticWidth-1", 0, 2, 0, 4, 25, kShortLr, true);
            add("ElasticWidth-2", 0, 0, 0, 4, 125, kLongLr, true);
            break;
        case ScheduleKind::SingleStage:
            add("Compound-1", 0, 0, 0, 4, 25, kShortLr, true);
            add("Compound-2", 0, 0, 0, 4, 125, kLongLr, true);
            break;
        case ScheduleKind::ElasticKernelThenCompound:
            add("ElasticKernel", 1, 1, 0, 1, 125, kKernelLr, true);
            add("Compound-1", 0, 0, 0, 4, 25, kShortLr, true);
            add("Compound-2", 0, 0, 0, 4, 125, kLongLr, true);
            break;
    }
    for (const auto& p : s.phases) s.epoch_seconds[p.name] = 1.0;
    return s;
}

std::map<std::string, double> reference_epoch_seconds(ScheduleKind kind) {
    std::map<std::string, double> m;
    m["Teacher"] = hm(28, 45) / 180;
    switch (kind) {
        case ScheduleKind::ProgressiveShrinking:
            m["ElasticKernel"] = hm(26, 51) / 125;
            m["ElasticDepth-1"] = hm(7, 46) / 25;
            m["ElasticDepth-2"] = hm(38, 32) / 125;
            m["ElasticWidth-1"] = hm(10, 6) / 25;
            m["ElasticWidth-2"] = hm(51, 3) / 125;
            break;
        case ScheduleKind::SingleStage:
            m["Compound-1"] = hm(8, 43) / 25;
            m["Compound-2"] = hm(44, 47) / 125;
            break;
        case ScheduleKind::ElasticKernelThenCompound:
            m["ElasticKernel"] = hm(26, 51) / 125;
            m["Compound-1"] = hm(9, 21) / 25;
            m["Compound-2"] = hm(48, 1) / 125;
            break;
    }
    return m;
}

double family_train_time(const TrainingSchedule& schedule) {
    double total = 0.0;
    for (const auto& p : schedule.phases) {
        auto it = schedule.epoch_seconds.find(p.name);
        if (it == schedule.epoch_seconds.end()) throw MissingTimeEntry("no epoch time for phase '" + p.name + "'");
        total += p.epochs * it->second;
    }
    return total;
}

LevelMask unlocked_mask(const TrainPhase& phase, const SearchSpaceDef& space) {
    auto top = [](int levels, std::size_t n) {
        std::vector<bool> m(n, false);
        const std::size_t k = levels == 0 ? n : std::min(n, static_cast<std::size_t>(levels));
        for (std::size_t i = n - k; i < n; ++i) m[i] = true;
        return m;
    };
    LevelMask m;
    m.depths = top(phase.depth_levels, space.levels.depths.size());
    m.widths = top(phase.width_levels, space.levels.widths.size());
    m.kernels = top(phase.kernel_levels, space.levels.kernels.size());
    return m;
}

nlohmann::json to_json(const TrainingSchedule& s) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& p : s.phases)
        phases.push_back({{"name", p.name},
                          {"depth_levels", p.depth_levels},
                          {"width_levels", p.width_levels},
                          {"kernel_levels", p.kernel_levels},
                          {"n_sample", p.n_sample},
                          {"epochs", p.epochs},
                          {"lr", p.lr},
                          {"distill", p.distill}});
    return {{"phases", phases}, {"epoch_seconds", s.epoch_seconds}};
}

TrainingSchedule schedule_from_json(const nlohmann::json& j) {
    try {
        TrainingSchedule s;
        for (const auto& jp : j.at("phases"))
            s.phases.push_back(TrainPhase{jp.at("name").get<std::string>(), jp.at("depth_levels").get<int>(),
                                          jp.at("width_levels").get<int>(), jp.at("kernel_levels").get<int>(),
                                          jp.at("n_sample").get<int>(), jp.at("epochs").get<int>(),
                                          jp.at("lr").get<double>(), jp.at("distill").get<bool>()});
        if (j.contains("epoch_seconds")) s.epoch_seconds = j.at("epoch_seconds").get<std::map<std::string, double>>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed schedule JSON: ") + e.what());
    }
}

}  // namespace cnas
