#include "cnas/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>

#include "cnas/errors.hpp"

namespace cnas {

void TrainingLog::write_steps_csv(const std::string& path, const std::string& provenance) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out.precision(17);
    if (!provenance.empty()) out << "# " << provenance << '\n';
    out << "phase,epoch,step,loss,lr\n";
    for (const auto& s : steps) out << s.phase << ',' << s.epoch << ',' << s.step << ',' << s.loss << ',' << s.lr << '\n';
}

nlohmann::json TrainingLog::summary() const {
    nlohmann::json ep = nlohmann::json::array(), ev = nlohmann::json::array();
    for (const auto& e : epochs) ep.push_back({{"phase", e.phase}, {"epoch", e.epoch}, {"mean_loss", e.mean_loss}});
    for (const auto& e : evals)
        ev.push_back({{"phase", e.phase}, {"min", e.min_acc}, {"median", e.median_acc}, {"max", e.max_acc}});
    return {{"epochs", ep}, {"evals", ev}};
}

namespace {

double eval_arch(const SupernetParams& params, const ArchSpec& arch, const Tensor& images,
                 const std::vector<int>& labels) {
    return evaluate_accuracy(slice_subnet(params, arch), images, labels);
}

}  // namespace

TrainingLog run_training(SupernetParams& params, const TrainingSchedule& schedule, const Dataset& train,
                         const Dataset& test, std::uint64_t seed, const TrainOptions& options,
                         const StepCallback& on_step) {
    const SearchSpaceDef& space = params.space;
    if (train.size() == 0) throw ConfigError("training set is empty");
    if (options.batch_size < 1) throw ConfigError("batch size must be positive");
    schedule.check(space);

    TrainingLog log;
    if (schedule.phases.empty()) return log;

    Rng shuffle_rng(seed ^ 0x5851f42d4c957f2dULL);
    Rng arch_rng(seed ^ 0x14057b7ef767814fULL);
    SgdState state = SgdState::for_params(params);

    Tensor eval_images = test.images;
    std::vector<int> eval_labels = test.labels;
    if (options.eval_images > 0 && static_cast<std::size_t>(options.eval_images) < test.size()) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(options.eval_images));
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        eval_images = gather_samples(test.images, idx);
        eval_labels.resize(idx.size());
    }

    std::optional<SupernetParams> teacher_params;
    std::optional<SubnetView> teacher_view;

    const std::size_t n = train.size();
    const auto bs = static_cast<std::size_t>(options.batch_size);
    const std::size_t steps_per_epoch = (n + bs - 1) / bs;
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> idx;
    std::vector<int> labels;
    std::vector<ArchSpec> archs;
    std::uniform_int_distribution<std::size_t> pick_r(0, space.resolutions.size() - 1);

    for (const auto& phase : schedule.phases) {
        if (phase.distill && !teacher_params) {
            teacher_params.emplace(params);
            teacher_view.emplace(slice_subnet(*teacher_params, max_arch(space)));
        }
        const LevelMask mask = unlocked_mask(phase, space);
        const double total_steps = static_cast<double>(steps_per_epoch * static_cast<std::size_t>(phase.epochs));
        int step = 0;
        for (int epoch = 0; epoch < phase.epochs; ++epoch) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            double loss_sum = 0.0;
            for (std::size_t start = 0; start < n; start += bs, ++step) {
                const std::size_t end = std::min(n, start + bs);
                idx.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
                labels.resize(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = train.labels[idx[i]];
                const Tensor batch = gather_samples(train.images, idx);

                const int resolution = space.resolutions[pick_r(arch_rng)];
                archs.clear();
                for (int s = 0; s < phase.n_sample; ++s) {
                    archs.push_back(sample_uniform(space, arch_rng, options.sampling, &mask));
                    archs.back().resolution = resolution;
                }
                const double lr = phase.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * step / total_steps));
                double loss = 0.0;
                try {
                    loss = train_step(params, state, archs, batch, labels,
                                      phase.distill ? &*teacher_view : nullptr, lr, options.kd, options.sgd);
                } catch (const NonFiniteLoss& e) {
                    throw NonFiniteLoss("phase " + phase.name + ", epoch " + std::to_string(epoch) + ", step " +
                                        std::to_string(step) + ": " + e.what());
                }
                loss_sum += loss;
                StepRecord rec{phase.name, epoch, step, loss, lr};
                if (on_step) on_step(rec);
                log.steps.push_back(std::move(rec));
            }
            log.epochs.push_back(EpochRecord{phase.name, epoch, loss_sum / static_cast<double>(steps_per_epoch)});
        }
        if (eval_images.n > 0)
            log.evals.push_back(PhaseEval{phase.name, eval_arch(params, min_arch(space), eval_images, eval_labels),
                                          eval_arch(params, median_arch(space), eval_images, eval_labels),
                                          eval_arch(params, max_arch(space), eval_images, eval_labels)});
    }
    return log;
}

std::function<double(const ArchSpec&)> memo_accuracy(const SupernetParams& params, const Dataset& data) {
    auto memo = std::make_shared<std::map<std::string, double>>();
    return [&params, &data, memo](const ArchSpec& arch) {
        const std::string key = to_json(arch).dump();
        auto it = memo->find(key);
        if (it != memo->end()) return it->second;
        const double acc = evaluate_accuracy(slice_subnet(params, arch), data.images, data.labels);
        memo->emplace(key, acc);
        return acc;
    };
}

}  // namespace cnas
