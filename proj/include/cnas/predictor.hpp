#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnas/arch_space.hpp"

namespace cnas {

struct TrainingPair {
    ArchEncoding encoding;
    double accuracy = 0.0;
};

// Three fully connected layers: in -> hidden -> hidden -> 1 with ReLU on
// the hidden layers. The scalar output is mapped back to accuracy units by
// target_scale and target_shift fitted on the training targets.
struct PredictorNet {
    int inputs = 0;
    int hidden = 0;
    std::vector<double> w1, b1, w2, b2, w3;  // row-major, out x in
    double b3 = 0.0;
    double target_shift = 0.0;
    double target_scale = 1.0;

    static PredictorNet init(int inputs, int hidden, std::uint64_t seed);
    // Unclamped output in accuracy units. Throws ShapeMismatch.
    double raw_output(const ArchEncoding& enc) const;
};

struct PredictorConfig {
    int hidden = 64;
    int epochs = 300;
    double lr = 0.01;
    double momentum = 0.9;
    int batch_size = 16;
    double validation_fraction = 0.2;
    std::uint64_t seed = 0;
};

struct PredictorFit {
    PredictorNet net;
    double validation_rmse = 0.0;
    double train_rmse = 0.0;
};

inline constexpr std::size_t kMinPredictorPairs = 20;

// Seeded 80/20 split, minibatch SGD with momentum on mean squared error.
// Throws InsufficientData below kMinPredictorPairs and ShapeMismatch for
// ragged encodings.
PredictorFit train_predictor(std::span<const TrainingPair> pairs, const PredictorConfig& config = {});

// Output clamped to [0, 1].
double predict(const PredictorNet& net, const ArchEncoding& enc);

// Average ranks (ties share the mean rank), then Pearson on the ranks.
double spearman(std::span<const double> a, std::span<const double> b);

// Rows of 0/1 bits followed by the accuracy.
std::vector<TrainingPair> load_pairs_csv(const std::string& path);
void save_pairs_csv(std::span<const TrainingPair> pairs, const std::string& path);

void save_predictor(const std::string& path, const PredictorNet& net, const std::string& provenance = {});
PredictorNet load_predictor(const std::string& path);

}  // namespace cnas
