#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cnas/tensor.hpp"

namespace cnas {

struct Dataset {
    Tensor images;
    std::vector<int> labels;
    int classes = 0;

    std::size_t size() const { return labels.size(); }
};

struct DataSplit {
    Dataset train;
    Dataset test;
};

// Seeded Gaussian class clusters rendered as channel patterns. Each class
// owns a latent center; a sample draws latent amplitudes around its class
// center and renders them as a sum of fixed localized gratings (one per
// latent dimension) plus a random translation and pixel noise.
struct SyntheticDataConfig {
    int n_train = 1000;
    int n_test = 500;
    int channels = 3;
    int side = 32;
    int classes = 10;
    int latent_dim = 12;
    double cluster_spread = 0.6;  // latent std around a class center
    double pixel_noise = 0.3;
    int max_shift = 3;            // pixels, each axis
    std::uint64_t seed = 0;
};

DataSplit make_synthetic(const SyntheticDataConfig& cfg);

// One sample per row: label followed by channels*side*side pixel values in
// CHW order. Blank lines and lines starting with '#' are skipped. Throws
// ParseError naming the line.
Dataset load_image_csv(const std::string& path, int channels, int side, int classes);

}  // namespace cnas
