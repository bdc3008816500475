#include "cnas/dataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "cnas/errors.hpp"

namespace cnas {

namespace {

struct Grating {
    std::vector<double> channel_gain;
    double freq, cos_t, sin_t, phase, cx, cy, inv_two_s2;
};

double grating_at(const Grating& g, double x, double y) {
    const double u = x * g.cos_t + y * g.sin_t;
    const double dx = x - g.cx, dy = y - g.cy;
    return std::cos(2.0 * std::numbers::pi * g.freq * u + g.phase) * std::exp(-(dx * dx + dy * dy) * g.inv_two_s2);
}

Dataset render(const SyntheticDataConfig& cfg, const std::vector<Grating>& gratings,
               const std::vector<std::vector<double>>& centers, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> shift(-cfg.max_shift, cfg.max_shift);
    Dataset d;
    d.classes = cfg.classes;
    d.images = Tensor(n, cfg.channels, cfg.side, cfg.side);
    d.labels.resize(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(cfg.latent_dim));
    for (int i = 0; i < n; ++i) {
        const int label = i % cfg.classes;
        d.labels[static_cast<std::size_t>(i)] = label;
        for (std::size_t b = 0; b < z.size(); ++b)
            z[b] = centers[static_cast<std::size_t>(label)][b] + cfg.cluster_spread * normal(rng);
        const int sx = shift(rng), sy = shift(rng);
        for (int y = 0; y < cfg.side; ++y)
            for (int x = 0; x < cfg.side; ++x) {
                for (int c = 0; c < cfg.channels; ++c) d.images.at(i, c, y, x) = 0.0;
                for (std::size_t b = 0; b < z.size(); ++b) {
                    const double v = z[b] * grating_at(gratings[b], x - sx, y - sy);
                    for (int c = 0; c < cfg.channels; ++c)
                        d.images.at(i, c, y, x) += v * gratings[b].channel_gain[static_cast<std::size_t>(c)];
                }
            }
        for (auto& px : d.images.sample(i)) px += cfg.pixel_noise * normal(rng);
    }
    return d;
}

}  // namespace

DataSplit make_synthetic(const SyntheticDataConfig& cfg) {
    if (cfg.n_train < 1 || cfg.n_test < 0 || cfg.classes < 2 || cfg.side < 4 || cfg.channels < 1 ||
        cfg.latent_dim < 1)
        throw ConfigError("invalid synthetic dataset configuration");
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double scale = cfg.side / 32.0;

    std::vector<Grating> gratings(static_cast<std::size_t>(cfg.latent_dim));
    for (auto& g : gratings) {
        for (int c = 0; c < cfg.channels; ++c) g.channel_gain.push_back(normal(rng) / std::sqrt(cfg.channels));
        g.freq = (0.08 + 0.17 * unit(rng)) / scale;
        const double theta = std::numbers::pi * unit(rng);
        g.cos_t = std::cos(theta);
        g.sin_t = std::sin(theta);
        g.phase = 2.0 * std::numbers::pi * unit(rng);
        g.cx = (8.0 + 16.0 * unit(rng)) * scale;
        g.cy = (8.0 + 16.0 * unit(rng)) * scale;
        const double s = (4.0 + 4.0 * unit(rng)) * scale;
        g.inv_two_s2 = 1.0 / (2.0 * s * s);
    }
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(cfg.classes));
    for (auto& c : centers)
        for (int b = 0; b < cfg.latent_dim; ++b) c.push_back(normal(rng));

    DataSplit split;
    split.train = render(cfg, gratings, centers, cfg.n_train, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    split.test = render(cfg, gratings, centers, cfg.n_test, cfg.seed ^ 0xc2b2ae3d27d4eb4fULL);
    return split;
}

Dataset load_image_csv(const std::string& path, int channels, int side, int classes) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset '" + path + "'");
    const std::size_t expected = static_cast<std::size_t>(channels) * side * side;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> values;
        int label = -1;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                if (first) {
                    label = std::stoi(cell, &used);
                } else {
                    values.push_back(std::stod(cell, &used));
                }
            } catch (const std::exception&) {
                throw ParseError(lineno, "cannot parse value '" + cell + "'");
            }
            first = false;
        }
        if (label < 0 || label >= classes) throw ParseError(lineno, "label out of range");
        if (values.size() != expected)
            throw ParseError(lineno, "expected " + std::to_string(expected) + " pixel values, got " +
                                         std::to_string(values.size()));
        rows.push_back(std::move(values));
        labels.push_back(label);
    }
    Dataset d;
    d.classes = classes;
    d.images = Tensor(static_cast<int>(rows.size()), channels, side, side);
    for (std::size_t i = 0; i < rows.size(); ++i)
        std::copy(rows[i].begin(), rows[i].end(), d.images.sample(static_cast<int>(i)).begin());
    d.labels = std::move(labels);
    return d;
}

}  // namespace cnas
