#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cnas/elastic_net.hpp"

namespace fixtures {

// Two blocks, every elastic dimension live, small enough for finite differences.
inline cnas::BaseArchConfig micro_base() {
    cnas::BaseArchConfig b;
    b.input_channels = 2;
    b.input_side = 8;
    b.stem_channels = 4;
    b.stem_stride = 1;
    b.block_channels = {4, 6};
    b.block_strides = {1, 2};
    b.classes = 3;
    return b;
}

inline cnas::SearchSpaceDef micro_space() {
    cnas::SearchSpaceDef s;
    s.blocks = 2;
    s.levels = {{1, 2}, {1.0, 2.0}, {3, 5}};
    s.coupling = cnas::Coupling::Independent;
    s.kernel_mode = cnas::KernelMode::elastic();
    s.resolutions = {8};
    return s;
}

inline cnas::Tensor random_batch(int n, int c, int side, std::uint64_t seed) {
    cnas::Tensor t(n, c, side, side);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (double& v : t.data) v = g(rng);
    return t;
}

// Moves scales and biases off their 1/0 initialization so every parameter
// kind influences the loss.
inline void jitter(cnas::SupernetParams& p, std::uint64_t seed, double amount = 0.3) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-amount, amount);
    for (const auto& t : p.layout.tensors)
        if (t.name.ends_with(".scale") || t.name.ends_with(".bias"))
            for (std::size_t i = 0; i < t.size; ++i) p.values[t.offset + i] += u(rng);
}

struct FdResult {
    double max_rel_error = 0.0;
    int checked = 0;
};

// Central differences of the mean loss against the analytic gradient at
// `count` random parameters read by the view. Parameters whose analytic
// and numeric derivatives are both below `floor` are redrawn, since their
// relative error is dominated by rounding.
inline FdResult finite_difference_check(cnas::SupernetParams& p, const cnas::ArchSpec& arch, const cnas::Tensor& batch,
                                        const std::vector<int>& labels, const cnas::Matrix* teacher,
                                        const cnas::KdConfig& kd, int count, std::uint64_t seed,
                                        double h = 1e-6, double floor = 1e-7) {
    const cnas::SubnetView view = cnas::slice_subnet(p, arch);
    std::vector<double> grad(p.size(), 0.0);
    std::vector<std::uint8_t> touched(p.size(), 0);
    cnas::loss_and_gradient(view, batch, labels, teacher, kd, &grad, 1.0, &touched);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (touched[i]) candidates.push_back(i);
    std::mt19937_64 rng(seed);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    FdResult r;
    for (std::size_t idx : candidates) {
        if (r.checked == count) break;
        const double orig = p.values[idx];
        p.values[idx] = orig + h;
        const double up = cnas::loss_and_gradient(view, batch, labels, teacher, kd, nullptr);
        p.values[idx] = orig - h;
        const double down = cnas::loss_and_gradient(view, batch, labels, teacher, kd, nullptr);
        p.values[idx] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double scale = std::max(std::abs(fd), std::abs(grad[idx]));
        if (scale < floor) continue;
        r.max_rel_error = std::max(r.max_rel_error, std::abs(fd - grad[idx]) / scale);
        ++r.checked;
    }
    return r;
}

}  // namespace fixtures
