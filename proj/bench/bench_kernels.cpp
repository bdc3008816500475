// Reference vs OpenMP kernels on layer shapes of the toy supernet at a
// 32 px input, batch 64.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cnas/elastic_net.hpp"
#include "cnas/kernels.hpp"

namespace {

using namespace cnas;

Tensor random_tensor(int n, int c, int h, int w, unsigned seed) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : t.data) v = u(rng);
    return t;
}

std::vector<double> random_vec(std::size_t n, unsigned seed) {
    std::vector<double> v(n);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : v) x = u(rng);
    return v;
}

// Args: channels in, channels out, side.
template <bool Parallel>
void BM_PointwiseForward(benchmark::State& state) {
    const int cin = static_cast<int>(state.range(0)), cout = static_cast<int>(state.range(1));
    const int side = static_cast<int>(state.range(2));
    const Tensor x = random_tensor(64, cin, side, side, 1);
    const auto w = random_vec(static_cast<std::size_t>(cin) * cout, 2);
    Tensor y;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::pointwise_forward(x, w.data(), cin, cout, y);
        else
            kernels::reference::pointwise_forward(x, w.data(), cin, cout, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()) * cout);
}

template <bool Parallel>
void BM_PointwiseBackward(benchmark::State& state) {
    const int cin = static_cast<int>(state.range(0)), cout = static_cast<int>(state.range(1));
    const int side = static_cast<int>(state.range(2));
    const Tensor x = random_tensor(64, cin, side, side, 1);
    const Tensor g = random_tensor(64, cout, side, side, 3);
    const auto w = random_vec(static_cast<std::size_t>(cin) * cout, 2);
    std::vector<double> gw(w.size());
    Tensor gx;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::pointwise_backward(x, w.data(), cin, g, &gx, gw.data());
        else
            kernels::reference::pointwise_backward(x, w.data(), cin, g, &gx, gw.data());
        benchmark::DoNotOptimize(gx.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * static_cast<std::int64_t>(x.size()) * cout);
}

// Args: channels, kernel, stride, side.
template <bool Parallel>
void BM_DepthwiseForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
    const int stride = static_cast<int>(state.range(2)), side = static_cast<int>(state.range(3));
    const Tensor x = random_tensor(64, c, side, side, 1);
    const auto w = random_vec(static_cast<std::size_t>(c) * 49, 2);
    Tensor y;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::depthwise_forward(x, w.data(), 7, k, stride, y);
        else
            kernels::reference::depthwise_forward(x, w.data(), 7, k, stride, y);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.size()) * k * k);
}

template <bool Parallel>
void BM_DepthwiseBackward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1));
    const int stride = static_cast<int>(state.range(2)), side = static_cast<int>(state.range(3));
    const Tensor x = random_tensor(64, c, side, side, 1);
    const int os = kernels::conv_out_side(side, k, stride);
    const Tensor g = random_tensor(64, c, os, os, 3);
    const auto w = random_vec(static_cast<std::size_t>(c) * 49, 2);
    std::vector<double> gw(w.size());
    Tensor gx;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::depthwise_backward(x, w.data(), 7, k, stride, g, &gx, gw.data());
        else
            kernels::reference::depthwise_backward(x, w.data(), 7, k, stride, g, &gx, gw.data());
        benchmark::DoNotOptimize(gx.data.data());
    }
    state.SetItemsProcessed(state.iterations() * 2 * static_cast<std::int64_t>(g.size()) * k * k);
}

template <bool Parallel>
void BM_StemForward(benchmark::State& state) {
    const Tensor x = random_tensor(64, 3, 32, 32, 1);
    const auto w = random_vec(8 * 3 * 9, 2);
    Tensor y;
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::conv_forward(x, w.data(), 8, 3, 2, y);
        else
            kernels::reference::conv_forward(x, w.data(), 8, 3, 2, y);
        benchmark::DoNotOptimize(y.data.data());
    }
}

template <bool Parallel>
void BM_StemBackward(benchmark::State& state) {
    const Tensor x = random_tensor(64, 3, 32, 32, 1);
    const Tensor g = random_tensor(64, 8, 16, 16, 3);
    const auto w = random_vec(8 * 3 * 9, 2);
    std::vector<double> gw(w.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::parallel::conv_backward(x, w.data(), 3, 2, g, nullptr, gw.data());
        else
            kernels::reference::conv_backward(x, w.data(), 3, 2, g, nullptr, gw.data());
        benchmark::DoNotOptimize(gw.data());
    }
}

// One SGD step of the largest toy subnetwork (kernels from parallel).
void BM_TrainStepMax(benchmark::State& state) {
    const auto space = compound_fixed_space(3);
    const auto side = static_cast<int>(state.range(0));
    SearchSpaceDef s = space;
    s.resolutions = {side};
    auto params = build_supernet(BaseArchConfig::toy(), s, 1);
    auto sgd = SgdState::for_params(params);
    const Tensor x = random_tensor(64, 3, side, side, 4);
    std::vector<int> labels(64);
    for (int i = 0; i < 64; ++i) labels[static_cast<std::size_t>(i)] = i % 10;
    const std::vector<ArchSpec> archs{max_arch(s)};
    for (auto _ : state) benchmark::DoNotOptimize(train_step(params, sgd, archs, x, labels, nullptr, 1e-3, {}));
}

#define KERNEL_PAIR(name, ...)                                                         \
    BENCHMARK_TEMPLATE(name, false)->Name(#name "/reference")->__VA_ARGS__;            \
    BENCHMARK_TEMPLATE(name, true)->Name(#name "/parallel")->__VA_ARGS__

KERNEL_PAIR(BM_PointwiseForward, Args({8, 48, 16})->Args({144, 24, 4})->Unit(benchmark::kMillisecond));
KERNEL_PAIR(BM_PointwiseBackward, Args({8, 48, 16})->Args({144, 24, 4})->Unit(benchmark::kMillisecond));
KERNEL_PAIR(BM_DepthwiseForward, Args({48, 3, 1, 16})->Args({48, 7, 2, 16})->Args({144, 3, 1, 4})->Unit(benchmark::kMillisecond));
KERNEL_PAIR(BM_DepthwiseBackward, Args({48, 3, 1, 16})->Args({48, 7, 2, 16})->Args({144, 3, 1, 4})->Unit(benchmark::kMillisecond));
KERNEL_PAIR(BM_StemForward, Unit(benchmark::kMillisecond));
KERNEL_PAIR(BM_StemBackward, Unit(benchmark::kMillisecond));
BENCHMARK(BM_TrainStepMax)->Arg(32)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
