#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cnas/kernels.hpp"

using namespace cnas;
namespace ref = cnas::kernels::reference;
namespace par = cnas::kernels::parallel;

namespace {

Tensor random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor t(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (double& v : t.data) v = g(rng);
    return t;
}

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (double& x : v) x = g(rng);
    return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]) / (1.0 + std::abs(b[i])));
    return m;
}

constexpr double kBackwardTol = 1e-12;

}  // namespace

TEST(Kernels, PointwiseParity) {
    const Tensor in = random_tensor(3, 5, 7, 6, 1);
    const int stride = 9, cout = 4;
    const auto w = random_vec(static_cast<std::size_t>(cout) * stride, 2);
    Tensor a(3, cout, 7, 6), b(3, cout, 7, 6);
    ref::pointwise_forward(in, w.data(), stride, cout, a);
    par::pointwise_forward(in, w.data(), stride, cout, b);
    EXPECT_EQ(a.data, b.data);

    const Tensor go = random_tensor(3, cout, 7, 6, 3);
    Tensor gi_a(3, 5, 7, 6), gi_b(3, 5, 7, 6);
    std::vector<double> gw_a(w.size(), 0.0), gw_b(w.size(), 0.0);
    ref::pointwise_backward(in, w.data(), stride, go, &gi_a, gw_a.data());
    par::pointwise_backward(in, w.data(), stride, go, &gi_b, gw_b.data());
    EXPECT_LE(max_rel(gi_b.data, gi_a.data), kBackwardTol);
    EXPECT_LE(max_rel(gw_b, gw_a), kBackwardTol);
    // Unused weight columns stay untouched.
    for (int o = 0; o < cout; ++o)
        for (int i = 5; i < stride; ++i) EXPECT_EQ(gw_b[static_cast<std::size_t>(o * stride + i)], 0.0);
}

TEST(Kernels, PointwiseMatchesNaiveSum) {
    const Tensor in = random_tensor(1, 2, 4, 4, 4);
    const std::vector<double> w{1.0, 2.0, -1.0, 0.5, 0.0, 3.0};  // 3 x 2
    Tensor out(1, 3, 4, 4);
    ref::pointwise_forward(in, w.data(), 2, 3, out);
    for (int o = 0; o < 3; ++o)
        for (int p = 0; p < 16; ++p)
            EXPECT_DOUBLE_EQ(out.channel(0, o)[p], w[o * 2] * in.channel(0, 0)[p] + w[o * 2 + 1] * in.channel(0, 1)[p]);
}

class DepthwiseParity : public ::testing::TestWithParam<std::tuple<int, int, int>> {};

TEST_P(DepthwiseParity, ForwardExactBackwardClose) {
    const auto [k, stride, side] = GetParam();
    const int kmax = 7;
    const Tensor in = random_tensor(2, 4, side, side, 10 + k);
    const auto w = random_vec(static_cast<std::size_t>(4 * kmax * kmax), 20 + k);
    const int os = kernels::conv_out_side(side, k, stride);
    Tensor a(2, 4, os, os), b(2, 4, os, os);
    ref::depthwise_forward(in, w.data(), kmax, k, stride, a);
    par::depthwise_forward(in, w.data(), kmax, k, stride, b);
    EXPECT_EQ(a.data, b.data);

    const Tensor go = random_tensor(2, 4, os, os, 30 + k);
    Tensor gi_a(2, 4, side, side), gi_b(2, 4, side, side);
    std::vector<double> gw_a(w.size(), 0.0), gw_b(w.size(), 0.0);
    ref::depthwise_backward(in, w.data(), kmax, k, stride, go, &gi_a, gw_a.data());
    par::depthwise_backward(in, w.data(), kmax, k, stride, go, &gi_b, gw_b.data());
    EXPECT_LE(max_rel(gi_b.data, gi_a.data), kBackwardTol);
    EXPECT_LE(max_rel(gw_b, gw_a), kBackwardTol);
    // Only the centered k x k window receives gradient.
    const int off = (kmax - k) / 2;
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < kmax; ++y)
            for (int x = 0; x < kmax; ++x) {
                const bool inside = y >= off && y < off + k && x >= off && x < off + k;
                if (!inside) EXPECT_EQ(gw_b[static_cast<std::size_t>((c * kmax + y) * kmax + x)], 0.0);
            }
}

INSTANTIATE_TEST_SUITE_P(Shapes, DepthwiseParity,
                         ::testing::Values(std::make_tuple(3, 1, 8), std::make_tuple(5, 1, 9), std::make_tuple(7, 1, 6),
                                           std::make_tuple(3, 2, 8), std::make_tuple(5, 2, 7), std::make_tuple(7, 2, 5),
                                           std::make_tuple(3, 1, 1), std::make_tuple(7, 2, 2)));

TEST(Kernels, DepthwiseCenterSliceEqualsSmallKernel) {
    // A 3x3 kernel embedded in the center of a zero 7x7 store gives the same
    // result as the store sliced at k = 3.
    const Tensor in = random_tensor(1, 2, 6, 6, 5);
    auto w7 = std::vector<double>(2 * 49, 0.0);
    const auto w3 = random_vec(2 * 9, 6);
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) w7[static_cast<std::size_t>((c * 7 + y + 2) * 7 + x + 2)] = w3[(c * 3 + y) * 3 + x];
    Tensor full(1, 2, 6, 6), sliced(1, 2, 6, 6), small(1, 2, 6, 6);
    ref::depthwise_forward(in, w7.data(), 7, 7, 1, full);
    ref::depthwise_forward(in, w7.data(), 7, 3, 1, sliced);
    ref::depthwise_forward(in, w3.data(), 3, 3, 1, small);
    EXPECT_EQ(sliced.data, small.data);
    for (std::size_t i = 0; i < full.data.size(); ++i) EXPECT_NEAR(full.data[i], small.data[i], 1e-12);
}

TEST(Kernels, ConvParity) {
    for (int stride : {1, 2}) {
        const Tensor in = random_tensor(2, 3, 9, 9, 40 + stride);
        const auto w = random_vec(5 * 3 * 9, 41);
        const int os = kernels::conv_out_side(9, 3, stride);
        Tensor a(2, 5, os, os), b(2, 5, os, os);
        ref::conv_forward(in, w.data(), 5, 3, stride, a);
        par::conv_forward(in, w.data(), 5, 3, stride, b);
        EXPECT_EQ(a.data, b.data);
        const Tensor go = random_tensor(2, 5, os, os, 42);
        Tensor gi_a(2, 3, 9, 9), gi_b(2, 3, 9, 9);
        std::vector<double> gw_a(w.size(), 0.0), gw_b(w.size(), 0.0);
        ref::conv_backward(in, w.data(), 3, stride, go, &gi_a, gw_a.data());
        par::conv_backward(in, w.data(), 3, stride, go, &gi_b, gw_b.data());
        EXPECT_LE(max_rel(gi_b.data, gi_a.data), kBackwardTol);
        EXPECT_LE(max_rel(gw_b, gw_a), kBackwardTol);
        // Input gradient is optional.
        std::vector<double> gw_c(w.size(), 0.0);
        par::conv_backward(in, w.data(), 3, stride, go, nullptr, gw_c.data());
        EXPECT_LE(max_rel(gw_c, gw_a), kBackwardTol);
    }
}

TEST(Kernels, AffineParity) {
    for (bool relu : {false, true}) {
        const Tensor x = random_tensor(3, 4, 5, 5, 50);
        const auto s = random_vec(4, 51), b = random_vec(4, 52);
        Tensor ya(3, 4, 5, 5), yb(3, 4, 5, 5);
        ref::affine_forward(x, s.data(), b.data(), relu, ya);
        par::affine_forward(x, s.data(), b.data(), relu, yb);
        EXPECT_EQ(ya.data, yb.data);
        if (relu)
            for (double v : ya.data) EXPECT_GE(v, 0.0);
        const Tensor gy = random_tensor(3, 4, 5, 5, 53);
        Tensor gxa(3, 4, 5, 5), gxb(3, 4, 5, 5);
        std::vector<double> gsa(4, 0.0), gba(4, 0.0), gsb(4, 0.0), gbb(4, 0.0);
        ref::affine_backward(x, ya, s.data(), relu, gy, gxa, gsa.data(), gba.data());
        par::affine_backward(x, yb, s.data(), relu, gy, gxb, gsb.data(), gbb.data());
        EXPECT_LE(max_rel(gxb.data, gxa.data), kBackwardTol);
        EXPECT_LE(max_rel(gsb, gsa), kBackwardTol);
        EXPECT_LE(max_rel(gbb, gba), kBackwardTol);
        // In-place variant.
        Tensor inplace = gy;
        std::vector<double> gs2(4, 0.0), gb2(4, 0.0);
        par::affine_backward(x, yb, s.data(), relu, inplace, inplace, gs2.data(), gb2.data());
        EXPECT_LE(max_rel(inplace.data, gxa.data), kBackwardTol);
    }
}

TEST(Kernels, ConvOutSide) {
    EXPECT_EQ(kernels::conv_out_side(32, 3, 2), 16);
    EXPECT_EQ(kernels::conv_out_side(7, 5, 2), 4);
    EXPECT_EQ(kernels::conv_out_side(8, 7, 1), 8);
    EXPECT_EQ(kernels::conv_out_side(1, 3, 2), 1);
}
