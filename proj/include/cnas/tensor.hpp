#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cnas {

// Dense NCHW batch of feature maps, 64-bit floats.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(size_of(n_, c_, h_, w_), 0.0) {}

    static std::size_t size_of(int n, int c, int h, int w) {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t size() const { return data.size(); }
    std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }

    double* channel(int ni, int ci) { return data.data() + (static_cast<std::size_t>(ni) * c + ci) * plane(); }
    const double* channel(int ni, int ci) const {
        return data.data() + (static_cast<std::size_t>(ni) * c + ci) * plane();
    }
    double& at(int ni, int ci, int y, int x) { return channel(ni, ci)[y * w + x]; }
    double at(int ni, int ci, int y, int x) const { return channel(ni, ci)[y * w + x]; }

    std::span<double> sample(int ni) {
        return {data.data() + static_cast<std::size_t>(ni) * c * plane(), static_cast<std::size_t>(c) * plane()};
    }
    std::span<const double> sample(int ni) const {
        return {data.data() + static_cast<std::size_t>(ni) * c * plane(), static_cast<std::size_t>(c) * plane()};
    }
};

// Row-major score matrix (batch rows × class columns).
struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}
    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::span<const double> row(int r) const { return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
};

// Bilinear resize of every channel to side × side (align-corners off).
// Returns a copy when the size already matches.
Tensor resize_bilinear(const Tensor& in, int side);

// Copies the selected samples, in order, into a new batch.
Tensor gather_samples(const Tensor& in, std::span<const std::size_t> indices);

}  // namespace cnas
