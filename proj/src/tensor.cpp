#include "cnas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace cnas {

Tensor resize_bilinear(const Tensor& in, int side) {
    if (in.h == side && in.w == side) return in;
    Tensor out(in.n, in.c, side, side);
    const double sy = static_cast<double>(in.h) / side, sx = static_cast<double>(in.w) / side;
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            const double* src = in.channel(n, c);
            double* dst = out.channel(n, c);
            for (int y = 0; y < side; ++y) {
                const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, in.h - 1.0);
                const int y0 = static_cast<int>(fy), y1 = std::min(y0 + 1, in.h - 1);
                const double ty = fy - y0;
                for (int x = 0; x < side; ++x) {
                    const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, in.w - 1.0);
                    const int x0 = static_cast<int>(fx), x1 = std::min(x0 + 1, in.w - 1);
                    const double tx = fx - x0;
                    const double top = src[y0 * in.w + x0] * (1 - tx) + src[y0 * in.w + x1] * tx;
                    const double bot = src[y1 * in.w + x0] * (1 - tx) + src[y1 * in.w + x1] * tx;
                    dst[y * side + x] = top * (1 - ty) + bot * ty;
                }
            }
        }
    return out;
}

Tensor gather_samples(const Tensor& in, std::span<const std::size_t> indices) {
    Tensor out(static_cast<int>(indices.size()), in.c, in.h, in.w);
    const std::size_t stride = static_cast<std::size_t>(in.c) * in.plane();
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::memcpy(out.data.data() + i * stride, in.data.data() + indices[i] * stride, stride * sizeof(double));
    return out;
}

}  // namespace cnas
