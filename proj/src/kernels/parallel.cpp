#include <algorithm>
#include <vector>

#include "cnas/kernels.hpp"

// Forward kernels reproduce the reference accumulation order exactly.
// Backward kernels reorder reductions for vectorization; each output is
// still owned by a single iteration, so results do not depend on the
// thread count.

namespace cnas::kernels::parallel {

namespace {

// Four interleaved partial sums, combined in a fixed order.
inline double dot(const double* __restrict a, const double* __restrict b, int len) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int p = 0;
    for (; p + 4 <= len; p += 4) {
        s0 += a[p] * b[p];
        s1 += a[p + 1] * b[p + 1];
        s2 += a[p + 2] * b[p + 2];
        s3 += a[p + 3] * b[p + 3];
    }
    for (; p < len; ++p) s0 += a[p] * b[p];
    return (s0 + s1) + (s2 + s3);
}

inline void axpy(double a, const double* __restrict x, double* __restrict y, int len) {
    for (int p = 0; p < len; ++p) y[p] += a * x[p];
}

}  // namespace

void pointwise_forward(const Tensor& in, const double* w, int w_stride, int cout, Tensor& out) {
    out = Tensor(in.n, cout, in.h, in.w);
    const auto P = static_cast<int>(in.plane());
    const int N = in.n, cin = in.c;
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < cout; ++o) {
            double* dst = out.channel(n, o);
            for (int i = 0; i < cin; ++i) axpy(w[o * w_stride + i], in.channel(n, i), dst, P);
        }
}

void pointwise_backward(const Tensor& in, const double* w, int w_stride, const Tensor& grad_out, Tensor* grad_in,
                        double* grad_w) {
    const auto P = static_cast<int>(in.plane());
    const int N = in.n, cin = in.c, cout = grad_out.c;
    if (grad_in) {
        *grad_in = Tensor(N, cin, in.h, in.w);
#pragma omp parallel for collapse(2) schedule(static)
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < cin; ++i) {
                double* dst = grad_in->channel(n, i);
                for (int o = 0; o < cout; ++o) axpy(w[o * w_stride + i], grad_out.channel(n, o), dst, P);
            }
    }
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < cin; ++i) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n) acc += dot(grad_out.channel(n, o), in.channel(n, i), P);
            grad_w[o * w_stride + i] += acc;
        }
}

// Copies one channel into a zero-bordered scratch plane.
inline void pad_plane(const double* src, int h, int w, int pad, std::vector<double>& dst) {
    const int pw = w + 2 * pad;
    dst.assign(static_cast<std::size_t>(h + 2 * pad) * pw, 0.0);
    for (int y = 0; y < h; ++y) std::copy_n(src + y * w, w, dst.data() + (y + pad) * pw + pad);
}

void depthwise_forward(const Tensor& in, const double* w, int kmax, int k, int stride, Tensor& out) {
    const int pad = k / 2, off = (kmax - k) / 2;
    const int oh = conv_out_side(in.h, k, stride), ow = conv_out_side(in.w, k, stride);
    out = Tensor(in.n, in.c, oh, ow);
    const int N = in.n, C = in.c, ih = in.h, iw = in.w, pw = iw + 2 * pad;
#pragma omp parallel
    {
        std::vector<double> padded;
#pragma omp for collapse(2) schedule(static)
        for (int n = 0; n < N; ++n)
            for (int c = 0; c < C; ++c) {
                const double* wc = w + static_cast<std::size_t>(c) * kmax * kmax;
                pad_plane(in.channel(n, c), ih, iw, pad, padded);
                double* dst = out.channel(n, c);
                for (int oy = 0; oy < oh; ++oy) {
                    double* __restrict drow = dst + oy * ow;
                    for (int ky = 0; ky < k; ++ky) {
                        const double* prow = padded.data() + (oy * stride + ky) * pw;
                        for (int kx = 0; kx < k; ++kx) {
                            const double wv = wc[(ky + off) * kmax + kx + off];
                            const double* __restrict src = prow + kx;
                            if (stride == 1)
                                for (int ox = 0; ox < ow; ++ox) drow[ox] += wv * src[ox];
                            else
                                for (int ox = 0; ox < ow; ++ox) drow[ox] += wv * src[ox * stride];
                        }
                    }
                }
            }
    }
}

void depthwise_backward(const Tensor& in, const double* w, int kmax, int k, int stride, const Tensor& grad_out,
                        Tensor* grad_in, double* grad_w) {
    const int pad = k / 2, off = (kmax - k) / 2;
    const int N = in.n, C = in.c, ih = in.h, iw = in.w, oh = grad_out.h, ow = grad_out.w;
    const int pw = iw + 2 * pad, ph = ih + 2 * pad;
    if (grad_in) *grad_in = Tensor(N, C, ih, iw);
#pragma omp parallel
    {
        std::vector<double> padded, gpad;
        std::vector<double> acc(static_cast<std::size_t>(k) * k);
#pragma omp for schedule(static)
        for (int c = 0; c < C; ++c) {
            const double* wc = w + static_cast<std::size_t>(c) * kmax * kmax;
            double* gwc = grad_w + static_cast<std::size_t>(c) * kmax * kmax;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int n = 0; n < N; ++n) {
                pad_plane(in.channel(n, c), ih, iw, pad, padded);
                const double* g = grad_out.channel(n, c);
                if (grad_in) gpad.assign(static_cast<std::size_t>(ph) * pw, 0.0);
                for (int oy = 0; oy < oh; ++oy) {
                    const double* __restrict grow = g + oy * ow;
                    for (int ky = 0; ky < k; ++ky) {
                        const int prow = (oy * stride + ky) * pw;
                        for (int kx = 0; kx < k; ++kx) {
                            const double* __restrict src = padded.data() + prow + kx;
                            double& a = acc[static_cast<std::size_t>(ky * k + kx)];
                            if (stride == 1) {
                                a += dot(grow, src, ow);
                                if (grad_in)
                                    axpy(wc[(ky + off) * kmax + kx + off], grow, gpad.data() + prow + kx, ow);
                            } else {
                                const double wv = wc[(ky + off) * kmax + kx + off];
                                double* gp = gpad.data() + prow + kx;
                                for (int ox = 0; ox < ow; ++ox) {
                                    a += grow[ox] * src[ox * stride];
                                    if (grad_in) gp[ox * stride] += wv * grow[ox];
                                }
                            }
                        }
                    }
                }
                if (grad_in) {
                    double* gi = grad_in->channel(n, c);
                    for (int y = 0; y < ih; ++y) std::copy_n(gpad.data() + (y + pad) * pw + pad, iw, gi + y * iw);
                }
            }
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) gwc[(ky + off) * kmax + kx + off] += acc[static_cast<std::size_t>(ky * k + kx)];
        }
    }
}

void conv_forward(const Tensor& in, const double* w, int cout, int k, int stride, Tensor& out) {
    const int pad = k / 2;
    const int oh = conv_out_side(in.h, k, stride), ow = conv_out_side(in.w, k, stride);
    out = Tensor(in.n, cout, oh, ow);
    const int N = in.n, cin = in.c;
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n)
        for (int o = 0; o < cout; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int i = 0; i < cin; ++i)
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                acc += w[((o * cin + i) * k + ky) * k + kx] * in.at(n, i, iy, ix);
                            }
                        }
                    out.at(n, o, oy, ox) = acc;
                }
}

void conv_backward(const Tensor& in, const double* w, int k, int stride, const Tensor& grad_out, Tensor* grad_in,
                   double* grad_w) {
    const int pad = k / 2;
    const int N = in.n, cin = in.c, cout = grad_out.c, oh = grad_out.h, ow = grad_out.w;
#pragma omp parallel for collapse(2) schedule(static)
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < cin; ++i)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int n = 0; n < N; ++n)
                        for (int oy = 0; oy < oh; ++oy) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                acc += grad_out.at(n, o, oy, ox) * in.at(n, i, iy, ix);
                            }
                        }
                    grad_w[((o * cin + i) * k + ky) * k + kx] += acc;
                }
    if (!grad_in) return;
    *grad_in = Tensor(N, cin, in.h, in.w);
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < cin; ++i)
            for (int o = 0; o < cout; ++o)
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        const double g = grad_out.at(n, o, oy, ox);
                        for (int ky = 0; ky < k; ++ky) {
                            const int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                const int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                grad_in->at(n, i, iy, ix) += g * w[((o * cin + i) * k + ky) * k + kx];
                            }
                        }
                    }
}

void affine_forward(const Tensor& x, const double* scale, const double* bias, bool relu, Tensor& y) {
    y = Tensor(x.n, x.c, x.h, x.w);
    const auto P = static_cast<int>(x.plane());
    const int N = x.n, C = x.c;
#pragma omp parallel for collapse(2) schedule(static)
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const double* src = x.channel(n, c);
            double* dst = y.channel(n, c);
            const double s = scale[c], b = bias[c];
            if (relu)
                for (int p = 0; p < P; ++p) dst[p] = std::max(s * src[p] + b, 0.0);
            else
                for (int p = 0; p < P; ++p) dst[p] = s * src[p] + b;
        }
}

void affine_backward(const Tensor& x, const Tensor& y, const double* scale, bool relu, const Tensor& grad_y,
                     Tensor& grad_x, double* grad_scale, double* grad_bias) {
    if (&grad_x != &grad_y) grad_x = Tensor(x.n, x.c, x.h, x.w);
    const auto P = static_cast<int>(x.plane());
    const int N = x.n, C = x.c;
#pragma omp parallel for schedule(static)
    for (int c = 0; c < C; ++c) {
        double gs = 0.0, gb = 0.0;
        for (int n = 0; n < N; ++n) {
            const double* g = grad_y.channel(n, c);
            const double* xv = x.channel(n, c);
            const double* yv = y.channel(n, c);
            double* gx = grad_x.channel(n, c);
            for (int p = 0; p < P; ++p) {
                const double gm = (!relu || yv[p] > 0.0) ? g[p] : 0.0;
                gs += gm * xv[p];
                gb += gm;
                gx[p] = gm * scale[c];
            }
        }
        grad_scale[c] += gs;
        grad_bias[c] += gb;
    }
}

}  // namespace cnas::kernels::parallel
