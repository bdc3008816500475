#include "cnas/kernels.hpp"

namespace cnas::kernels::reference {

void pointwise_forward(const Tensor& in, const double* w, int w_stride, int cout, Tensor& out) {
    out = Tensor(in.n, cout, in.h, in.w);
    const auto P = static_cast<int>(in.plane());
    for (int n = 0; n < in.n; ++n)
        for (int o = 0; o < cout; ++o)
            for (int p = 0; p < P; ++p) {
                double acc = 0.0;
                for (int i = 0; i < in.c; ++i) acc += w[o * w_stride + i] * in.channel(n, i)[p];
                out.channel(n, o)[p] = acc;
            }
}

void pointwise_backward(const Tensor& in, const double* w, int w_stride, const Tensor& grad_out, Tensor* grad_in,
                        double* grad_w) {
    const auto P = static_cast<int>(in.plane());
    const int cout = grad_out.c;
    if (grad_in) {
        *grad_in = Tensor(in.n, in.c, in.h, in.w);
        for (int n = 0; n < in.n; ++n)
            for (int i = 0; i < in.c; ++i)
                for (int p = 0; p < P; ++p) {
                    double acc = 0.0;
                    for (int o = 0; o < cout; ++o) acc += w[o * w_stride + i] * grad_out.channel(n, o)[p];
                    grad_in->channel(n, i)[p] = acc;
                }
    }
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < in.c; ++i) {
            double acc = 0.0;
            for (int n = 0; n < in.n; ++n)
                for (int p = 0; p < P; ++p) acc += grad_out.channel(n, o)[p] * in.channel(n, i)[p];
            grad_w[o * w_stride + i] += acc;
        }
}

void depthwise_forward(const Tensor& in, const double* w, int kmax, int k, int stride, Tensor& out) {
    const int pad = k / 2, off = (kmax - k) / 2;
    const int oh = conv_out_side(in.h, k, stride), ow = conv_out_side(in.w, k, stride);
    out = Tensor(in.n, in.c, oh, ow);
    for (int n = 0; n < in.n; ++n)
        for (int c = 0; c < in.c; ++c) {
            const double* wc = w + static_cast<std::size_t>(c) * kmax * kmax;
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                            acc += wc[(ky + off) * kmax + kx + off] * in.at(n, c, iy, ix);
                        }
                    out.at(n, c, oy, ox) = acc;
                }
        }
}

void depthwise_backward(const Tensor& in, const double* w, int kmax, int k, int stride, const Tensor& grad_out,
                        Tensor* grad_in, double* grad_w) {
    const int pad = k / 2, off = (kmax - k) / 2;
    if (grad_in) *grad_in = Tensor(in.n, in.c, in.h, in.w);
    for (int c = 0; c < in.c; ++c) {
        const double* wc = w + static_cast<std::size_t>(c) * kmax * kmax;
        double* gwc = grad_w + static_cast<std::size_t>(c) * kmax * kmax;
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                double acc = 0.0;
                for (int n = 0; n < in.n; ++n)
                    for (int oy = 0; oy < grad_out.h; ++oy)
                        for (int ox = 0; ox < grad_out.w; ++ox) {
                            const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                            acc += grad_out.at(n, c, oy, ox) * in.at(n, c, iy, ix);
                        }
                gwc[(ky + off) * kmax + kx + off] += acc;
            }
        if (!grad_in) continue;
        for (int n = 0; n < in.n; ++n)
            for (int oy = 0; oy < grad_out.h; ++oy)
                for (int ox = 0; ox < grad_out.w; ++ox) {
                    const double g = grad_out.at(n, c, oy, ox);
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                            if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                            grad_in->at(n, c, iy, ix) += g * wc[(ky + off) * kmax + kx + off];
                        }
                }
    }
}

void conv_forward(const Tensor& in, const double* w, int cout, int k, int stride, Tensor& out) {
    const int pad = k / 2;
    const int oh = conv_out_side(in.h, k, stride), ow = conv_out_side(in.w, k, stride);
    out = Tensor(in.n, cout, oh, ow);
    for (int n = 0; n < in.n; ++n)
        for (int o = 0; o < cout; ++o)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox) {
                    double acc = 0.0;
                    for (int i = 0; i < in.c; ++i)
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                                acc += w[((o * in.c + i) * k + ky) * k + kx] * in.at(n, i, iy, ix);
                            }
                    out.at(n, o, oy, ox) = acc;
                }
}

void conv_backward(const Tensor& in, const double* w, int k, int stride, const Tensor& grad_out, Tensor* grad_in,
                   double* grad_w) {
    const int pad = k / 2;
    const int cout = grad_out.c;
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < in.c; ++i)
            for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                    double acc = 0.0;
                    for (int n = 0; n < in.n; ++n)
                        for (int oy = 0; oy < grad_out.h; ++oy)
                            for (int ox = 0; ox < grad_out.w; ++ox) {
                                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                                acc += grad_out.at(n, o, oy, ox) * in.at(n, i, iy, ix);
                            }
                    grad_w[((o * in.c + i) * k + ky) * k + kx] += acc;
                }
    if (!grad_in) return;
    *grad_in = Tensor(in.n, in.c, in.h, in.w);
    for (int n = 0; n < in.n; ++n)
        for (int i = 0; i < in.c; ++i)
            for (int o = 0; o < cout; ++o)
                for (int oy = 0; oy < grad_out.h; ++oy)
                    for (int ox = 0; ox < grad_out.w; ++ox) {
                        const double g = grad_out.at(n, o, oy, ox);
                        for (int ky = 0; ky < k; ++ky)
                            for (int kx = 0; kx < k; ++kx) {
                                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                                if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
                                grad_in->at(n, i, iy, ix) += g * w[((o * in.c + i) * k + ky) * k + kx];
                            }
                    }
}

void affine_forward(const Tensor& x, const double* scale, const double* bias, bool relu, Tensor& y) {
    y = Tensor(x.n, x.c, x.h, x.w);
    const auto P = x.plane();
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c)
            for (std::size_t p = 0; p < P; ++p) {
                const double v = scale[c] * x.channel(n, c)[p] + bias[c];
                y.channel(n, c)[p] = relu && v < 0.0 ? 0.0 : v;
            }
}

void affine_backward(const Tensor& x, const Tensor& y, const double* scale, bool relu, const Tensor& grad_y,
                     Tensor& grad_x, double* grad_scale, double* grad_bias) {
    if (&grad_x != &grad_y) grad_x = Tensor(x.n, x.c, x.h, x.w);
    const auto P = x.plane();
    for (int c = 0; c < x.c; ++c) {
        double gs = 0.0, gb = 0.0;
        for (int n = 0; n < x.n; ++n)
            for (std::size_t p = 0; p < P; ++p) {
                double g = grad_y.channel(n, c)[p];
                if (relu && !(y.channel(n, c)[p] > 0.0)) g = 0.0;
                gs += g * x.channel(n, c)[p];
                gb += g;
                grad_x.channel(n, c)[p] = g * scale[c];
            }
        grad_scale[c] += gs;
        grad_bias[c] += gb;
    }
}

}  // namespace cnas::kernels::reference
