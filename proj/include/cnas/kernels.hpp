#pragma once

// Convolution kernels used by the elastic network.
//
// Two implementations share one interface: `reference` is a direct serial
// transcription kept as a test oracle, `parallel` is the OpenMP version used
// for training. Forward kernels accumulate every output element in the same
// order as the reference and are bit-identical to it; backward kernels
// reorder some reductions and agree to rounding.
//
// Weight pointers address the *stored* (maximal) tensors; the `*_stride`
// and `kmax` arguments describe the stored extents, the remaining extents
// describe the active slice. Gradient outputs accumulate (+=).

#include "cnas/tensor.hpp"

namespace cnas::kernels {

// out[n,o,p] = sum_i w[o*w_stride + i] * in[n,i,p], o < cout, i < in.c.
#define CNAS_KERNEL_DECLS                                                                              \
    void pointwise_forward(const Tensor& in, const double* w, int w_stride, int cout, Tensor& out);     \
    void pointwise_backward(const Tensor& in, const double* w, int w_stride, const Tensor& grad_out,    \
                            Tensor* grad_in, double* grad_w);                                           \
    /* Depthwise k x k conv with the centered sub-kernel of a kmax x kmax store, padding k/2. */        \
    void depthwise_forward(const Tensor& in, const double* w, int kmax, int k, int stride, Tensor& out); \
    void depthwise_backward(const Tensor& in, const double* w, int kmax, int k, int stride,             \
                            const Tensor& grad_out, Tensor* grad_in, double* grad_w);                   \
    /* Dense conv, weights [cout][cin][k][k], padding k/2. */                                           \
    void conv_forward(const Tensor& in, const double* w, int cout, int k, int stride, Tensor& out);     \
    void conv_backward(const Tensor& in, const double* w, int k, int stride, const Tensor& grad_out,    \
                       Tensor* grad_in, double* grad_w);                                                \
    /* y = s[c]*x + b[c], followed by max(0, .) when relu is set. */                                    \
    void affine_forward(const Tensor& x, const double* scale, const double* bias, bool relu, Tensor& y); \
    /* grad_x may alias grad_y. */                                                                      \
    void affine_backward(const Tensor& x, const Tensor& y, const double* scale, bool relu,              \
                         const Tensor& grad_y, Tensor& grad_x, double* grad_scale, double* grad_bias);

namespace reference {
CNAS_KERNEL_DECLS
}

namespace parallel {
CNAS_KERNEL_DECLS
}

#undef CNAS_KERNEL_DECLS

// Output side length of a conv with the given kernel and stride, padding k/2.
inline int conv_out_side(int in_side, int k, int stride) { return (in_side + 2 * (k / 2) - k) / stride + 1; }

}  // namespace cnas::kernels
