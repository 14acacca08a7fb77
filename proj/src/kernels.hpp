#pragma once

// Tensor-level compute kernels behind the differentiable ops. Single
// threaded with a fixed reduction order, so results are bitwise
// reproducible.

#include "dragan/tensor.hpp"

namespace dragan::kernels {

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad);

template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& g, const Tensor<T>& w, int stride, int pad, int64_t in_h,
                            int64_t in_w);

template <typename T>
Tensor<T> conv2d_weight_grad(const Tensor<T>& x, const Tensor<T>& g, int stride, int pad, int64_t kh,
                             int64_t kw);

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int64_t out_h, int64_t out_w);

template <typename T>
Tensor<T> resize_bilinear_adjoint(const Tensor<T>& g, int64_t in_h, int64_t in_w);

/// [M,K] x [K,N] -> [M,N].
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

int64_t conv_out_extent(int64_t in, int64_t k, int stride, int pad);

}  // namespace dragan::kernels
