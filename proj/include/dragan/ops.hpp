#pragma once

// Differentiable ops. All of them validate shapes and throw
// std::invalid_argument on mismatch; none broadcast implicitly except where
// the name says so (expand_*, channel_expand).
//
// Each op's backward rule is expressed through ops from this header, so
// every op here supports second-order differentiation. The exceptions are
// relu/leaky_relu (second derivative taken as zero) and
// softmax_cross_entropy (first order only; used by the reference classifier).

#include <cstdint>
#include <span>
#include <vector>

#include "dragan/autodiff.hpp"

namespace dragan {

template <typename T>
Var<T> constant(Tensor<T> t) {
  return Var<T>(std::move(t), false);
}

// Elementwise ------------------------------------------------------------

template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> neg(const Var<T>& a);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
template <typename T> Var<T> add_scalar(const Var<T>& a, T shift);
template <typename T> Var<T> sigmoid(const Var<T>& a);
template <typename T> Var<T> tanh(const Var<T>& a);
template <typename T> Var<T> relu(const Var<T>& a);
template <typename T> Var<T> leaky_relu(const Var<T>& a, T slope = T(0.2));
template <typename T> Var<T> sqrt(const Var<T>& a);
template <typename T> Var<T> reciprocal(const Var<T>& a);

enum class ElementwiseKind { add, sub, mul, sigmoid, relu, leaky_relu, tanh, scale };

/// Dispatch by kind. Binary kinds need `b`; `scale` uses `factor`.
template <typename T>
Var<T> elementwise(ElementwiseKind kind, const Var<T>& a, const Var<T>& b = {}, T factor = T(1));

// Convolution -------------------------------------------------------------

struct ConvGeometry {
  int stride = 1;
  int padding = 0;
};

/// Cross-correlation of x [N,Cin,H,W] with kernel [Cout,Cin,kh,kw], plus an
/// optional per-channel bias [Cout]. kh, kw in {1,3}; stride in {1,2}.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, int stride, int padding, const Var<T>& bias = {});

/// Adjoint of conv2d with respect to its input: maps an output-shaped
/// gradient back to [N,Cin,in_h,in_w].
template <typename T>
Var<T> conv2d_input_grad(const Var<T>& grad_out, const Var<T>& kernel, ConvGeometry geom, int64_t in_h,
                         int64_t in_w);

/// Adjoint of conv2d with respect to its kernel: returns [Cout,Cin,kh,kw].
template <typename T>
Var<T> conv2d_weight_grad(const Var<T>& x, const Var<T>& grad_out, ConvGeometry geom, int64_t kh, int64_t kw);

/// Broadcasts a per-channel vector [C] to a 4-D shape with C channels.
template <typename T> Var<T> channel_expand(const Var<T>& v, const Shape& shape);
/// Sums a 4-D tensor over batch and spatial dims, giving [C].
template <typename T> Var<T> channel_sum(const Var<T>& x);

// Channel layout -----------------------------------------------------------

template <typename T> Var<T> concat_channels(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> slice_channels(const Var<T>& x, int64_t start, int64_t count);
/// Places x at channels [start, start + C) of a zero tensor with `total` channels.
template <typename T> Var<T> pad_channels(const Var<T>& x, int64_t start, int64_t total);

// Resampling ---------------------------------------------------------------

/// Bilinear resize with half-pixel centers: source = (i + 0.5) * in / out - 0.5,
/// clamped to [0, in - 1].
template <typename T> Var<T> resize_bilinear(const Var<T>& x, int64_t out_h, int64_t out_w);
/// Adjoint of resize_bilinear: scatters an [N,C,out_h,out_w] gradient to [N,C,in_h,in_w].
template <typename T> Var<T> resize_bilinear_adjoint(const Var<T>& g, int64_t in_h, int64_t in_w);

// Linear algebra ------------------------------------------------------------

template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> transpose(const Var<T>& a);

/// input [N,D] times weight [K,D] transposed, plus bias [1] (broadcast) or [K].
/// The critic head uses K = 1; no output activation.
template <typename T>
Var<T> fully_connected(const Var<T>& input, const Var<T>& weight, const Var<T>& bias);

// Shape ---------------------------------------------------------------------

template <typename T> Var<T> reshape(const Var<T>& x, const Shape& shape);
/// [N, ...] -> [N, D].
template <typename T> Var<T> flatten(const Var<T>& x);

// Reductions ----------------------------------------------------------------

enum class ReduceKind { mean, sum };

template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);
template <typename T> Var<T> reduce(ReduceKind kind, const Var<T>& x);
/// Broadcasts a single-element tensor to `shape`.
template <typename T> Var<T> expand_scalar(const Var<T>& s, const Shape& shape);
/// [N, ...] -> [N], summing each sample.
template <typename T> Var<T> sum_per_sample(const Var<T>& x);
/// [N] -> shape with leading extent N, repeating each sample's value.
template <typename T> Var<T> expand_per_sample(const Var<T>& v, const Shape& shape);

/// sqrt(sum of squares + 1e-12) over all non-batch dims: [N, ...] -> [N].
template <typename T> Var<T> l2_norm_per_sample(const Var<T>& x);

/// Mean cross-entropy of softmax(logits [N,K]) against integer labels.
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels);

}  // namespace dragan
