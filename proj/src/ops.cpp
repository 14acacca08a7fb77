#include "dragan/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "kernels.hpp"

namespace dragan {
namespace {

template <typename T>
using Grads = std::vector<Var<T>>;
using Needs = std::vector<bool>;

[[noreturn]] void fail(const std::string& op, const std::string& msg) {
  throw std::invalid_argument(op + ": " + msg);
}

template <typename T>
void require_same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (!a.defined() || !b.defined()) fail(op, "undefined operand");
  if (a.shape() != b.shape()) {
    fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const char* op, const Var<T>& a, int rank) {
  if (!a.defined()) fail(op, "undefined operand");
  if (a.value().rank() != rank) {
    fail(op, "expected rank " + std::to_string(rank) + ", got " + shape_str(a.shape()));
  }
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& x, F f) {
  Tensor<T> out(x.shape());
  const T* s = x.ptr();
  T* d = out.ptr();
  for (int64_t i = 0, n = x.numel(); i < n; ++i) d[i] = f(s[i]);
  return out;
}

template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F f) {
  Tensor<T> out(a.shape());
  const T* x = a.ptr();
  const T* y = b.ptr();
  T* d = out.ptr();
  for (int64_t i = 0, n = a.numel(); i < n; ++i) d[i] = f(x[i], y[i]);
  return out;
}

}  // namespace

// Elementwise ------------------------------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape("add", a, b);
  return make_op<T>("add", zip(a.value(), b.value(), [](T x, T y) { return x + y; }), {a, b},
                    [](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {g, g}; });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape("sub", a, b);
  return make_op<T>("sub", zip(a.value(), b.value(), [](T x, T y) { return x - y; }), {a, b},
                    [](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
                      return {g, needs[1] ? neg(g) : Var<T>{}};
                    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same_shape("mul", a, b);
  return make_op<T>("mul", zip(a.value(), b.value(), [](T x, T y) { return x * y; }), {a, b},
                    [a, b](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
                      return {needs[0] ? mul(g, b) : Var<T>{}, needs[1] ? mul(g, a) : Var<T>{}};
                    });
}

template <typename T>
Var<T> neg(const Var<T>& a) {
  return scale(a, T(-1));
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  return make_op<T>("scale", map(a.value(), [factor](T x) { return x * factor; }), {a},
                    [factor](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {scale(g, factor)};
                    });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T shift) {
  return make_op<T>("add_scalar", map(a.value(), [shift](T x) { return x + shift; }), {a},
                    [](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {g}; });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  auto f = [](T x) {
    // Split by sign so exp() never overflows.
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
  };
  return make_op<T>("sigmoid", map(a.value(), f), {a},
                    [](const Var<T>& out, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {mul(g, mul(out, add_scalar(neg(out), T(1))))};
                    });
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  return make_op<T>("tanh", map(a.value(), [](T x) { return std::tanh(x); }), {a},
                    [](const Var<T>& out, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {mul(g, add_scalar(neg(mul(out, out)), T(1)))};
                    });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  return leaky_relu(a, T(0));
}

// The slope mask is a constant, so the second derivative is zero.
template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope) {
  return make_op<T>(slope == T(0) ? "relu" : "leaky_relu",
                    map(a.value(), [slope](T x) { return x > T(0) ? x : slope * x; }), {a},
                    [a, slope](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      auto mask = map(a.value(), [slope](T x) { return x > T(0) ? T(1) : slope; });
                      return {mul(g, constant(std::move(mask)))};
                    });
}

template <typename T>
Var<T> sqrt(const Var<T>& a) {
  return make_op<T>("sqrt", map(a.value(), [](T x) { return std::sqrt(x); }), {a},
                    [](const Var<T>& out, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {mul(g, scale(reciprocal(out), T(0.5)))};
                    });
}

template <typename T>
Var<T> reciprocal(const Var<T>& a) {
  return make_op<T>("reciprocal", map(a.value(), [](T x) { return T(1) / x; }), {a},
                    [](const Var<T>& out, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {neg(mul(g, mul(out, out)))};
                    });
}

template <typename T>
Var<T> elementwise(ElementwiseKind kind, const Var<T>& a, const Var<T>& b, T factor) {
  switch (kind) {
    case ElementwiseKind::add: return add(a, b);
    case ElementwiseKind::sub: return sub(a, b);
    case ElementwiseKind::mul: return mul(a, b);
    case ElementwiseKind::sigmoid: return sigmoid(a);
    case ElementwiseKind::relu: return relu(a);
    case ElementwiseKind::leaky_relu: return leaky_relu(a, T(0.2));
    case ElementwiseKind::tanh: return tanh(a);
    case ElementwiseKind::scale: return scale(a, factor);
  }
  fail("elementwise", "unknown kind");
}

// Convolution -------------------------------------------------------------

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, int stride, int padding, const Var<T>& bias) {
  require_rank("conv2d", x, 4);
  require_rank("conv2d", kernel, 4);
  const int64_t kh = kernel.shape()[2], kw = kernel.shape()[3];
  if ((kh != 1 && kh != 3) || (kw != 1 && kw != 3)) fail("conv2d", "kernel must be 1x1 or 3x3");
  if (stride != 1 && stride != 2) fail("conv2d", "stride must be 1 or 2");
  if (padding < 0) fail("conv2d", "negative padding");
  if (kernel.shape()[1] != x.shape()[1]) {
    fail("conv2d", "input has " + std::to_string(x.shape()[1]) + " channels, kernel expects " +
                       std::to_string(kernel.shape()[1]));
  }
  const int64_t h = x.shape()[2], w = x.shape()[3];
  const int64_t oh = kernels::conv_out_extent(h, kh, stride, padding);
  const int64_t ow = kernels::conv_out_extent(w, kw, stride, padding);
  if (oh <= 0 || ow <= 0) fail("conv2d", "non-positive output extent for input " + shape_str(x.shape()));
  const ConvGeometry geom{stride, padding};
  Var<T> out = make_op<T>(
      "conv2d", kernels::conv2d(x.value(), kernel.value(), stride, padding), {x, kernel},
      [x, kernel, geom, h, w, kh, kw](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
        return {needs[0] ? conv2d_input_grad(g, kernel, geom, h, w) : Var<T>{},
                needs[1] ? conv2d_weight_grad(x, g, geom, kh, kw) : Var<T>{}};
      });
  if (!bias.defined()) return out;
  if (bias.value().rank() != 1 || bias.shape()[0] != kernel.shape()[0]) {
    fail("conv2d", "bias shape " + shape_str(bias.shape()) + " does not match " +
                       std::to_string(kernel.shape()[0]) + " output channels");
  }
  return add(out, channel_expand(bias, out.shape()));
}

template <typename T>
Var<T> conv2d_input_grad(const Var<T>& grad_out, const Var<T>& kernel, ConvGeometry geom, int64_t in_h,
                         int64_t in_w) {
  require_rank("conv2d_input_grad", grad_out, 4);
  require_rank("conv2d_input_grad", kernel, 4);
  if (grad_out.shape()[1] != kernel.shape()[0]) fail("conv2d_input_grad", "channel mismatch");
  const int64_t kh = kernel.shape()[2], kw = kernel.shape()[3];
  return make_op<T>(
      "conv2d_input_grad",
      kernels::conv2d_input_grad(grad_out.value(), kernel.value(), geom.stride, geom.padding, in_h, in_w),
      {grad_out, kernel},
      [grad_out, kernel, geom, kh, kw](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
        return {needs[0] ? conv2d(g, kernel, geom.stride, geom.padding) : Var<T>{},
                needs[1] ? conv2d_weight_grad(g, grad_out, geom, kh, kw) : Var<T>{}};
      });
}

template <typename T>
Var<T> conv2d_weight_grad(const Var<T>& x, const Var<T>& grad_out, ConvGeometry geom, int64_t kh, int64_t kw) {
  require_rank("conv2d_weight_grad", x, 4);
  require_rank("conv2d_weight_grad", grad_out, 4);
  if (x.shape()[0] != grad_out.shape()[0]) fail("conv2d_weight_grad", "batch mismatch");
  const int64_t h = x.shape()[2], w = x.shape()[3];
  return make_op<T>(
      "conv2d_weight_grad",
      kernels::conv2d_weight_grad(x.value(), grad_out.value(), geom.stride, geom.padding, kh, kw),
      {x, grad_out},
      [x, grad_out, geom, h, w](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
        return {needs[0] ? conv2d_input_grad(grad_out, g, geom, h, w) : Var<T>{},
                needs[1] ? conv2d(x, g, geom.stride, geom.padding) : Var<T>{}};
      });
}

template <typename T>
Var<T> channel_expand(const Var<T>& v, const Shape& shape) {
  require_rank("channel_expand", v, 1);
  if (shape.size() != 4 || shape[1] != v.shape()[0]) {
    fail("channel_expand", "cannot expand " + shape_str(v.shape()) + " to " + shape_str(shape));
  }
  Tensor<T> out(shape);
  const int64_t n = shape[0], c = shape[1], hw = shape[2] * shape[3];
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      std::fill_n(out.ptr() + (i * c + ch) * hw, hw, v.value()[ch]);
    }
  }
  return make_op<T>("channel_expand", std::move(out), {v},
                    [](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {channel_sum(g)}; });
}

template <typename T>
Var<T> channel_sum(const Var<T>& x) {
  require_rank("channel_sum", x, 4);
  const Shape shape = x.shape();
  const int64_t n = shape[0], c = shape[1], hw = shape[2] * shape[3];
  Tensor<T> out({c});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t ch = 0; ch < c; ++ch) {
      const T* p = x.value().ptr() + (i * c + ch) * hw;
      T s = T(0);
      for (int64_t k = 0; k < hw; ++k) s += p[k];
      out[ch] += s;
    }
  }
  return make_op<T>("channel_sum", std::move(out), {x},
                    [shape](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {channel_expand(g, shape)};
                    });
}

// Channel layout -----------------------------------------------------------

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  require_rank("concat_channels", a, 4);
  require_rank("concat_channels", b, 4);
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa[0] != sb[0] || sa[2] != sb[2] || sa[3] != sb[3]) {
    fail("concat_channels", "batch/spatial mismatch " + shape_str(sa) + " vs " + shape_str(sb) +
                                " (resize first)");
  }
  const int64_t n = sa[0], ca = sa[1], cb = sb[1], hw = sa[2] * sa[3];
  Tensor<T> out({n, ca + cb, sa[2], sa[3]});
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + i * (ca + cb) * hw, a.value().ptr() + i * ca * hw,
                static_cast<size_t>(ca * hw) * sizeof(T));
    std::memcpy(out.ptr() + (i * (ca + cb) + ca) * hw, b.value().ptr() + i * cb * hw,
                static_cast<size_t>(cb * hw) * sizeof(T));
  }
  return make_op<T>("concat_channels", std::move(out), {a, b},
                    [ca, cb](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
                      return {needs[0] ? slice_channels(g, 0, ca) : Var<T>{},
                              needs[1] ? slice_channels(g, ca, cb) : Var<T>{}};
                    });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, int64_t start, int64_t count) {
  require_rank("slice_channels", x, 4);
  const int64_t total = x.shape()[1];
  if (start < 0 || count <= 0 || start + count > total) fail("slice_channels", "range out of bounds");
  return make_op<T>("slice_channels", slice_channels_copy(x.value(), start, count), {x},
                    [start, total](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {pad_channels(g, start, total)};
                    });
}

template <typename T>
Var<T> pad_channels(const Var<T>& x, int64_t start, int64_t total) {
  require_rank("pad_channels", x, 4);
  const int64_t c = x.shape()[1];
  if (start < 0 || start + c > total) fail("pad_channels", "range out of bounds");
  const int64_t n = x.shape()[0], hw = x.shape()[2] * x.shape()[3];
  Tensor<T> out({n, total, x.shape()[2], x.shape()[3]});
  for (int64_t i = 0; i < n; ++i) {
    std::memcpy(out.ptr() + (i * total + start) * hw, x.value().ptr() + i * c * hw,
                static_cast<size_t>(c * hw) * sizeof(T));
  }
  return make_op<T>("pad_channels", std::move(out), {x},
                    [start, c](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {slice_channels(g, start, c)};
                    });
}

// Resampling ---------------------------------------------------------------

template <typename T>
Var<T> resize_bilinear(const Var<T>& x, int64_t out_h, int64_t out_w) {
  require_rank("resize_bilinear", x, 4);
  if (out_h < 1 || out_w < 1) fail("resize_bilinear", "output extent must be >= 1");
  const int64_t h = x.shape()[2], w = x.shape()[3];
  return make_op<T>("resize_bilinear", kernels::resize_bilinear(x.value(), out_h, out_w), {x},
                    [h, w](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {resize_bilinear_adjoint(g, h, w)};
                    });
}

template <typename T>
Var<T> resize_bilinear_adjoint(const Var<T>& g, int64_t in_h, int64_t in_w) {
  require_rank("resize_bilinear_adjoint", g, 4);
  if (in_h < 1 || in_w < 1) fail("resize_bilinear_adjoint", "input extent must be >= 1");
  const int64_t oh = g.shape()[2], ow = g.shape()[3];
  return make_op<T>("resize_bilinear_adjoint", kernels::resize_bilinear_adjoint(g.value(), in_h, in_w), {g},
                    [oh, ow](const Var<T>&, const Var<T>& gg, const Needs&) -> Grads<T> {
                      return {resize_bilinear(gg, oh, ow)};
                    });
}

// Linear algebra ------------------------------------------------------------

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.shape()[1] != b.shape()[0]) {
    fail("matmul", "inner dimension mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  return make_op<T>("matmul", kernels::matmul(a.value(), b.value()), {a, b},
                    [a, b](const Var<T>&, const Var<T>& g, const Needs& needs) -> Grads<T> {
                      return {needs[0] ? matmul(g, transpose(b)) : Var<T>{},
                              needs[1] ? matmul(transpose(a), g) : Var<T>{}};
                    });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  require_rank("transpose", a, 2);
  const int64_t m = a.shape()[0], n = a.shape()[1];
  Tensor<T> out({n, m});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) out[j * m + i] = a.value()[i * n + j];
  }
  return make_op<T>("transpose", std::move(out), {a},
                    [](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {transpose(g)}; });
}

template <typename T>
Var<T> fully_connected(const Var<T>& input, const Var<T>& weight, const Var<T>& bias) {
  require_rank("fully_connected", input, 2);
  require_rank("fully_connected", weight, 2);
  if (input.shape()[1] != weight.shape()[1]) {
    fail("fully_connected", "input dimension " + std::to_string(input.shape()[1]) +
                                " does not match weight " + shape_str(weight.shape()));
  }
  Var<T> y = matmul(input, transpose(weight));
  if (!bias.defined()) return y;
  const int64_t k = weight.shape()[0];
  if (bias.numel() == 1) return add(y, expand_scalar(bias, y.shape()));
  if (bias.numel() != k) fail("fully_connected", "bias size mismatch");
  const Var<T> ones = constant(Tensor<T>::ones({input.shape()[0], 1}));
  return add(y, matmul(ones, reshape(bias, {1, k})));
}

// Shape ---------------------------------------------------------------------

template <typename T>
Var<T> reshape(const Var<T>& x, const Shape& shape) {
  const Shape from = x.shape();
  return make_op<T>("reshape", x.value().reshaped(shape), {x},
                    [from](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {reshape(g, from)}; });
}

template <typename T>
Var<T> flatten(const Var<T>& x) {
  const int64_t n = x.shape().at(0);
  return reshape(x, {n, x.numel() / n});
}

// Reductions ----------------------------------------------------------------

template <typename T>
Var<T> sum(const Var<T>& x) {
  T s = T(0);
  for (T v : x.value().data()) s += v;
  const Shape shape = x.shape();
  return make_op<T>("sum", Tensor<T>::scalar(s), {x},
                    [shape](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {expand_scalar(g, shape)};
                    });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  return scale(sum(x), T(1) / static_cast<T>(x.numel()));
}

template <typename T>
Var<T> reduce(ReduceKind kind, const Var<T>& x) {
  if (x.numel() == 0) fail("reduce", "empty input");
  return kind == ReduceKind::mean ? mean(x) : sum(x);
}

template <typename T>
Var<T> expand_scalar(const Var<T>& s, const Shape& shape) {
  if (s.numel() != 1) fail("expand_scalar", "source must have one element, got " + shape_str(s.shape()));
  const Shape from = s.shape();
  return make_op<T>("expand_scalar", Tensor<T>(shape, s.value()[0]), {s},
                    [from](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {reshape(sum(g), from)};
                    });
}

template <typename T>
Var<T> sum_per_sample(const Var<T>& x) {
  if (x.value().rank() < 2) fail("sum_per_sample", "need at least one non-batch dim");
  const Shape shape = x.shape();
  const int64_t n = shape[0], per = x.numel() / n;
  Tensor<T> out({n});
  for (int64_t i = 0; i < n; ++i) {
    const T* p = x.value().ptr() + i * per;
    T s = T(0);
    for (int64_t k = 0; k < per; ++k) s += p[k];
    out[i] = s;
  }
  return make_op<T>("sum_per_sample", std::move(out), {x},
                    [shape](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {expand_per_sample(g, shape)};
                    });
}

template <typename T>
Var<T> expand_per_sample(const Var<T>& v, const Shape& shape) {
  require_rank("expand_per_sample", v, 1);
  if (shape.empty() || shape[0] != v.shape()[0]) {
    fail("expand_per_sample", "cannot expand " + shape_str(v.shape()) + " to " + shape_str(shape));
  }
  Tensor<T> out(shape);
  const int64_t n = shape[0], per = out.numel() / n;
  for (int64_t i = 0; i < n; ++i) std::fill_n(out.ptr() + i * per, per, v.value()[i]);
  return make_op<T>("expand_per_sample", std::move(out), {v},
                    [](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> { return {sum_per_sample(g)}; });
}

template <typename T>
Var<T> l2_norm_per_sample(const Var<T>& x) {
  return sqrt(add_scalar(sum_per_sample(mul(x, x)), T(1e-12)));
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  require_rank("softmax_cross_entropy", logits, 2);
  const int64_t n = logits.shape()[0], k = logits.shape()[1];
  if (static_cast<int64_t>(labels.size()) != n) fail("softmax_cross_entropy", "label count mismatch");
  Tensor<T> dlogits({n, k});
  T loss = T(0);
  for (int64_t i = 0; i < n; ++i) {
    const int label = labels[static_cast<size_t>(i)];
    if (label < 0 || label >= k) fail("softmax_cross_entropy", "label out of range");
    const T* row = logits.value().ptr() + i * k;
    const T mx = *std::max_element(row, row + k);
    T z = T(0);
    for (int64_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    loss += std::log(z) - (row[label] - mx);
    for (int64_t j = 0; j < k; ++j) {
      dlogits[i * k + j] = (std::exp(row[j] - mx) / z - (j == label ? T(1) : T(0))) / static_cast<T>(n);
    }
  }
  const Shape shape = logits.shape();
  return make_op<T>("softmax_cross_entropy", Tensor<T>::scalar(loss / static_cast<T>(n)), {logits},
                    [dlogits = std::move(dlogits), shape](const Var<T>&, const Var<T>& g, const Needs&) -> Grads<T> {
                      return {mul(expand_scalar(g, shape), constant(dlogits))};
                    });
}

#define DRAGAN_OPS(T)                                                                                   \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                                 \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                                 \
  template Var<T> mul<T>(const Var<T>&, const Var<T>&);                                                 \
  template Var<T> neg<T>(const Var<T>&);                                                                \
  template Var<T> scale<T>(const Var<T>&, T);                                                           \
  template Var<T> add_scalar<T>(const Var<T>&, T);                                                      \
  template Var<T> sigmoid<T>(const Var<T>&);                                                            \
  template Var<T> tanh<T>(const Var<T>&);                                                               \
  template Var<T> relu<T>(const Var<T>&);                                                               \
  template Var<T> leaky_relu<T>(const Var<T>&, T);                                                      \
  template Var<T> sqrt<T>(const Var<T>&);                                                               \
  template Var<T> reciprocal<T>(const Var<T>&);                                                         \
  template Var<T> elementwise<T>(ElementwiseKind, const Var<T>&, const Var<T>&, T);                     \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, int, int, const Var<T>&);                     \
  template Var<T> conv2d_input_grad<T>(const Var<T>&, const Var<T>&, ConvGeometry, int64_t, int64_t);   \
  template Var<T> conv2d_weight_grad<T>(const Var<T>&, const Var<T>&, ConvGeometry, int64_t, int64_t);  \
  template Var<T> channel_expand<T>(const Var<T>&, const Shape&);                                       \
  template Var<T> channel_sum<T>(const Var<T>&);                                                        \
  template Var<T> concat_channels<T>(const Var<T>&, const Var<T>&);                                     \
  template Var<T> slice_channels<T>(const Var<T>&, int64_t, int64_t);                                   \
  template Var<T> pad_channels<T>(const Var<T>&, int64_t, int64_t);                                     \
  template Var<T> resize_bilinear<T>(const Var<T>&, int64_t, int64_t);                                  \
  template Var<T> resize_bilinear_adjoint<T>(const Var<T>&, int64_t, int64_t);                          \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&);                                              \
  template Var<T> transpose<T>(const Var<T>&);                                                          \
  template Var<T> fully_connected<T>(const Var<T>&, const Var<T>&, const Var<T>&);                      \
  template Var<T> reshape<T>(const Var<T>&, const Shape&);                                              \
  template Var<T> flatten<T>(const Var<T>&);                                                            \
  template Var<T> sum<T>(const Var<T>&);                                                                \
  template Var<T> mean<T>(const Var<T>&);                                                               \
  template Var<T> reduce<T>(ReduceKind, const Var<T>&);                                                 \
  template Var<T> expand_scalar<T>(const Var<T>&, const Shape&);                                        \
  template Var<T> sum_per_sample<T>(const Var<T>&);                                                     \
  template Var<T> expand_per_sample<T>(const Var<T>&, const Shape&);                                    \
  template Var<T> l2_norm_per_sample<T>(const Var<T>&);                                                 \
  template Var<T> softmax_cross_entropy<T>(const Var<T>&, std::span<const int>);

DRAGAN_OPS(float)
DRAGAN_OPS(double)

}  // namespace dragan
