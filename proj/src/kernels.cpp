#include "kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace dragan::kernels {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

bool is_pointwise(int64_t kh, int64_t kw, int stride, int pad) {
  return kh == 1 && kw == 1 && stride == 1 && pad == 0;
}

// col has shape [C*kh*kw, oh*ow].
template <typename T>
void im2col(const T* img, int64_t c, int64_t h, int64_t w, int64_t kh, int64_t kw, int stride, int pad,
            int64_t oh, int64_t ow, T* col) {
  for (int64_t ci = 0; ci < c; ++ci) {
    const T* plane = img + ci * h * w;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        T* row = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t y = 0; y < oh; ++y) {
          const int64_t iy = y * stride - pad + ki;
          T* dst = row + y * ow;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + ow, T(0));
            continue;
          }
          const T* src = plane + iy * w;
          if (stride == 1) {
            const int64_t off = kj - pad;
            const int64_t x0 = std::max<int64_t>(0, -off);
            const int64_t x1 = std::min<int64_t>(ow, w - off);
            std::fill(dst, dst + std::min(x0, ow), T(0));
            if (x1 > x0) std::memcpy(dst + x0, src + x0 + off, static_cast<size_t>(x1 - x0) * sizeof(T));
            if (x1 < ow) std::fill(dst + std::max(x1, int64_t{0}), dst + ow, T(0));
          } else {
            for (int64_t x = 0; x < ow; ++x) {
              const int64_t ix = x * stride - pad + kj;
              dst[x] = (ix >= 0 && ix < w) ? src[ix] : T(0);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, int64_t c, int64_t h, int64_t w, int64_t kh, int64_t kw, int stride, int pad,
                int64_t oh, int64_t ow, T* img) {
  for (int64_t ci = 0; ci < c; ++ci) {
    T* plane = img + ci * h * w;
    for (int64_t ki = 0; ki < kh; ++ki) {
      for (int64_t kj = 0; kj < kw; ++kj) {
        const T* row = col + ((ci * kh + ki) * kw + kj) * oh * ow;
        for (int64_t y = 0; y < oh; ++y) {
          const int64_t iy = y * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          T* dst = plane + iy * w;
          const T* src = row + y * ow;
          for (int64_t x = 0; x < ow; ++x) {
            const int64_t ix = x * stride - pad + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[x];
          }
        }
      }
    }
  }
}

struct Taps {
  std::vector<int64_t> lo, hi;
  std::vector<double> frac;
};

Taps bilinear_taps(int64_t in, int64_t out) {
  Taps t;
  t.lo.resize(static_cast<size_t>(out));
  t.hi.resize(static_cast<size_t>(out));
  t.frac.resize(static_cast<size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (int64_t i = 0; i < out; ++i) {
    double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<int64_t>(std::floor(s));
    t.lo[static_cast<size_t>(i)] = lo;
    t.hi[static_cast<size_t>(i)] = std::min(lo + 1, in - 1);
    t.frac[static_cast<size_t>(i)] = s - static_cast<double>(lo);
  }
  return t;
}

}  // namespace

int64_t conv_out_extent(int64_t in, int64_t k, int stride, int pad) {
  const int64_t span = in + 2 * pad - k;
  if (span < 0) return 0;
  return span / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t co = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int64_t oh = conv_out_extent(h, kh, stride, pad), ow = conv_out_extent(wd, kw, stride, pad);
  const int64_t k = c * kh * kw, p = oh * ow;
  Tensor<T> out({n, co, oh, ow});
  ConstMapMat<T> wm(w.ptr(), co, k);
  std::vector<T> col;
  const bool pointwise = is_pointwise(kh, kw, stride, pad);
  if (!pointwise) col.resize(static_cast<size_t>(k * p));
  for (int64_t i = 0; i < n; ++i) {
    const T* img = x.ptr() + i * c * h * wd;
    const T* src = img;
    if (!pointwise) {
      im2col(img, c, h, wd, kh, kw, stride, pad, oh, ow, col.data());
      src = col.data();
    }
    MapMat<T> om(out.ptr() + i * co * p, co, p);
    om.noalias() = wm * ConstMapMat<T>(src, k, p);
  }
  return out;
}

template <typename T>
Tensor<T> conv2d_input_grad(const Tensor<T>& g, const Tensor<T>& w, int stride, int pad, int64_t in_h,
                            int64_t in_w) {
  const int64_t n = g.dim(0), co = g.dim(1), oh = g.dim(2), ow = g.dim(3);
  const int64_t c = w.dim(1), kh = w.dim(2), kw = w.dim(3);
  const int64_t k = c * kh * kw, p = oh * ow;
  Tensor<T> dx({n, c, in_h, in_w});
  ConstMapMat<T> wm(w.ptr(), co, k);
  const bool pointwise = is_pointwise(kh, kw, stride, pad);
  std::vector<T> col;
  if (!pointwise) col.resize(static_cast<size_t>(k * p));
  for (int64_t i = 0; i < n; ++i) {
    ConstMapMat<T> gm(g.ptr() + i * co * p, co, p);
    T* dimg = dx.ptr() + i * c * in_h * in_w;
    if (pointwise) {
      MapMat<T>(dimg, k, p).noalias() = wm.transpose() * gm;
    } else {
      MapMat<T>(col.data(), k, p).noalias() = wm.transpose() * gm;
      col2im_add(col.data(), c, in_h, in_w, kh, kw, stride, pad, oh, ow, dimg);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> conv2d_weight_grad(const Tensor<T>& x, const Tensor<T>& g, int stride, int pad, int64_t kh,
                             int64_t kw) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int64_t co = g.dim(1), oh = g.dim(2), ow = g.dim(3);
  const int64_t k = c * kh * kw, p = oh * ow;
  Tensor<T> dw({co, c, kh, kw});
  MapMat<T> dwm(dw.ptr(), co, k);
  const bool pointwise = is_pointwise(kh, kw, stride, pad);
  std::vector<T> col;
  if (!pointwise) col.resize(static_cast<size_t>(k * p));
  for (int64_t i = 0; i < n; ++i) {
    const T* img = x.ptr() + i * c * h * wd;
    const T* src = img;
    if (!pointwise) {
      im2col(img, c, h, wd, kh, kw, stride, pad, oh, ow, col.data());
      src = col.data();
    }
    ConstMapMat<T> gm(g.ptr() + i * co * p, co, p);
    dwm.noalias() += gm * ConstMapMat<T>(src, k, p).transpose();
  }
  return dw;
}

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int64_t out_h, int64_t out_w) {
  const int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const Taps ty = bilinear_taps(h, out_h), tx = bilinear_taps(w, out_w);
  Tensor<T> out({n, c, out_h, out_w});
  for (int64_t pc = 0; pc < n * c; ++pc) {
    const T* src = x.ptr() + pc * h * w;
    T* dst = out.ptr() + pc * out_h * out_w;
    for (int64_t i = 0; i < out_h; ++i) {
      const auto fy = static_cast<T>(ty.frac[static_cast<size_t>(i)]);
      const T* r0 = src + ty.lo[static_cast<size_t>(i)] * w;
      const T* r1 = src + ty.hi[static_cast<size_t>(i)] * w;
      for (int64_t j = 0; j < out_w; ++j) {
        const auto fx = static_cast<T>(tx.frac[static_cast<size_t>(j)]);
        const int64_t x0 = tx.lo[static_cast<size_t>(j)], x1 = tx.hi[static_cast<size_t>(j)];
        dst[i * out_w + j] = (T(1) - fy) * ((T(1) - fx) * r0[x0] + fx * r0[x1]) +
                             fy * ((T(1) - fx) * r1[x0] + fx * r1[x1]);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> resize_bilinear_adjoint(const Tensor<T>& g, int64_t in_h, int64_t in_w) {
  const int64_t n = g.dim(0), c = g.dim(1), oh = g.dim(2), ow = g.dim(3);
  const Taps ty = bilinear_taps(in_h, oh), tx = bilinear_taps(in_w, ow);
  Tensor<T> out({n, c, in_h, in_w});
  for (int64_t pc = 0; pc < n * c; ++pc) {
    const T* src = g.ptr() + pc * oh * ow;
    T* dst = out.ptr() + pc * in_h * in_w;
    for (int64_t i = 0; i < oh; ++i) {
      const auto fy = static_cast<T>(ty.frac[static_cast<size_t>(i)]);
      T* r0 = dst + ty.lo[static_cast<size_t>(i)] * in_w;
      T* r1 = dst + ty.hi[static_cast<size_t>(i)] * in_w;
      for (int64_t j = 0; j < ow; ++j) {
        const auto fx = static_cast<T>(tx.frac[static_cast<size_t>(j)]);
        const int64_t x0 = tx.lo[static_cast<size_t>(j)], x1 = tx.hi[static_cast<size_t>(j)];
        const T v = src[i * ow + j];
        r0[x0] += (T(1) - fy) * (T(1) - fx) * v;
        r0[x1] += (T(1) - fy) * fx * v;
        r1[x0] += fy * (T(1) - fx) * v;
        r1[x1] += fy * fx * v;
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out({m, n});
  MapMat<T>(out.ptr(), m, n).noalias() = ConstMapMat<T>(a.ptr(), m, k) * ConstMapMat<T>(b.ptr(), k, n);
  return out;
}

#define DRAGAN_KERNELS(T)                                                                           \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, int, int);                       \
  template Tensor<T> conv2d_input_grad<T>(const Tensor<T>&, const Tensor<T>&, int, int, int64_t,    \
                                          int64_t);                                                 \
  template Tensor<T> conv2d_weight_grad<T>(const Tensor<T>&, const Tensor<T>&, int, int, int64_t,   \
                                           int64_t);                                                \
  template Tensor<T> resize_bilinear<T>(const Tensor<T>&, int64_t, int64_t);                        \
  template Tensor<T> resize_bilinear_adjoint<T>(const Tensor<T>&, int64_t, int64_t);                \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);

DRAGAN_KERNELS(float)
DRAGAN_KERNELS(double)

}  // namespace dragan::kernels
