#include "dragan/mask.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "dragan/ops.hpp"

namespace dragan {

namespace {
std::atomic<uint64_t> g_apply_mask_calls{0};
}

MaskShape parse_mask_shape(const std::string& s) {
  if (s == "circular") return MaskShape::circular;
  if (s == "rectangular") return MaskShape::rectangular;
  if (s == "none") return MaskShape::none;
  throw std::invalid_argument("unknown mask shape '" + s + "' (expected circular, rectangular or none)");
}

std::string to_string(MaskShape s) {
  switch (s) {
    case MaskShape::circular: return "circular";
    case MaskShape::rectangular: return "rectangular";
    case MaskShape::none: return "none";
  }
  return "?";
}

double MaskSpec::outside_intensity(int64_t iteration) const {
  if (iteration <= 0) return 1.0;
  if (iteration >= ramp_iterations) return floor;
  const double t = static_cast<double>(iteration) / static_cast<double>(ramp_iterations);
  return std::max(floor, 1.0 - (1.0 - floor) * t);
}

void MaskSpec::validate() const {
  if (!(floor >= 0.0 && floor <= 1.0)) throw std::invalid_argument("mask floor must be in [0, 1]");
  if (ramp_iterations < 1) throw std::invalid_argument("mask ramp must be at least one iteration");
}

template <typename T>
Tensor<T> make_mask(const MaskSpec& spec, const MaskGeometry& geom, int64_t iteration, int64_t h, int64_t w) {
  if (!(geom.r > 0)) throw std::invalid_argument("mask radius must be positive");
  if (geom.frame <= 0 || geom.cx < 0 || geom.cy < 0 || geom.cx > geom.frame || geom.cy > geom.frame) {
    throw std::invalid_argument("mask center lies outside the image");
  }
  Tensor<T> m = Tensor<T>::ones({1, 1, h, w});
  if (spec.shape == MaskShape::none) return m;
  const T outside = static_cast<T>(spec.outside_intensity(iteration));
  if (outside == T(1)) return m;
  const double sx = static_cast<double>(geom.frame) / static_cast<double>(w);
  const double sy = static_cast<double>(geom.frame) / static_cast<double>(h);
  T* p = m.ptr();
  for (int64_t i = 0; i < h; ++i) {
    const double y = (static_cast<double>(i) + 0.5) * sy - geom.cy;
    for (int64_t j = 0; j < w; ++j) {
      const double x = (static_cast<double>(j) + 0.5) * sx - geom.cx;
      const bool inside = spec.shape == MaskShape::circular ? x * x + y * y <= geom.r * geom.r
                                                            : std::abs(x) <= geom.r && std::abs(y) <= geom.r;
      if (!inside) p[i * w + j] = outside;
    }
  }
  return m;
}

template <typename T>
Tensor<T> make_mask_batch(const MaskSpec& spec, const std::vector<MaskGeometry>& geoms, int64_t iteration,
                          int64_t h, int64_t w) {
  if (geoms.empty()) throw std::invalid_argument("make_mask_batch: no geometries");
  Tensor<T> out({static_cast<int64_t>(geoms.size()), 1, h, w});
  for (size_t n = 0; n < geoms.size(); ++n) {
    const Tensor<T> m = make_mask<T>(spec, geoms[n], iteration, h, w);
    std::copy(m.data().begin(), m.data().end(), out.ptr() + static_cast<int64_t>(n) * h * w);
  }
  return out;
}

template <typename T>
Var<T> apply_mask(const Var<T>& y, const Tensor<T>& mask) {
  const Shape& s = y.shape();
  const Shape& ms = mask.shape();
  const bool ok = s.size() == 4 && ms.size() == 4 && (ms[0] == 1 || ms[0] == s[0]) && (ms[1] == 1 || ms[1] == s[1]) &&
                  ms[2] == s[2] && ms[3] == s[3];
  if (!ok) {
    throw std::invalid_argument("apply_mask: mask " + shape_str(ms) + " does not broadcast to " + shape_str(s));
  }
  g_apply_mask_calls.fetch_add(1, std::memory_order_relaxed);
  Tensor<T> full(s);
  const int64_t hw = s[2] * s[3];
  for (int64_t n = 0; n < s[0]; ++n) {
    for (int64_t c = 0; c < s[1]; ++c) {
      const T* src = mask.ptr() + ((ms[0] == 1 ? 0 : n) * ms[1] + (ms[1] == 1 ? 0 : c)) * hw;
      std::copy(src, src + hw, full.ptr() + (n * s[1] + c) * hw);
    }
  }
  return mul(y, constant(std::move(full)));
}

uint64_t apply_mask_invocations() { return g_apply_mask_calls.load(); }
void reset_apply_mask_invocations() { g_apply_mask_calls.store(0); }

#define DRAGAN_MASK(T)                                                                                          \
  template Tensor<T> make_mask<T>(const MaskSpec&, const MaskGeometry&, int64_t, int64_t, int64_t);            \
  template Tensor<T> make_mask_batch<T>(const MaskSpec&, const std::vector<MaskGeometry>&, int64_t, int64_t, \
                                        int64_t);                                                              \
  template Var<T> apply_mask<T>(const Var<T>&, const Tensor<T>&);

DRAGAN_MASK(float)
DRAGAN_MASK(double)

}  // namespace dragan
