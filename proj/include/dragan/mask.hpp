#pragma once

// Training-only weak-supervision mask: exactly 1 over the sign, a scheduled
// intensity elsewhere. Masks multiply images on their way into the critics.

#include <cstdint>
#include <string>
#include <vector>

#include "dragan/autodiff.hpp"

namespace dragan {

enum class MaskShape { circular, rectangular, none };

MaskShape parse_mask_shape(const std::string& s);
std::string to_string(MaskShape s);

struct MaskSpec {
  MaskShape shape = MaskShape::circular;
  double floor = 0.1;
  /// Iteration at which the outside intensity reaches `floor`.
  int64_t ramp_iterations = 1;

  /// Linear ramp from 1 at iteration 0 down to `floor` at ramp_iterations.
  double outside_intensity(int64_t iteration) const;
  void validate() const;
};

/// Sign location in the coordinates of a `frame` x `frame` image.
struct MaskGeometry {
  double cx = 40.0;
  double cy = 40.0;
  double r = 20.0;
  int frame = 80;
};

/// [1,1,H,W]. Pixel centers are mapped into the geometry's frame, so one
/// geometry serves every scale. The rectangular shape is the circle's
/// bounding box.
template <typename T>
Tensor<T> make_mask(const MaskSpec& spec, const MaskGeometry& geom, int64_t iteration, int64_t h, int64_t w);

/// Per-sample masks stacked to [N,1,H,W].
template <typename T>
Tensor<T> make_mask_batch(const MaskSpec& spec, const std::vector<MaskGeometry>& geoms, int64_t iteration,
                          int64_t h, int64_t w);

/// y * mask with mask [1 or N, 1 or C, H, W] broadcast to y [N,C,H,W].
template <typename T>
Var<T> apply_mask(const Var<T>& y, const Tensor<T>& mask);

/// Number of apply_mask calls in this process. Inference code must leave it
/// untouched.
uint64_t apply_mask_invocations();
void reset_apply_mask_invocations();

}  // namespace dragan
