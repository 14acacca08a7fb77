#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dragan/blocks.hpp"

namespace dragan {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
  void validate() const;
};

template <typename T>
struct OptimizerState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  uint64_t step = 0;

  static OptimizerState create(const ParameterList<T>& params);
  bool operator==(const OptimizerState&) const = default;
};

/// Thrown when a gradient holds NaN or Inf; parameters and state are left
/// untouched.
struct NonFiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam. `grads[i]` belongs to `params[i]`.
template <typename T>
void adam_step(const ParameterList<T>& params, const std::vector<Tensor<T>>& grads, OptimizerState<T>& state,
               const AdamConfig& cfg);

/// Convenience overload that looks each parameter up in a gradient map
/// (missing entries count as zero).
template <typename T>
void adam_step(const ParameterList<T>& params, const Gradients<T>& grads, OptimizerState<T>& state,
               const AdamConfig& cfg);

}  // namespace dragan
