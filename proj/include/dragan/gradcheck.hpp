#pragma once

// Central finite-difference gradient checking. The oracle side only ever
// evaluates the forward function, so it stays independent of the backward
// rules it verifies.

#include <functional>
#include <string>
#include <vector>

#include "dragan/autodiff.hpp"
#include "dragan/rng.hpp"

namespace dragan {

struct GradcheckResult {
  std::string name;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  int64_t entries_checked = 0;
  bool passed = false;
};

/// Scalar-valued function of several tensor inputs.
using ScalarFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

/// Relative error with a floor on the denominator so entries whose true
/// gradient is ~0 are judged on an absolute scale.
double gradcheck_rel_error(double analytic, double numeric, double floor = 1e-3);

/// Compares autodiff gradients of `fn` at `inputs` against central
/// differences with the given step. When `max_entries_per_input` is positive,
/// a deterministic random subset of each input's entries is checked.
GradcheckResult check_gradients(const std::string& name, const ScalarFn& fn, const std::vector<Tensor<double>>& inputs,
                                double tolerance, double step = 1e-5, int64_t max_entries_per_input = 0,
                                uint64_t seed = 0);

/// Central differences of `fn` with respect to one input (oracle only).
Tensor<double> numeric_gradient(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs, size_t which,
                                double step = 1e-5);

/// Random tensor with entries uniform in [lo, hi], optionally pushed at
/// least `margin` away from zero (keeps relu kinks out of the FD stencil).
Tensor<double> random_tensor(const Shape& shape, RngState& rng, double lo = -1.0, double hi = 1.0,
                             double margin = 0.0);

}  // namespace dragan
