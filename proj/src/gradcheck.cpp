#include "dragan/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dragan/ops.hpp"

namespace dragan {
namespace {

double eval(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs) {
  // Grad mode stays on: functions that take input gradients internally
  // (the penalty) need their inner graph even on the oracle side.
  std::vector<Var<double>> vars;
  vars.reserve(inputs.size());
  for (const auto& t : inputs) vars.emplace_back(t, false);
  return fn(vars).value().item();
}

double central_difference(const ScalarFn& fn, std::vector<Tensor<double>>& work, size_t which, int64_t k,
                          double step) {
  const double orig = work[which][k];
  work[which][k] = orig + step;
  const double up = eval(fn, work);
  work[which][k] = orig - step;
  const double down = eval(fn, work);
  work[which][k] = orig;
  return (up - down) / (2.0 * step);
}

}  // namespace

double gradcheck_rel_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

Tensor<double> numeric_gradient(const ScalarFn& fn, const std::vector<Tensor<double>>& inputs, size_t which,
                                double step) {
  std::vector<Tensor<double>> work = inputs;
  Tensor<double> out(inputs[which].shape());
  for (int64_t k = 0; k < out.numel(); ++k) out[k] = central_difference(fn, work, which, k, step);
  return out;
}

GradcheckResult check_gradients(const std::string& name, const ScalarFn& fn, const std::vector<Tensor<double>>& inputs,
                                double tolerance, double step, int64_t max_entries_per_input, uint64_t seed) {
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.emplace_back(t, true);
  Var<double> out;
  {
    EnableGradGuard on;
    out = fn(vars);
  }
  const Gradients<double> grads = backward(out);

  GradcheckResult res;
  res.name = name;
  res.tolerance = tolerance;
  RngState rng(seed);
  std::vector<Tensor<double>> work = inputs;
  for (size_t i = 0; i < inputs.size(); ++i) {
    const Tensor<double> analytic = grads.get(vars[i]);
    std::vector<int64_t> idx(static_cast<size_t>(inputs[i].numel()));
    std::iota(idx.begin(), idx.end(), 0);
    if (max_entries_per_input > 0 && static_cast<int64_t>(idx.size()) > max_entries_per_input) {
      // Partial Fisher-Yates shuffle for a deterministic subset.
      for (int64_t j = 0; j < max_entries_per_input; ++j) {
        const auto r = static_cast<int64_t>(rng.below(idx.size() - static_cast<size_t>(j))) + j;
        std::swap(idx[static_cast<size_t>(j)], idx[static_cast<size_t>(r)]);
      }
      idx.resize(static_cast<size_t>(max_entries_per_input));
    }
    for (int64_t k : idx) {
      const double numeric = central_difference(fn, work, i, k, step);
      res.max_rel_error = std::max(res.max_rel_error, gradcheck_rel_error(analytic[k], numeric));
      ++res.entries_checked;
    }
  }
  res.passed = res.max_rel_error <= tolerance;
  return res;
}

Tensor<double> random_tensor(const Shape& shape, RngState& rng, double lo, double hi, double margin) {
  Tensor<double> t(shape);
  for (auto& v : t.data()) {
    double x = rng.uniform(lo, hi);
    if (margin > 0.0 && std::abs(x) < margin) x = x < 0 ? x - margin : x + margin;
    v = x;
  }
  return t;
}

}  // namespace dragan
