#include "dragan/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace dragan {

void AdamConfig::validate() const {
  if (!(lr > 0)) throw std::invalid_argument("learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw std::invalid_argument("betas must be in [0, 1)");
  if (!(eps > 0)) throw std::invalid_argument("adam eps must be positive");
}

template <typename T>
OptimizerState<T> OptimizerState<T>::create(const ParameterList<T>& params) {
  OptimizerState s;
  for (const auto& p : params) {
    s.m.push_back(Tensor<T>::zeros(p.var.shape()));
    s.v.push_back(Tensor<T>::zeros(p.var.shape()));
  }
  return s;
}

template <typename T>
void adam_step(const ParameterList<T>& params, const std::vector<Tensor<T>>& grads, OptimizerState<T>& state,
               const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and state counts differ");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params[i].var.shape() || state.m[i].shape() != params[i].var.shape()) {
      throw std::invalid_argument("adam_step: shape mismatch for " + params[i].name);
    }
    if (!grads[i].all_finite()) throw NonFiniteGradient("non-finite gradient for parameter " + params[i].name);
  }
  const uint64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor<T> p = params[i].var.value();
    T* pv = p.ptr();
    T* m = state.m[i].ptr();
    T* v = state.v[i].ptr();
    const T* g = grads[i].ptr();
    for (int64_t k = 0; k < p.numel(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const double mhat = static_cast<double>(m[k]) / bc1;
      const double vhat = static_cast<double>(v[k]) / bc2;
      pv[k] = static_cast<T>(static_cast<double>(pv[k]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
    params[i].var.assign(std::move(p));
  }
  state.step = t;
}

template <typename T>
void adam_step(const ParameterList<T>& params, const Gradients<T>& grads, OptimizerState<T>& state,
               const AdamConfig& cfg) {
  std::vector<Tensor<T>> g;
  g.reserve(params.size());
  for (const auto& p : params) g.push_back(grads.get(p.var));
  adam_step(params, g, state, cfg);
}

#define DRAGAN_OPTIM(T)                                                                                          \
  template struct OptimizerState<T>;                                                                             \
  template void adam_step<T>(const ParameterList<T>&, const std::vector<Tensor<T>>&, OptimizerState<T>&,         \
                             const AdamConfig&);                                                                 \
  template void adam_step<T>(const ParameterList<T>&, const Gradients<T>&, OptimizerState<T>&, const AdamConfig&);

DRAGAN_OPTIM(float)
DRAGAN_OPTIM(double)

}  // namespace dragan
