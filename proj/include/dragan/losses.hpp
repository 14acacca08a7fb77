#pragma once

// WGAN-GP critic/generator objectives and the cycle loss.

#include <functional>

#include "dragan/ops.hpp"
#include "dragan/rng.hpp"

namespace dragan {

/// A critic bound to whatever conditioning it needs: images [N,3,H,W] -> scores [N,1].
template <typename T>
using CriticFn = std::function<Var<T>(const Var<T>&)>;

/// eps * real + (1 - eps) * fake with eps [N] broadcast over each sample.
/// Throws if eps has the wrong length or leaves [0, 1].
template <typename T>
Var<T> interpolate_samples(const Var<T>& real, const Var<T>& fake, const Tensor<T>& eps);

/// N uniform(0, 1) draws.
template <typename T>
Tensor<T> sample_eps(int64_t n, RngState& rng);

/// mean over samples of (||grad_x D(x_hat)||_2 - 1)^2. Differentiable with
/// respect to the critic's parameters. A constant x_hat is lifted to a fresh
/// leaf so the input gradient exists.
template <typename T>
Var<T> gradient_penalty(const CriticFn<T>& critic, const Var<T>& x_hat);

template <typename T>
struct CriticLoss {
  Var<T> total;    // mean D(fake) - mean D(real) + lambda * penalty
  Var<T> penalty;  // undefined when lambda == 0
  double real_score = 0.0;
  double fake_score = 0.0;
};

/// `fake` is detached here, so the critic step can never reach generator
/// parameters.
template <typename T>
CriticLoss<T> critic_loss(const CriticFn<T>& critic, const Var<T>& real, const Var<T>& fake, double lambda,
                          const Tensor<T>& eps);

template <typename T>
CriticLoss<T> critic_loss(const CriticFn<T>& critic, const Var<T>& real, const Var<T>& fake, double lambda,
                          RngState& rng);

/// -mean D(fake).
template <typename T>
Var<T> generator_adv_loss(const CriticFn<T>& critic, const Var<T>& fake);

/// Batch mean of per-sample L2 norms of x - x_rec.
template <typename T>
Var<T> cycle_loss(const Var<T>& x, const Var<T>& x_rec);

}  // namespace dragan
