#include "dragan/losses.hpp"

#include <stdexcept>

namespace dragan {

template <typename T>
Var<T> interpolate_samples(const Var<T>& real, const Var<T>& fake, const Tensor<T>& eps) {
  if (real.shape() != fake.shape()) {
    throw std::invalid_argument("interpolate_samples: shape mismatch " + shape_str(real.shape()) + " vs " +
                                shape_str(fake.shape()));
  }
  const int64_t n = real.shape().at(0);
  if (eps.numel() != n) throw std::invalid_argument("interpolate_samples: need one eps per sample");
  for (T e : eps.data()) {
    if (!(e >= T(0) && e <= T(1))) throw std::invalid_argument("interpolate_samples: eps outside [0, 1]");
  }
  Tensor<T> one_minus({n});
  for (int64_t i = 0; i < n; ++i) one_minus.data()[static_cast<size_t>(i)] = T(1) - eps.data()[static_cast<size_t>(i)];
  const Var<T> e = expand_per_sample(constant(eps.reshaped({n})), real.shape());
  const Var<T> f = expand_per_sample(constant(std::move(one_minus)), real.shape());
  return add(mul(e, real), mul(f, fake));
}

template <typename T>
Tensor<T> sample_eps(int64_t n, RngState& rng) {
  Tensor<T> eps({n});
  for (auto& v : eps.data()) v = static_cast<T>(rng.uniform());
  return eps;
}

template <typename T>
Var<T> gradient_penalty(const CriticFn<T>& critic, const Var<T>& x_hat) {
  EnableGradGuard on;
  const Var<T> x = x_hat.requires_grad() ? x_hat : Var<T>(x_hat.value(), true);
  const Var<T> scores = critic(x);
  const Var<T> g = input_gradient(scores, x);
  const Var<T> dev = add_scalar(l2_norm_per_sample(g), T(-1));
  return mean(mul(dev, dev));
}

template <typename T>
CriticLoss<T> critic_loss(const CriticFn<T>& critic, const Var<T>& real, const Var<T>& fake, double lambda,
                          const Tensor<T>& eps) {
  if (lambda < 0) throw std::invalid_argument("critic_loss: lambda must be >= 0");
  const Var<T> fake_c = fake.detach();
  const Var<T> d_real = mean(critic(real));
  const Var<T> d_fake = mean(critic(fake_c));
  CriticLoss<T> out;
  out.real_score = static_cast<double>(d_real.value().item());
  out.fake_score = static_cast<double>(d_fake.value().item());
  out.total = sub(d_fake, d_real);
  if (lambda > 0) {
    const Var<T> x_hat = interpolate_samples(real.detach(), fake_c, eps);
    out.penalty = gradient_penalty(critic, x_hat);
    out.total = add(out.total, scale(out.penalty, static_cast<T>(lambda)));
  }
  return out;
}

template <typename T>
CriticLoss<T> critic_loss(const CriticFn<T>& critic, const Var<T>& real, const Var<T>& fake, double lambda,
                          RngState& rng) {
  return critic_loss(critic, real, fake, lambda, sample_eps<T>(real.shape().at(0), rng));
}

template <typename T>
Var<T> generator_adv_loss(const CriticFn<T>& critic, const Var<T>& fake) {
  return neg(mean(critic(fake)));
}

template <typename T>
Var<T> cycle_loss(const Var<T>& x, const Var<T>& x_rec) {
  if (x.shape() != x_rec.shape()) {
    throw std::invalid_argument("cycle_loss: shape mismatch " + shape_str(x.shape()) + " vs " +
                                shape_str(x_rec.shape()));
  }
  return mean(l2_norm_per_sample(sub(x, x_rec)));
}

#define DRAGAN_LOSSES(T)                                                                                      \
  template Var<T> interpolate_samples<T>(const Var<T>&, const Var<T>&, const Tensor<T>&);                     \
  template Tensor<T> sample_eps<T>(int64_t, RngState&);                                                       \
  template Var<T> gradient_penalty<T>(const CriticFn<T>&, const Var<T>&);                                     \
  template CriticLoss<T> critic_loss<T>(const CriticFn<T>&, const Var<T>&, const Var<T>&, double,             \
                                        const Tensor<T>&);                                                    \
  template CriticLoss<T> critic_loss<T>(const CriticFn<T>&, const Var<T>&, const Var<T>&, double, RngState&); \
  template Var<T> generator_adv_loss<T>(const CriticFn<T>&, const Var<T>&);                                   \
  template Var<T> cycle_loss<T>(const Var<T>&, const Var<T>&);

DRAGAN_LOSSES(float)
DRAGAN_LOSSES(double)

}  // namespace dragan
