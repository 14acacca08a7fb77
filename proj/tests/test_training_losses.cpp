#include <doctest.h>

#include <cmath>

#include "dragan/gradcheck.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/losses.hpp"
#include "dragan/mask.hpp"
#include "dragan/optim.hpp"

using namespace dragan;
using TD = Tensor<double>;
using VarD = Var<double>;

namespace {

// D(x) = w . flatten(x)
CriticFn<double> linear_critic(const TD& w) {
  return [w](const VarD& x) { return fully_connected(flatten(x), constant(w), VarD{}); };
}

CriticFn<double> mean_critic() {
  return [](const VarD& x) {
    const int64_t n = x.shape()[0];
    const int64_t d = x.numel() / n;
    return fully_connected(flatten(x), constant(TD::full({1, d}, 1.0 / static_cast<double>(d))), VarD{});
  };
}

TD with_norm(const TD& w, double norm) {
  double s = 0;
  for (double v : w.data()) s += v * v;
  TD out = w;
  for (auto& v : out.data()) v *= norm / std::sqrt(s);
  return out;
}

}  // namespace

TEST_CASE("interpolate_samples") {
  const auto real = constant(TD::full({2, 3, 2, 2}, 2.0));
  const auto fake = constant(TD::zeros({2, 3, 2, 2}));
  const auto one = interpolate_samples(real, fake, TD::from({2}, {1.0, 1.0}));
  CHECK(bitwise_equal(one.value(), real.value()));
  const auto zero = interpolate_samples(real, fake, TD::from({2}, {0.0, 0.0}));
  CHECK(bitwise_equal(zero.value(), fake.value()));
  const auto half = interpolate_samples(real, fake, TD::from({2}, {0.5, 0.5}));
  for (double v : half.value().data()) CHECK(v == 1.0);
  const auto mixed = interpolate_samples(real, fake, TD::from({2}, {0.25, 0.75}));
  CHECK(mixed.value().at(0, 1, 1, 1) == 0.5);
  CHECK(mixed.value().at(1, 2, 0, 1) == 1.5);
  CHECK_THROWS_AS(interpolate_samples(real, fake, TD::from({2}, {1.5, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(interpolate_samples(real, fake, TD::from({2}, {-0.1, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(interpolate_samples(real, fake, TD::from({1}, {0.5})), std::invalid_argument);
}

TEST_CASE("gradient penalty closed forms") {
  RngState rng(2);
  const TD w = random_tensor({1, 12}, rng);
  const auto x = constant(random_tensor({4, 3, 2, 2}, rng));
  const double p1 = gradient_penalty(linear_critic(with_norm(w, 1.0)), x).value().item();
  CHECK(p1 >= 0.0);
  CHECK(p1 <= 1e-10);
  const double p3 = gradient_penalty(linear_critic(with_norm(w, 3.0)), x).value().item();
  CHECK(std::abs(p3 - 4.0) <= 1e-8);
  const double p0 = gradient_penalty(linear_critic(with_norm(w, 0.5)), x).value().item();
  CHECK(p0 == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("critic loss examples") {
  RngState rng(3);
  const auto real = constant(random_tensor({3, 3, 4, 4}, rng));
  CHECK(critic_loss(mean_critic(), real, real, 0.0, rng).total.value().item() == 0.0);

  const auto ones = constant(TD::ones({2, 3, 4, 4}));
  const auto zeros = constant(TD::zeros({2, 3, 4, 4}));
  CHECK(critic_loss(mean_critic(), ones, zeros, 0.0, rng).total.value().item() == doctest::Approx(-1.0));

  const TD w = with_norm(random_tensor({1, 48}, rng), 1.0);
  const auto fake = constant(random_tensor({2, 3, 4, 4}, rng));
  const double l0 = critic_loss(linear_critic(w), ones, fake, 0.0, rng).total.value().item();
  const double l10 = critic_loss(linear_critic(w), ones, fake, 10.0, rng).total.value().item();
  CHECK(std::abs(l10 - l0) <= 1e-9);

  // critic_loss(lambda = 0) + generator_adv_loss = -mean D(real)
  const auto crit = linear_critic(random_tensor({1, 48}, rng));
  const double c = critic_loss(crit, ones, fake, 0.0, rng).total.value().item();
  const double g = generator_adv_loss(crit, fake).value().item();
  const double r = mean(crit(ones)).value().item();
  CHECK(c + g == doctest::Approx(-r).epsilon(1e-12));
  CHECK_THROWS_AS(critic_loss(crit, ones, fake, -1.0, rng), std::invalid_argument);
}

TEST_CASE("critic loss never reaches the fake's producer") {
  RngState rng(4);
  VarD gen_param(random_tensor({2, 3, 4, 4}, rng), true);
  const auto fake = tanh(gen_param);
  const auto real = constant(random_tensor({2, 3, 4, 4}, rng));
  VarD w(random_tensor({1, 48}, rng), true);
  const CriticFn<double> crit = [&](const VarD& x) { return fully_connected(flatten(x), w, VarD{}); };
  const auto grads = backward(critic_loss(crit, real, fake, 10.0, rng).total);
  CHECK(grads.contains(w));
  CHECK_FALSE(grads.contains(gen_param));
}

TEST_CASE("generator adversarial loss") {
  RngState rng(5);
  VarD p(random_tensor({2, 3, 2, 2}, rng), true);
  const CriticFn<double> zero = [](const VarD& x) {
    return fully_connected(flatten(x), constant(TD::zeros({1, 12})), VarD{});
  };
  const auto l = generator_adv_loss(zero, tanh(p));
  CHECK(l.value().item() == 0.0);
  const TD gp = backward(l).get(p);
  for (double v : gp.data()) CHECK(v == 0.0);
  CHECK(generator_adv_loss(mean_critic(), constant(TD::ones({2, 3, 2, 2}))).value().item() ==
        doctest::Approx(-1.0));
}

TEST_CASE("cycle loss") {
  RngState rng(6);
  const auto a = constant(random_tensor({2, 3, 4, 4}, rng));
  const auto b = constant(random_tensor({2, 3, 4, 4}, rng));
  CHECK(cycle_loss(a, a).value().item() <= 1e-6);
  CHECK(cycle_loss(a, b).value().item() == cycle_loss(b, a).value().item());
  CHECK(cycle_loss(a, b).value().item() >= 0.0);
  TD d = TD::zeros({2, 3, 4, 4});
  d[0] = 3;
  d[1] = 4;
  d[48] = 3;
  d[60] = 4;
  CHECK(cycle_loss(constant(d), constant(TD::zeros(d.shape()))).value().item() == doctest::Approx(5.0));
  CHECK_THROWS_AS(cycle_loss(a, constant(TD({2, 3, 4, 5}))), std::invalid_argument);
}

TEST_CASE("penalty gradient checks") {
  for (const auto& r : run_gradcheck_suite(GradcheckScope::gp)) {
    CHECK_MESSAGE(r.passed, r.name << " max rel err " << r.max_rel_error);
  }
}

TEST_CASE("mask schedule and geometry") {
  MaskSpec spec;
  spec.ramp_iterations = 100;
  const MaskGeometry geom{40, 40, 20, 80};
  const auto m0 = make_mask<double>(spec, geom, 0, 80, 80);
  for (double v : m0.data()) CHECK(v == 1.0);
  const auto m1 = make_mask<double>(spec, geom, 150, 80, 80);
  CHECK(m1.at(0, 0, 40, 40) == 1.0);
  CHECK(m1.at(0, 0, 0, 0) == doctest::Approx(0.1));
  CHECK(make_mask<double>(spec, geom, 50, 20, 20).at(0, 0, 0, 0) == doctest::Approx(0.55));
  double prev = 1.0;
  for (int64_t it = 0; it < 300; it += 7) {
    const double o = spec.outside_intensity(it);
    CHECK(o <= prev);
    CHECK((o >= 0.1 && o <= 1.0));
    prev = o;
  }
  for (int64_t it : {0, 10, 99, 1000}) {
    const auto m = make_mask<double>(spec, MaskGeometry{30.5, 50.5, 9, 80}, it, 80, 80);
    CHECK(m.at(0, 0, 50, 30) == 1.0);
  }
  spec.shape = MaskShape::rectangular;
  const auto r = make_mask<double>(spec, MaskGeometry{40, 40, 10, 80}, 500, 80, 80);
  CHECK(r.at(0, 0, 31, 31) == 1.0);  // inside the box, outside the circle
  CHECK(r.at(0, 0, 29, 40) == doctest::Approx(0.1));
  spec.shape = MaskShape::none;
  const TD none = make_mask<double>(spec, geom, 500, 8, 8);
  for (double v : none.data()) CHECK(v == 1.0);
  CHECK_THROWS_AS(make_mask<double>(spec, MaskGeometry{40, 40, 0, 80}, 0, 8, 8), std::invalid_argument);
  CHECK_THROWS_AS(make_mask<double>(spec, MaskGeometry{90, 40, 5, 80}, 0, 8, 8), std::invalid_argument);
  CHECK_THROWS_AS(parse_mask_shape("oval"), std::invalid_argument);
}

TEST_CASE("apply_mask") {
  RngState rng(7);
  const auto y = constant(random_tensor({2, 3, 4, 4}, rng));
  const uint64_t before = apply_mask_invocations();
  CHECK(bitwise_equal(apply_mask(y, TD::ones({1, 1, 4, 4})).value(), y.value()));
  const TD zeroed = apply_mask(y, TD::zeros({1, 1, 4, 4})).value();
  for (double v : zeroed.data()) CHECK(v == 0.0);
  TD binary({2, 1, 4, 4});
  for (int64_t i = 0; i < binary.numel(); ++i) binary[i] = (i % 3 == 0) ? 1.0 : 0.0;
  const auto once = apply_mask(y, binary);
  CHECK(bitwise_equal(apply_mask(once, binary).value(), once.value()));
  CHECK(apply_mask_invocations() == before + 4);
  CHECK_THROWS_AS(apply_mask(y, TD::ones({1, 1, 4, 3})), std::invalid_argument);
  CHECK_THROWS_AS(apply_mask(y, TD::ones({3, 1, 4, 4})), std::invalid_argument);
}

TEST_CASE("adam") {
  AdamConfig cfg;
  cfg.lr = 0.1;
  ParameterList<double> params{{"a", VarD(TD::zeros({2}), true)}, {"b", VarD(TD::zeros({2}), true)}};
  auto st = OptimizerState<double>::create(params);
  adam_step(params, {TD::zeros({2}), TD::zeros({2})}, st, cfg);
  CHECK(st.step == 1);
  for (double v : params[0].var.value().data()) CHECK(v == 0.0);

  auto st2 = OptimizerState<double>::create(params);
  adam_step(params, {TD::ones({2}), TD::ones({2})}, st2, cfg);
  CHECK(params[0].var.value()[0] == doctest::Approx(-0.1).epsilon(1e-6));
  adam_step(params, {TD::from({2}, {0.3, -2}), TD::from({2}, {0.3, -2})}, st2, cfg);
  CHECK(bitwise_equal(params[0].var.value(), params[1].var.value()));
  CHECK(st2.step == 2);

  const TD keep = params[0].var.value();
  TD bad = TD::ones({2});
  bad[1] = std::nan("");
  CHECK_THROWS_AS(adam_step(params, {bad, TD::ones({2})}, st2, cfg), NonFiniteGradient);
  CHECK(bitwise_equal(params[0].var.value(), keep));
  CHECK(st2.step == 2);
  CHECK_THROWS_AS(adam_step(params, {TD::ones({3}), TD::ones({2})}, st2, cfg), std::invalid_argument);
}
