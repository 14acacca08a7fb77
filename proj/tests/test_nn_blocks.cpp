#include <doctest.h>

#include <cmath>

#include "dragan/blocks.hpp"
#include "dragan/gradcheck.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/models.hpp"

using namespace dragan;
using TD = Tensor<double>;
using VarD = Var<double>;

TEST_CASE("residual_attention closed forms") {
  RngState rng(5);
  const TD fc = random_tensor({2, 4, 3, 3}, rng, -2, 2);
  const auto zero = residual_attention(constant(fc), constant(TD::zeros(fc.shape())));
  for (int64_t i = 0; i < fc.numel(); ++i) CHECK(zero.value()[i] == 1.5 * fc[i]);

  const auto sat = residual_attention(constant(fc), constant(TD::full(fc.shape(), 30.0)));
  for (int64_t i = 0; i < fc.numel(); ++i) CHECK(std::abs(sat.value()[i] - 2.0 * fc[i]) <= 1e-6 * std::abs(fc[i]));

  const auto neg = residual_attention(constant(fc), constant(TD::full(fc.shape(), -40.0)));
  for (int64_t i = 0; i < fc.numel(); ++i) CHECK(neg.value()[i] == doctest::Approx(fc[i]).epsilon(1e-12));

  CHECK_THROWS_AS(residual_attention(constant(fc), constant(TD({2, 3, 3, 3}))), std::invalid_argument);
}

TEST_CASE("dense_fuse keeps the encoder channel count") {
  RngState rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const int64_t cd = 1 + static_cast<int64_t>(rng.below(8));
    const int64_t ce = 1 + static_cast<int64_t>(rng.below(8));
    const auto m = DraModule<double>::create(cd, ce, rng);
    const auto y = dense_fuse(constant(random_tensor({2, cd, 4, 4}, rng)), constant(random_tensor({2, ce, 4, 4}, rng)),
                              m);
    CHECK(y.shape() == Shape{2, ce, 4, 4});
  }
  const auto m = DraModule<double>::create(3, 2, rng);
  CHECK_THROWS_AS(dense_fuse(constant(TD({1, 2, 4, 4})), constant(TD({1, 2, 4, 4})), m), std::invalid_argument);
}

TEST_CASE("dense_fuse with selection weights reproduces the encoder map") {
  RngState rng(10);
  const int64_t cd = 3, ce = 2;
  auto m = DraModule<double>::create(cd, ce, rng);
  TD w({ce, cd + ce, 1, 1});
  for (int64_t c = 0; c < ce; ++c) w[c * (cd + ce) + cd + c] = 1.0;
  m.reduce.weight.assign(w);
  m.reduce.bias.assign(TD::zeros({ce}));
  const TD fe = random_tensor({2, ce, 5, 5}, rng);
  const auto y = dense_fuse(constant(random_tensor({2, cd, 5, 5}, rng)), constant(fe), m);
  CHECK(bitwise_equal(y.value(), fe));
}

TEST_CASE("attach_pictogram resizes to the feature size") {
  RngState rng(11);
  const auto p = constant(random_tensor({2, 3, 8, 8}, rng));
  const auto f = constant(random_tensor({2, 5, 4, 4}, rng));
  const auto y = attach_pictogram(f, p);
  CHECK(y.shape() == Shape{2, 8, 4, 4});
  // Exact 2x downscale is a 2x2 average.
  const double expect = 0.25 * (p.value().at(1, 2, 2, 4) + p.value().at(1, 2, 2, 5) + p.value().at(1, 2, 3, 4) +
                                p.value().at(1, 2, 3, 5));
  CHECK(y.value().at(1, 7, 1, 2) == doctest::Approx(expect).epsilon(1e-14));
  const auto same = attach_pictogram(constant(random_tensor({2, 5, 8, 8}, rng)), p);
  for (int64_t c = 0; c < 3; ++c) CHECK(same.value().at(0, 5 + c, 3, 3) == p.value().at(0, c, 3, 3));
}

TEST_CASE("attention adds no parameters") {
  GeneratorConfig on, off;
  off.dra_enabled = false;
  on.base_width = off.base_width = 4;
  on.resolution = off.resolution = 16;
  const auto a = parameter_census(Generator<float>::create(on, 1).parameters());
  const auto b = parameter_census(Generator<float>::create(off, 1).parameters());
  Census only_dra;
  for (const auto& e : a) {
    if (e.first.find(".dra.") != std::string::npos) only_dra.push_back(e);
  }
  CHECK(only_dra.size() == 6);  // one 1x1 conv (weight + bias) per scale
  for (const auto& e : only_dra) CHECK(e.first.find(".reduce.") != std::string::npos);
  CHECK(census_total(a) - census_total(b) == census_total(only_dra));
}

TEST_CASE("block gradient checks") {
  for (const auto& r : run_gradcheck_suite(GradcheckScope::blocks)) {
    CHECK_MESSAGE(r.passed, r.name << " max rel err " << r.max_rel_error);
    CHECK(r.tolerance == 1e-5);
  }
}
