#include <doctest.h>

#include <cmath>
#include <vector>

#include "dragan/gradcheck.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/ops.hpp"
#include "dragan/rng.hpp"
#include "oracles.hpp"

using namespace dragan;
using VarD = Var<double>;
using TD = Tensor<double>;

TEST_CASE("tensor invariants") {
  TD t({2, 3});
  CHECK(t.numel() == 6);
  CHECK_THROWS_AS(TD({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(TD({2, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
  CHECK(Tensor<float>::dtype() == DType::f32);
  CHECK(TD::dtype() == DType::f64);
}

TEST_CASE("elementwise examples") {
  auto s = sigmoid(constant(TD::scalar(0.0)));
  CHECK(s.value().item() == 0.5);

  RngState rng(3);
  auto a = constant(random_tensor({2, 3, 4}, rng));
  auto b = mul(a, constant(TD::ones(a.shape())));
  CHECK(bitwise_equal(b.value(), a.value()));

  CHECK_THROWS_AS(add(constant(TD({2, 2})), constant(TD({2, 3}))), std::invalid_argument);
  CHECK_THROWS_AS(mul(constant(TD({1, 1, 2, 2})), constant(TD({1, 1, 1, 2}))), std::invalid_argument);

  auto big = sigmoid(constant(TD::from({3}, {-700.0, 0.0, 800.0})));
  CHECK(big.value().all_finite());
  CHECK(big.value()[0] > 0.0);
  CHECK(big.value()[0] < 1e-300);
  CHECK(big.value()[2] == 1.0);

  auto lr = leaky_relu(constant(TD::from({2}, {-1.0, 2.0})));
  CHECK(lr.value()[0] == doctest::Approx(-0.2));
  CHECK(lr.value()[1] == 2.0);
  auto ew = elementwise(ElementwiseKind::scale, constant(TD::from({2}, {1.0, -2.0})), VarD{}, 3.0);
  CHECK(ew.value()[1] == -6.0);
}

TEST_CASE("sigmoid gradient at 1 matches central difference") {
  const ScalarFn f = [](const std::vector<VarD>& v) { return sum(sigmoid(v[0])); };
  const auto num = numeric_gradient(f, {TD::scalar(1.0)}, 0, 1e-5);
  VarD x(TD::scalar(1.0), true);
  const auto g = backward(sum(sigmoid(x))).get(x);
  CHECK(gradcheck_rel_error(g.item(), num.item(), 0.0) <= 1e-6);
}

TEST_CASE("conv2d 1x1 permutation selects channels") {
  RngState rng(5);
  TD x = random_tensor({1, 2, 4, 4}, rng);
  TD w({2, 2, 1, 1}, std::vector<double>{0, 1, 1, 0});
  auto y = conv2d(constant(x), constant(w), 1, 0);
  CHECK(bitwise_equal(slice_channels_copy(y.value(), 0, 1), slice_channels_copy(x, 1, 1)));
  CHECK(bitwise_equal(slice_channels_copy(y.value(), 1, 1), slice_channels_copy(x, 0, 1)));
}

TEST_CASE("conv2d 3x3 matches naive sliding window") {
  TD x({1, 1, 4, 4});
  for (int i = 0; i < 16; ++i) x[i] = static_cast<double>(i) - 5.0;
  TD w({1, 1, 3, 3}, std::vector<double>{1, 2, 0, -1, 3, 1, 0.5, -2, 1});
  TD b({1}, std::vector<double>{0.25});
  for (int stride : {1, 2}) {
    auto y = conv2d(constant(x), constant(w), stride, 1, constant(b));
    auto ref = oracle::naive_conv2d(x, w, b, stride, 1);
    REQUIRE(y.shape() == ref.shape());
    for (int64_t i = 0; i < ref.numel(); ++i) CHECK(y.value()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
  // Multi-channel, multi-batch against the same oracle.
  RngState rng(11);
  TD xb = random_tensor({2, 3, 5, 6}, rng);
  TD wb = random_tensor({4, 3, 3, 3}, rng);
  TD bb = random_tensor({4}, rng);
  auto yb = conv2d(constant(xb), constant(wb), 2, 1, constant(bb));
  auto rb = oracle::naive_conv2d(xb, wb, bb, 2, 1);
  REQUIRE(yb.shape() == rb.shape());
  for (int64_t i = 0; i < rb.numel(); ++i) CHECK(yb.value()[i] == doctest::Approx(rb[i]).epsilon(1e-12));
}

TEST_CASE("conv2d shape rules and errors") {
  auto y = conv2d(constant(TD({2, 3, 8, 8})), constant(TD({5, 3, 3, 3})), 2, 1);
  CHECK(y.shape() == Shape{2, 5, 4, 4});
  CHECK_THROWS_AS(conv2d(constant(TD({1, 2, 8, 8})), constant(TD({5, 3, 3, 3})), 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(conv2d(constant(TD({1, 3, 1, 1})), constant(TD({5, 3, 3, 3})), 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(conv2d(constant(TD({1, 3, 4, 4})), constant(TD({5, 3, 5, 5})), 1, 2), std::invalid_argument);
}

TEST_CASE("concat and slice") {
  RngState rng(1);
  TD a = random_tensor({1, 2, 4, 4}, rng), b = random_tensor({1, 3, 4, 4}, rng);
  VarD va(a, true), vb(b, true);
  auto c = concat_channels(va, vb);
  CHECK(c.shape() == Shape{1, 5, 4, 4});
  CHECK(bitwise_equal(slice_channels_copy(c.value(), 0, 2), a));
  CHECK(bitwise_equal(slice_channels(c, 2, 3).value(), b));
  auto g = backward(sum(c));
  CHECK(bitwise_equal(g.get(va), TD::ones(a.shape())));
  CHECK_THROWS_AS(concat_channels(constant(TD({1, 2, 4, 4})), constant(TD({1, 2, 4, 5}))), std::invalid_argument);
}

TEST_CASE("resize_bilinear") {
  auto c = resize_bilinear(constant(TD::full({1, 2, 3, 3}, 0.7)), 6, 6);
  for (double v : c.value().data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  auto one = resize_bilinear(constant(TD::full({1, 1, 1, 1}, -0.3)), 2, 2);
  for (double v : one.value().data()) CHECK(v == -0.3);

  TD src({1, 1, 2, 2}, std::vector<double>{0, 1, 2, 3});
  auto up = resize_bilinear(constant(src), 4, 4);
  auto ref = oracle::reference_bilinear(src, 4, 4);
  for (int64_t i = 0; i < 16; ++i) CHECK(up.value()[i] == doctest::Approx(ref[i]).epsilon(1e-15));
  // Hand values for the half-pixel convention: row 0 is clamped to source row 0.
  CHECK(up.value()[0] == 0.0);
  CHECK(up.value()[1] == doctest::Approx(0.25));
  CHECK(up.value()[5] == doctest::Approx(0.75));

  RngState rng(2);
  TD r = random_tensor({2, 3, 5, 7}, rng);
  CHECK(bitwise_equal(resize_bilinear(constant(r), 5, 7).value(), r));
  TD down = resize_bilinear(constant(r), 3, 2).value();
  TD dref = oracle::reference_bilinear(r, 3, 2);
  for (int64_t i = 0; i < down.numel(); ++i) CHECK(down[i] == doctest::Approx(dref[i]).epsilon(1e-14));
  CHECK_THROWS_AS(resize_bilinear(constant(r), 0, 2), std::invalid_argument);
}

TEST_CASE("fully_connected") {
  RngState rng(4);
  auto z = fully_connected(constant(random_tensor({3, 5}, rng)), constant(TD({1, 5})), constant(TD::scalar(0.0)));
  for (double v : z.value().data()) CHECK(v == 0.0);
  auto y = fully_connected(constant(TD::from({1, 2}, {1, 2})), constant(TD::from({1, 2}, {3, 4})),
                           constant(TD::scalar(1.0)));
  CHECK(y.shape() == Shape{1, 1});
  CHECK(y.value().item() == 12.0);
  VarD w(TD::from({1, 2}, {3, 4}), true);
  TD in = TD::from({1, 2}, {1, 2});
  auto gw = backward(sum(fully_connected(constant(in), w, constant(TD::scalar(1.0))))).get(w);
  CHECK(gw[0] == 1.0);
  CHECK(gw[1] == 2.0);
  CHECK_THROWS_AS(fully_connected(constant(TD({1, 3})), constant(TD({1, 2})), VarD{}), std::invalid_argument);
}

TEST_CASE("reductions") {
  CHECK(mean(constant(TD::from({4}, {1, 2, 3, 4}))).value().item() == 2.5);
  CHECK(sum(constant(TD({3, 2}))).value().item() == 0.0);
  VarD x(TD({2, 4}), true);
  auto g = backward(reduce(ReduceKind::mean, x)).get(x);
  for (double v : g.data()) CHECK(v == 0.125);
}

TEST_CASE("l2_norm_per_sample") {
  auto n = l2_norm_per_sample(constant(TD::from({1, 2}, {3, 4})));
  CHECK(n.value()[0] == doctest::Approx(5.0).epsilon(1e-12));
  auto z = l2_norm_per_sample(constant(TD({2, 3})));
  for (double v : z.value().data()) CHECK(v <= 1e-6 * (1 + 1e-12));
  const ScalarFn f = [](const std::vector<VarD>& v) { return sum(l2_norm_per_sample(v[0])); };
  const auto num = numeric_gradient(f, {TD::from({1, 2}, {3, 4})}, 0);
  VarD x(TD::from({1, 2}, {3, 4}), true);
  const auto g = backward(f({x})).get(x);
  CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(g[1] == doctest::Approx(0.8).epsilon(1e-6));
  CHECK(gradcheck_rel_error(g[0], num[0], 0.0) <= 1e-6);
  CHECK(gradcheck_rel_error(g[1], num[1], 0.0) <= 1e-6);
}

TEST_CASE("backward examples") {
  VarD w(TD::from({2}, {1, 2}), true);
  auto g = backward(sum(mul(w, w)));
  CHECK(g.get(w)[0] == 2.0);
  CHECK(g.get(w)[1] == 4.0);

  VarD u(TD::from({2}, {1, 2}), true);
  VarD other(TD::from({2}, {5, 6}), true);
  auto g2 = backward(sum(other));
  CHECK(!g2.contains(u));
  CHECK(g2.get(u)[0] == 0.0);

  CHECK_THROWS_AS(backward(mul(w, w)), std::invalid_argument);
}

TEST_CASE("randomized composite graphs match finite differences") {
  RngState rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TD> inputs{random_tensor({2, 3}, rng, -1, 1, 0.05), random_tensor({2, 3}, rng),
                           random_tensor({3, 2}, rng)};
    const ScalarFn f = [](const std::vector<VarD>& v) {
      auto h = tanh(mul(v[0], v[1]));
      auto m = matmul(sigmoid(add(h, v[0])), v[2]);
      return sum(mul(m, m));
    };
    auto r = check_gradients("composite", f, inputs, 1e-5);
    CHECK_MESSAGE(r.passed, "trial " << trial << " max rel err " << r.max_rel_error);
  }
}

TEST_CASE("input_gradient") {
  RngState rng(8);
  TD w = random_tensor({1, 4}, rng);
  for (int k = 0; k < 2; ++k) {
    VarD x(random_tensor({3, 4}, rng), true);
    auto d = fully_connected(x, constant(w), VarD{});
    auto gx = input_gradient(d, x);
    for (int64_t n = 0; n < 3; ++n) {
      for (int64_t j = 0; j < 4; ++j) CHECK(gx.value()[n * 4 + j] == doctest::Approx(w[j]).epsilon(1e-14));
    }
  }
  VarD x(TD::from({2}, {1, 2}), true);
  auto gx = input_gradient(sum(mul(x, x)), x);
  CHECK(gx.value()[0] == 2.0);
  CHECK(gx.value()[1] == 4.0);
  VarD unrelated(TD::scalar(1.0), true);
  CHECK_THROWS_AS(input_gradient(sum(mul(x, x)), unrelated), std::invalid_argument);
}

TEST_CASE("double backprop through a 2-layer sigmoid critic") {
  RngState rng(21);
  // inputs: x [3,4] (fixed sample), w1 [5,4], w2 [1,5]
  std::vector<TD> inputs{random_tensor({5, 4}, rng), random_tensor({1, 5}, rng)};
  const TD x = random_tensor({3, 4}, rng);
  const ScalarFn penalty = [&x](const std::vector<VarD>& p) {
    VarD xv(x, true);
    auto h = sigmoid(fully_connected(xv, p[0], VarD{}));
    auto d = fully_connected(h, p[1], VarD{});
    auto g = input_gradient(d, xv);
    auto dev = add_scalar(l2_norm_per_sample(g), -1.0);
    return mean(mul(dev, dev));
  };
  auto r = check_gradients("penalty", penalty, inputs, 1e-4);
  CHECK_MESSAGE(r.passed, "max rel err " << r.max_rel_error);
}

TEST_CASE("every op passes randomized gradient checks") {
  for (const auto& r : run_gradcheck_suite(GradcheckScope::ops)) {
    CHECK_MESSAGE(r.passed, r.name << " max rel err " << r.max_rel_error);
  }
}

TEST_CASE("second-order rules of linear op families") {
  // Gradient of a gradient-norm expression exercises conv/resize/concat adjoints.
  RngState rng(31);
  const TD x = random_tensor({2, 2, 5, 5}, rng);
  std::vector<TD> params{random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng), random_tensor({1, 3 * 3 * 3}, rng)};
  const ScalarFn f = [&x](const std::vector<VarD>& p) {
    VarD xv(x, true);
    auto h = tanh(conv2d(xv, p[0], 2, 1, p[1]));
    auto up = resize_bilinear(h, 4, 4);
    auto dn = resize_bilinear(concat_channels(up, up), 3, 3);
    auto d = fully_connected(flatten(slice_channels(dn, 1, 3)), p[2], VarD{});
    auto g = input_gradient(d, xv);
    auto dev = add_scalar(l2_norm_per_sample(g), -1.0);
    return mean(mul(dev, dev));
  };
  auto r = check_gradients("conv-resize-penalty", f, params, 1e-4);
  CHECK_MESSAGE(r.passed, "max rel err " << r.max_rel_error);
}

TEST_CASE("determinism") {
  auto run = [] {
    RngState rng(1234);
    TD x = random_tensor({2, 3, 8, 8}, rng);
    TD w = random_tensor({4, 3, 3, 3}, rng);
    VarD wv(w, true);
    auto y = sum(tanh(conv2d(constant(x), wv, 1, 1)));
    return std::make_pair(y.value(), backward(y).get(wv));
  };
  auto a = run(), b = run();
  CHECK(bitwise_equal(a.first, b.first));
  CHECK(bitwise_equal(a.second, b.second));
  RngState r1(7), r2(7);
  for (int i = 0; i < 100; ++i) CHECK(r1.next_u64() == r2.next_u64());
}
