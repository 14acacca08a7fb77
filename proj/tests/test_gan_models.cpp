#include <doctest.h>

#include "dragan/gradcheck.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/models.hpp"

using namespace dragan;
using TF = Tensor<float>;

namespace {

GeneratorConfig small(int res = 80, int width = 4) {
  GeneratorConfig c;
  c.resolution = res;
  c.base_width = width;
  return c;
}

Var<float> image(int64_t n, int res, uint64_t seed) {
  RngState rng(seed);
  return constant(random_tensor({n, 3, res, res}, rng).cast<float>());
}

}  // namespace

TEST_CASE("generator emits three scales in range") {
  const auto g = Generator<float>::create(small(), 3);
  const auto out = generator_forward(image(2, 80, 1), image(2, 80, 2), g);
  REQUIRE(out.images.size() == 3);
  CHECK(out.images[0].shape() == Shape{2, 3, 20, 20});
  CHECK(out.images[1].shape() == Shape{2, 3, 40, 40});
  CHECK(out.images[2].shape() == Shape{2, 3, 80, 80});
  for (const auto& y : out.images) {
    for (float v : y.value().data()) CHECK((v >= -1.0f && v <= 1.0f));
  }
  const auto again = generator_forward(image(2, 80, 1), image(2, 80, 2), g);
  for (size_t i = 0; i < 3; ++i) CHECK(bitwise_equal(out.images[i].value(), again.images[i].value()));
}

TEST_CASE("generator rejects wrong inputs and bad configs") {
  const auto g = Generator<float>::create(small(), 3);
  CHECK_THROWS_AS(generator_forward(image(1, 40, 1), image(1, 40, 2), g), std::invalid_argument);
  CHECK_THROWS_AS(generator_forward(image(1, 80, 1), image(2, 80, 2), g), std::invalid_argument);
  GeneratorConfig bad = small(30);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(Generator<float>::create(bad, 1), std::invalid_argument);
}

TEST_CASE("ablation toggles keep output shapes") {
  for (int which = 0; which < 3; ++which) {
    GeneratorConfig c = small(32);
    if (which == 0) c.dra_enabled = false;
    if (which == 1) c.multiscale_enabled = false;
    if (which == 2) c.pictogram_concat_enabled = false;
    const auto out = generator_forward(image(1, 32, 1), image(1, 32, 2), Generator<float>::create(c, 4));
    REQUIRE(out.images.size() == 3);
    CHECK(out.full().shape() == Shape{1, 3, 32, 32});
  }
}

TEST_CASE("critic stack topology") {
  const auto stack = CriticStack<float>::create(small(), CriticConfig{8, true}, 5);
  REQUIRE(stack.critics.size() == 3);
  CHECK(stack.at_size(80).units.size() == 3);
  CHECK(stack.at_size(40).units.size() == 2);
  CHECK(stack.at_size(20).units.size() == 1);
  const auto picto = image(3, 80, 9);
  for (int s : {20, 40, 80}) {
    const auto y = critic_forward(image(3, s, 7), stack, s, picto);
    CHECK(y.shape() == Shape{3, 1});
    CHECK(y.value().all_finite());
    CHECK(bitwise_equal(y.value(), critic_forward(image(3, s, 7), stack, s, picto).value()));
  }
  CHECK_THROWS_AS(critic_forward(image(1, 40, 7), stack, 80, picto), std::invalid_argument);
  CHECK_THROWS_AS(critic_forward(image(1, 40, 7), stack, 60, picto), std::invalid_argument);
  CHECK_THROWS_AS(stack.at_size(80).forward(image(1, 80, 7)), std::invalid_argument);
}

TEST_CASE("cycle_map shares parameters") {
  const auto g = Generator<float>::create(small(32), 6);
  const auto before = g.parameters();
  const auto census = parameter_census(before);
  const auto rec = cycle_map(image(1, 32, 1), image(1, 32, 2), image(1, 32, 3), g);
  CHECK(rec.shape() == Shape{1, 3, 32, 32});
  const auto after = g.parameters();
  CHECK(parameter_census(after) == census);
  for (size_t i = 0; i < before.size(); ++i) CHECK(same_node(before[i].var, after[i].var));

  // Both passes read the same leaves: every parameter except the auxiliary
  // heads gets gradient from the full-resolution reconstruction.
  auto loss = sum(cycle_map(image(1, 32, 1), image(1, 32, 2), image(1, 32, 3), g));
  auto grads = backward(loss);
  for (const auto& p : before) {
    const bool aux_head = p.name.find(".head.") != std::string::npos && p.name.find("dec32") == std::string::npos;
    CHECK_MESSAGE(grads.contains(p.var) != aux_head, p.name);
  }
}

TEST_CASE("parameter census is stable") {
  const auto a = parameter_census(Generator<float>::create(small(), 1).parameters());
  const auto b = parameter_census(Generator<float>::create(small(), 2).parameters());
  CHECK(a == b);
  int64_t total = 0;
  for (const auto& p : Generator<float>::create(small(), 1).parameters()) total += p.var.numel();
  CHECK(census_total(a) == total);
  CHECK(a.front().first == "G.enc80.stem.weight");
}

TEST_CASE("tiny generator end-to-end gradient check") {
  for (const auto& r : run_gradcheck_suite(GradcheckScope::generator)) {
    CHECK_MESSAGE(r.passed, r.name << " max rel err " << r.max_rel_error);
    CHECK(r.tolerance == 1e-4);
  }
}
