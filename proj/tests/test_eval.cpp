#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "dragan/eval.hpp"

using namespace dragan;
namespace fs = std::filesystem;

namespace {

Tensor<float> noise_image(uint64_t seed, int64_t size = 80) {
  RngState rng(seed);
  Tensor<float> t({3, size, size});
  for (auto& v : t.data()) v = static_cast<float>(rng.uniform(-0.7, 0.7));
  return t;
}

struct Split {
  TrainingData train, heldout;
};

const Split& small_split() {
  static const Split split = [] {
    const fs::path dir = fs::temp_directory_path() / "dragan_test_eval_data";
    fs::remove_all(dir);
    DatasetOptions o;
    o.categories = {SignCategory::blue_rectangle};
    o.classes_per_category = 2;
    o.scenes_per_class = 20;
    o.seed = 8;
    const auto m = generate_dataset(o, dir);
    const auto [tr, ho] = heldout_split(m);
    return Split{TrainingData::load(m, 32, tr), TrainingData::load(m, 32, ho)};
  }();
  return split;
}

}  // namespace

TEST_CASE("background psnr") {
  const Tensor<float> x = noise_image(1);
  CHECK(background_psnr(x, x, 40, 40, 20).identical);
  CHECK(background_psnr(x, x, 40, 40, 20).to_string() == "identical");

  Tensor<float> y = x;
  for (auto& v : y.data()) v += 0.2f;
  const auto p = background_psnr(x, y, 40, 40, 20);
  CHECK_FALSE(p.identical);
  CHECK(p.db == doctest::Approx(20.0).epsilon(1e-5));

  // Changes inside the circle do not count.
  Tensor<float> z = y;
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t i = 35; i < 45; ++i) {
      for (int64_t j = 35; j < 45; ++j) z[(c * 80 + i) * 80 + j] = 1.0f;
    }
  }
  CHECK(background_psnr(x, z, 40, 40, 20).db == p.db);
  CHECK(background_psnr(x, z, 40, 40, 20).pixels == p.pixels);

  // Geometry is in frame units, so a half-resolution image uses the same circle.
  const Tensor<float> xs = noise_image(2, 40);
  Tensor<float> ys = xs;
  for (auto& v : ys.data()) v -= 0.2f;
  CHECK(background_psnr(xs, ys, 40, 40, 20).db == doctest::Approx(20.0).epsilon(1e-5));

  CHECK_THROWS_AS(background_psnr(x, x, 40, 40, 60), std::invalid_argument);
  CHECK_THROWS_AS(background_psnr(x, xs, 40, 40, 10), std::invalid_argument);
  CHECK_THROWS_AS(background_psnr(x, x, 95, 40, 10), std::invalid_argument);
}

TEST_CASE("binomial interval") {
  const auto [lo, hi] = binomial_interval(100, 0.25);
  // Exact 2.5% and 97.5% quantiles of Binomial(100, 0.25).
  CHECK(lo == 17);
  CHECK(hi == 34);
  CHECK(binomial_interval(10, 0.0) == std::pair<int64_t, int64_t>{0, 0});
  CHECK(binomial_interval(10, 1.0) == std::pair<int64_t, int64_t>{10, 10});
  CHECK_THROWS(binomial_interval(0, 0.5));
}

TEST_CASE("held-out split takes every fifth scene of each class") {
  DatasetManifest m;
  for (int i = 0; i < 10; ++i) m.records.push_back({"a", 8 + i % 2, SignCategory::white_circle, 40, 40, 20, 0});
  const auto [tr, ho] = heldout_split(m);
  CHECK(tr.size() == 8);
  CHECK(ho == std::vector<size_t>{8, 9});
}

TEST_CASE("crop_sign samples the sign window") {
  Tensor<float> img({3, 80, 80}, -1.0f);
  for (int64_t c = 0; c < 3; ++c) {
    for (int64_t i = 20; i < 40; ++i) {
      for (int64_t j = 50; j < 70; ++j) img[(c * 80 + i) * 80 + j] = 1.0f;
    }
  }
  const auto crop = crop_sign(img, MaskGeometry{60, 30, 10, 80}, 8);
  CHECK(crop.shape() == Shape{3, 8, 8});
  for (float v : crop.data()) CHECK(v == 1.0f);
  const auto wide = crop_sign(img, MaskGeometry{60, 30, 20, 80}, 8);
  CHECK(wide[0] == -1.0f);
  CHECK(wide[3 * 8 + 3] == 1.0f);
}

TEST_CASE("reference classifier and transfer protocol") {
  const Split& s = small_split();
  ClassifierOptions o;
  o.epochs = 15;
  const auto rep = train_reference_classifier(s.train, s.heldout, o);
  CHECK(rep.heldout_accuracy >= 0.0);
  CHECK(rep.heldout_accuracy <= 1.0);
  CHECK(rep.classifier.classes.size() == 2);
  CHECK(classifier_accuracy(rep.classifier, s.heldout) == rep.heldout_accuracy);

  // Returning the input unchanged never counts as a transfer.
  const TransferFn identity = [](const TrainingSample& x, const Tensor<float>&, int) {
    return Transferred{x.image.reshaped({1, 3, 32, 32}), x.geometry};
  };
  // Substituting a real held-out scene of the target class scores like the
  // classifier itself on those scenes.
  int64_t oracle_correct = 0;
  const TransferFn oracle = [&](const TrainingSample&, const Tensor<float>&, int b) {
    const TrainingSample& real = s.heldout.samples[s.heldout.by_class.at(b).front()];
    oracle_correct += rep.classifier.classify(real.image, real.geometry) == b;
    return Transferred{real.image.reshaped({1, 3, 32, 32}), real.geometry};
  };
  const EvalReport none = evaluate_transfer(rep.classifier, s.heldout, identity, 5);
  const EvalReport ideal = evaluate_transfer(rep.classifier, s.heldout, oracle, 5);
  CHECK(none.samples == static_cast<int64_t>(s.heldout.samples.size()));
  CHECK(none.psnr_identical == none.samples);
  CHECK(ideal.accuracy == doctest::Approx(static_cast<double>(oracle_correct) / ideal.samples));
  if (rep.heldout_accuracy == 1.0) CHECK(none.accuracy == 0.0);

  // Per-class tallies add up to the overall figure.
  int64_t correct = 0, total = 0;
  for (const auto& [c, t] : ideal.per_class) {
    correct += t.correct;
    total += t.total;
    CHECK(t.accuracy() >= 0.0);
    CHECK(t.accuracy() <= 1.0);
  }
  CHECK(total == ideal.samples);
  CHECK(static_cast<double>(correct) / total == doctest::Approx(ideal.accuracy));
  CHECK(ideal.chance == 0.5);
  CHECK(ideal.chance_lo <= 0.5);
  CHECK(ideal.chance_hi >= 0.5);
  CHECK(ideal.to_text().find("transfer_accuracy") != std::string::npos);

  // Same seed, same targets.
  CHECK(evaluate_transfer(rep.classifier, s.heldout, oracle, 5).to_text() == ideal.to_text());
}

TEST_CASE("grid layout") {
  std::vector<GridTile> tiles;
  for (int i = 0; i < 4; ++i) {
    tiles.push_back({Tensor<float>({3, 10, 10}, 0.1f * i), Tensor<float>({3, 10, 10}, 0.5f),
                     Tensor<float>({3, 10, 10}, -0.5f)});
  }
  const auto g = make_grid(tiles, 2, 2);
  CHECK(g.shape() == Shape{3, 20, 60});
  CHECK(g[0] == 0.0f);
  CHECK(g[10] == 0.5f);
  CHECK(g[25] == -0.5f);
  CHECK(g[30] == 0.1f);
  CHECK(g[15 * 60 + 35] == 0.3f);
  CHECK(g[15 * 60 + 45] == 0.5f);
  CHECK_THROWS_AS(make_grid(tiles, 3, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_grid({}, 1, 1), std::invalid_argument);
}
