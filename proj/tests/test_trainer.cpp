#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "dragan/checkpoint.hpp"
#include "dragan/trainer.hpp"

using namespace dragan;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.generator.resolution = 16;
  c.generator.base_width = 4;
  c.critic.width = 4;
  c.batch_size = 2;
  c.n_critic = 2;
  c.iterations = 10;
  c.seed = 9;
  return c;
}

const TrainingData& tiny_data() {
  static const TrainingData data = [] {
    const fs::path dir = fs::temp_directory_path() / "dragan_test_trainer_data";
    fs::remove_all(dir);
    DatasetOptions o;
    o.categories = {SignCategory::white_circle, SignCategory::blue_rectangle};
    o.classes_per_category = 2;
    o.scenes_per_class = 3;
    o.seed = 4;
    return TrainingData::load(generate_dataset(o, dir), 16);
  }();
  return data;
}

std::string run_lines(TrainState& s, const TrainConfig& c, int iters) {
  std::string out;
  for (int i = 0; i < iters; ++i) out += run_iteration(s, tiny_data(), c).to_line() + "\n";
  return out;
}

bool states_equal(const TrainState& a, const TrainState& b) {
  const auto pa = a.all_parameters(), pb = b.all_parameters();
  if (pa.size() != pb.size()) return false;
  for (size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].name != pb[i].name || !bitwise_equal(pa[i].var.value(), pb[i].var.value())) return false;
  }
  return a.generator_opt == b.generator_opt && a.critic_opts == b.critic_opts && a.iteration == b.iteration &&
         a.rng == b.rng;
}

}  // namespace

TEST_CASE("config text round trip and errors") {
  TrainConfig c;
  c.lambda = 2.5;
  c.mask_shape = MaskShape::rectangular;
  c.scale_weights = {0.25, 0.5, 1.0};
  c.adam.lr = 3e-4;
  c.generator.dra_enabled = false;
  const TrainConfig back = TrainConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  CHECK(back.lambda == 2.5);
  CHECK(back.scale_weights == std::vector<double>{0.25, 0.5, 1.0});

  const auto over = TrainConfig::from_text("# comment\n\nn_critic = 3\nmask_real=false\n", c);
  CHECK(over.n_critic == 3);
  CHECK_FALSE(over.mask_real);
  CHECK(over.lambda == 2.5);

  auto message = [](const std::string& text) {
    try {
      TrainConfig::from_text(text);
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("lambda = 1\nbogus = 3\n").find("line 2") != std::string::npos);
  CHECK(message("lambda = x\n").find("line 1") != std::string::npos);
  CHECK(message("lambda 1\n").find("line 1") != std::string::npos);
  CHECK(message("mask_real = maybe\n").find("line 1") != std::string::npos);

  TrainConfig s;
  s.set("scales", "2");
  CHECK(s.scale_weights.size() == 2);
  s.set("resolution", "40");
  CHECK_NOTHROW(s.validate());
  s.scale_weights.push_back(1);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  TrainConfig a;
  apply_ablation(a, "dra");
  CHECK_FALSE(a.generator.dra_enabled);
  apply_ablation(a, "mask");
  CHECK(a.mask_shape == MaskShape::none);
  apply_ablation(a, "multiscale");
  CHECK_FALSE(a.generator.multiscale_enabled);
  CHECK_THROWS_AS(apply_ablation(a, "cycle"), std::invalid_argument);

  TrainConfig r;
  r.iterations = 500;
  CHECK(r.mask_spec().ramp_iterations == 250);
  r.mask_ramp = 40;
  CHECK(r.mask_spec().ramp_iterations == 40);
}

TEST_CASE("metrics record contract") {
  CHECK(metrics_header({20, 40, 80}) == "iteration d_loss_20 d_loss_40 d_loss_80 gp_20 gp_40 gp_80 g_adv g_cyc w_estimate");
  MetricsRecord r;
  r.iteration = 12;
  r.sizes = {20, 40, 80};
  r.d_loss = {1.5, -2.25, 1e-7};
  r.gp = {0, 0.125, 3};
  r.g_adv = -4;
  r.g_cyc = 7.75;
  r.w_estimate = 0.5;
  std::set<std::string> keys;
  for (const auto& [k, v] : r.fields()) keys.insert(k);
  CHECK(keys == std::set<std::string>{"iteration", "d_loss_20", "d_loss_40", "d_loss_80", "gp_20", "gp_40", "gp_80",
                                      "g_adv", "g_cyc", "w_estimate"});
  const auto back = MetricsRecord::parse_line(r.to_line(), r.sizes);
  CHECK(back.to_line() == r.to_line());
  CHECK(back.d_loss == r.d_loss);
  CHECK_THROWS(MetricsRecord::parse_line("1 2 3", r.sizes));
}

TEST_CASE("batches pair classes within a category") {
  RngState rng(3);
  const Batch b = sample_batch(tiny_data(), 16, rng);
  CHECK(b.x.shape() == Shape{16, 3, 16, 16});
  for (size_t i = 0; i < 16; ++i) {
    CHECK(b.class_a[i] != b.class_b[i]);
    CHECK(b.class_a[i] / kGlyphCount == b.class_b[i] / kGlyphCount);
  }
  CHECK(tiny_data().partners(tiny_data().by_class.begin()->first).size() == 1);
}

TEST_CASE("training steps are finite, isolated and deterministic") {
  const TrainConfig c = tiny_config();
  TrainState a = TrainState::create(c);
  a.verify_isolation = true;
  TrainState b = TrainState::create(c);
  const std::string la = run_lines(a, c, 3);
  const std::string lb = run_lines(b, c, 3);
  CHECK(la == lb);
  CHECK(a.iteration == 3);
  std::istringstream in(la);
  int64_t expect = 1;
  for (std::string line; std::getline(in, line); ++expect) {
    const auto r = MetricsRecord::parse_line(line, {4, 8, 16});
    CHECK(r.iteration == expect);
    CHECK(r.all_finite());
    for (double g : r.gp) CHECK(g >= 0.0);
  }

  // Inactive coarse critics are left alone in the multiscale ablation.
  TrainConfig m = c;
  apply_ablation(m, "multiscale");
  TrainState s = TrainState::create(m);
  const uint64_t coarse = parameter_hash(s.critics.critics[0].parameters());
  const auto r = run_iteration(s, tiny_data(), m);
  CHECK(r.d_loss[0] == 0.0);
  CHECK(r.d_loss[2] != 0.0);
  CHECK(parameter_hash(s.critics.critics[0].parameters()) == coarse);
}

TEST_CASE("a critic step leaves the generator untouched and vice versa") {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::create(c);
  RngState rng(1);
  std::vector<Batch> cb;
  for (int i = 0; i < c.n_critic; ++i) cb.push_back(sample_batch(tiny_data(), c.batch_size, rng));
  const Batch gb = sample_batch(tiny_data(), c.batch_size, rng);
  const uint64_t g0 = parameter_hash(s.generator.parameters());
  const uint64_t d0 = parameter_hash(s.critics.parameters());
  s.verify_isolation = true;
  CHECK_NOTHROW(train_step(cb, gb, s, c));
  CHECK(parameter_hash(s.generator.parameters()) != g0);
  CHECK(parameter_hash(s.critics.parameters()) != d0);
  CHECK(s.generator_opt.step == 1);
  for (const auto& o : s.critic_opts) CHECK(o.step == static_cast<uint64_t>(c.n_critic));
}

TEST_CASE("non-finite losses abort the step") {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::create(c);
  auto p = s.critics.critics.back().parameters().front().var;
  Tensor<float> bad = p.value();
  bad[0] = std::nanf("");
  p.assign(bad);
  CHECK_THROWS_AS(run_iteration(s, tiny_data(), c), NonFiniteLoss);
}

TEST_CASE("generation never applies the mask") {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::create(c);
  run_iteration(s, tiny_data(), c);
  CHECK(apply_mask_invocations() > 0);
  reset_apply_mask_invocations();
  const auto& smp = tiny_data().samples.front();
  const auto y = generate(s.generator, smp.image.reshaped({1, 3, 16, 16}),
                          tiny_data().pictograms.begin()->second.reshaped({1, 3, 16, 16}));
  CHECK(y.shape() == Shape{1, 3, 16, 16});
  CHECK(apply_mask_invocations() == 0);
}

TEST_CASE("checkpoint round trip and resume equivalence") {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::create(c);
  run_lines(s, c, 2);
  const std::string bytes = encode_checkpoint(s, c);
  CHECK(bytes.substr(0, 4) == "DRAG");

  LoadedCheckpoint back = decode_checkpoint(bytes);
  CHECK(states_equal(back.state, s));
  CHECK(back.config.to_text() == c.to_text());
  CHECK(encode_checkpoint(back.state, back.config) == bytes);

  const fs::path dir = fs::temp_directory_path() / "dragan_test_ckpt";
  fs::create_directories(dir);
  save_checkpoint(s, c, dir / "a.ckpt");
  LoadedCheckpoint f = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(f.state, f.config, dir / "b.ckpt");
  std::ifstream ia(dir / "a.ckpt", std::ios::binary), ib(dir / "b.ckpt", std::ios::binary);
  std::stringstream sa, sb;
  sa << ia.rdbuf();
  sb << ib.rdbuf();
  CHECK(sa.str() == sb.str());

  // Continuing from the checkpoint matches continuing the original.
  CHECK(run_lines(f.state, f.config, 2) == run_lines(s, c, 2));
}

TEST_CASE("corrupt checkpoints are rejected with offsets") {
  const TrainConfig c = tiny_config();
  const TrainState s = TrainState::create(c);
  const std::string bytes = encode_checkpoint(s, c);

  auto error_of = [](const std::string& b) {
    try {
      decode_checkpoint(b);
    } catch (const CheckpointError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string cut = error_of(bytes.substr(0, bytes.size() / 2));
  CHECK(cut.find(std::to_string(bytes.size())) != std::string::npos);
  CHECK(cut.find(std::to_string(bytes.size() / 2)) != std::string::npos);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK(error_of(magic).find("magic") != std::string::npos);

  std::string version = bytes;
  version[4] = 2;
  CHECK(error_of(version).find("version") != std::string::npos);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(error_of(flipped).find("checksum") != std::string::npos);

  CHECK(error_of("DR").find("byte 0") != std::string::npos);

  // A census mismatch leaves the target state untouched.
  TrainConfig other = c;
  other.generator.dra_enabled = false;
  TrainState target = TrainState::create(other);
  const uint64_t before = parameter_hash(target.all_parameters());
  CHECK_THROWS_AS(restore_checkpoint(bytes, target), CheckpointError);
  CHECK(parameter_hash(target.all_parameters()) == before);
  CHECK(target.iteration == 0);
}
