#pragma once

// Alternating WGAN-GP training: n_critic updates of every per-scale critic,
// then one generator update on adversarial + cycle terms.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dragan/losses.hpp"
#include "dragan/mask.hpp"
#include "dragan/models.hpp"
#include "dragan/optim.hpp"
#include "dragan/synthdata.hpp"

namespace dragan {

struct TrainConfig {
  GeneratorConfig generator;
  CriticConfig critic;
  AdamConfig adam;
  double lambda = 10.0;
  int n_critic = 5;
  int batch_size = 8;
  int64_t iterations = 1000;
  MaskShape mask_shape = MaskShape::circular;
  double mask_floor = 0.1;
  /// 0 means half of `iterations`.
  int64_t mask_ramp = 0;
  /// Also mask the real images entering the critics. Off gives the literal
  /// reading where only generated images are masked.
  bool mask_real = true;
  std::vector<double> scale_weights{1.0, 1.0, 1.0};  // coarsest first
  double cycle_weight = 1.0;
  uint64_t seed = 1;
  int64_t checkpoint_every = 100;

  MaskSpec mask_spec() const;
  void validate() const;

  /// `key = value` lines, one per field, in a fixed order.
  std::string to_text() const;
  /// Applies `key = value` lines on top of `base`. Unknown keys and bad
  /// values throw std::invalid_argument naming the line.
  static TrainConfig from_text(const std::string& text, TrainConfig base);
  static TrainConfig from_text(const std::string& text);
  /// Sets one field from its text form.
  void set(const std::string& key, const std::string& value);
};

/// Turns one component off: "dra", "multiscale", "mask" or "none".
void apply_ablation(TrainConfig& cfg, const std::string& which);

struct TrainingSample {
  Tensor<float> image;  // [3,R,R]
  MaskGeometry geometry;
  int class_id = 0;
  SignCategory category = SignCategory::white_circle;
};

struct TrainingData {
  int resolution = 80;
  std::vector<TrainingSample> samples;
  std::map<int, Tensor<float>> pictograms;  // class id -> [3,R,R]
  std::map<int, std::vector<size_t>> by_class;

  /// Loads the manifest's images and pictograms, resized to `resolution`.
  /// `subset` selects records by index (all when empty).
  static TrainingData load(const DatasetManifest& manifest, int resolution, const std::vector<size_t>& subset = {});
  /// Other classes of the same category as `class_id`.
  std::vector<int> partners(int class_id) const;
};

struct Batch {
  Tensor<float> x;       // [N,3,R,R] inputs of class a
  Tensor<float> p_a;     // pictograms of the input classes
  Tensor<float> p_b;     // target pictograms, same category, b != a
  Tensor<float> real_b;  // real images of the target classes
  std::vector<MaskGeometry> geom_x, geom_real;
  std::vector<int> class_a, class_b;
};

Batch sample_batch(const TrainingData& data, int batch_size, RngState& rng);

struct TrainState {
  Generator<float> generator;
  CriticStack<float> critics;
  OptimizerState<float> generator_opt;
  std::vector<OptimizerState<float>> critic_opts;  // parallel to critics
  int64_t iteration = 0;                            // completed iterations
  RngState rng;
  /// Hash parameters around every update and throw if an update touched
  /// the other network. Not persisted.
  bool verify_isolation = false;

  static TrainState create(const TrainConfig& cfg);
  /// Generator parameters followed by every critic's, in census order.
  ParameterList<float> all_parameters() const;
};

struct MetricsRecord {
  int64_t iteration = 0;
  std::vector<int> sizes;  // coarsest first
  std::vector<double> d_loss, gp;
  double g_adv = 0, g_cyc = 0, w_estimate = 0;

  std::vector<std::pair<std::string, double>> fields() const;
  /// `iteration d_loss_* gp_* g_adv g_cyc w_estimate`, space-separated.
  std::string to_line() const;
  static MetricsRecord parse_line(const std::string& line, const std::vector<int>& sizes);
  bool all_finite() const;
};

std::string metrics_header(const std::vector<int>& sizes);

struct NonFiniteLoss : std::runtime_error {
  NonFiniteLoss(int64_t iteration, const std::string& what)
      : std::runtime_error("non-finite " + what + " at iteration " + std::to_string(iteration)), iteration(iteration) {}
  int64_t iteration;
};

/// One iteration on pre-drawn batches (n_critic critic batches, one
/// generator batch). Advances state.iteration.
MetricsRecord train_step(std::span<const Batch> critic_batches, const Batch& generator_batch, TrainState& state,
                         const TrainConfig& cfg);

/// Draws the batches from state.rng and calls train_step.
MetricsRecord run_iteration(TrainState& state, const TrainingData& data, const TrainConfig& cfg);

uint64_t parameter_hash(const ParameterList<float>& params);

/// Full-resolution generator output with no mask; the inference path.
Tensor<float> generate(const Generator<float>& g, const Tensor<float>& images, const Tensor<float>& pictograms);

}  // namespace dragan
