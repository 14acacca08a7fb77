#pragma once

// Evaluation: background PSNR, a small reference classifier, class-transfer
// accuracy and contact-sheet grids.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dragan/trainer.hpp"

namespace dragan {

struct PsnrResult {
  double db = 0.0;
  bool identical = false;  // MSE == 0; db is then meaningless
  int64_t pixels = 0;      // background pixels compared
  std::string to_string() const;
};

/// PSNR (peak 2, values in [-1,1]) over pixels whose centers lie strictly
/// outside the circle. x, y are [3,H,W]; the circle is given in `frame`
/// coordinates like the training mask. Throws if no pixel is outside.
PsnrResult background_psnr(const Tensor<float>& x, const Tensor<float>& y, double cx, double cy, double r,
                           int frame = kFrame);

/// Scenes whose per-class index is 4 mod 5 are held out; returns
/// {train, heldout} record indices.
std::pair<std::vector<size_t>, std::vector<size_t>> heldout_split(const DatasetManifest& manifest);

/// Square crop of side 2r around the sign, bilinearly resampled to
/// size x size. `image` is [3,H,W]; the geometry is in frame coordinates.
/// `jitter` = (dx, dy, scale) perturbs the crop window (dx, dy in units of r).
Tensor<float> crop_sign(const Tensor<float>& image, const MaskGeometry& geom, int size,
                        std::array<double, 3> jitter = {0.0, 0.0, 1.0});

struct ClassifierOptions {
  int crop = 24;
  int epochs = 40;
  int batch_size = 16;
  double lr = 2e-3;
  uint64_t seed = 17;
};

/// Classifies sign crops: conv(3->16) relu, conv(16->32, stride 2) relu,
/// 2x2 average pool, fully connected to one logit per class.
struct ReferenceClassifier {
  int crop = 24;
  std::vector<int> classes;  // logit index -> class id
  ConvLayer<float> conv1, conv2;
  Var<float> fc_weight, fc_bias;

  static ReferenceClassifier create(int crop, std::vector<int> classes, uint64_t seed);
  ParameterList<float> parameters() const;
  Var<float> logits(const Var<float>& crops) const;
  /// Class ids for a [N,3,crop,crop] batch of crops.
  std::vector<int> predict(const Tensor<float>& crops) const;
  /// Class id of the sign at `geom` in a [3,H,W] or [1,3,H,W] image.
  int classify(const Tensor<float>& image, const MaskGeometry& geom) const;
};

/// Accuracy of `clf` over data.samples.
double classifier_accuracy(const ReferenceClassifier& clf, const TrainingData& data);

struct ClassifierReport {
  ReferenceClassifier classifier;
  double heldout_accuracy = 0.0;
  double train_accuracy = 0.0;
};

ClassifierReport train_reference_classifier(const TrainingData& train, const TrainingData& heldout,
                                            const ClassifierOptions& options);

inline constexpr double kClassifierFloor = 0.95;

struct ClassTally {
  int64_t correct = 0;
  int64_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct EvalReport {
  double accuracy = 0.0;
  int64_t samples = 0;
  std::map<int, ClassTally> per_class;  // keyed by target class
  int num_classes = 0;
  double chance = 0.0;
  /// Central 95% acceptance region of Binomial(samples, chance), as fractions.
  double chance_lo = 0.0, chance_hi = 0.0;
  double psnr_mean_db = 0.0;  // over samples with a finite PSNR
  int64_t psnr_identical = 0;
  std::string to_text() const;
};

/// Smallest and largest success counts of the central 95% region of
/// Binomial(n, p).
std::pair<int64_t, int64_t> binomial_interval(int64_t n, double p);

/// A retargeted image [1,3,R,R] and where its sign sits.
struct Transferred {
  Tensor<float> image;
  MaskGeometry geometry;
};

/// Produces the class-b version of sample x given the pictogram p_b [1,3,R,R].
using TransferFn = std::function<Transferred(const TrainingSample& x, const Tensor<float>& p_b, int b)>;

/// For each sample of `heldout`, draws b != a from the same category (sample
/// i uses its own derived stream), produces y and checks clf(y) == b.
EvalReport evaluate_transfer(const ReferenceClassifier& clf, const TrainingData& heldout, const TransferFn& produce,
                             uint64_t seed);

/// Transfer through a generator, with no mask.
TransferFn generator_transfer(const Generator<float>& g);

struct GridTile {
  Tensor<float> input, pictogram, output;  // [3,R,R] each
};

/// rows x (3*cols) tiles, each (input, pictogram, output) triplet side by side.
Tensor<float> make_grid(const std::vector<GridTile>& tiles, int rows, int cols);

}  // namespace dragan
