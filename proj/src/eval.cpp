#include "dragan/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <sstream>

namespace dragan {

namespace {

Tensor<float> stack(const std::vector<Tensor<float>>& items) {
  const Shape& s = items.front().shape();
  Tensor<float> out({static_cast<int64_t>(items.size()), s[0], s[1], s[2]});
  const int64_t n = items.front().numel();
  for (size_t i = 0; i < items.size(); ++i) {
    std::memcpy(out.ptr() + static_cast<int64_t>(i) * n, items[i].ptr(), static_cast<size_t>(n) * sizeof(float));
  }
  return out;
}

}  // namespace

std::string PsnrResult::to_string() const {
  if (identical) return "identical";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f dB", db);
  return buf;
}

PsnrResult background_psnr(const Tensor<float>& x, const Tensor<float>& y, double cx, double cy, double r,
                           int frame) {
  if (x.shape() != y.shape() || x.rank() != 3 || x.dim(0) != 3) {
    throw std::invalid_argument("background_psnr expects two [3,H,W] images of equal shape, got " +
                                shape_str(x.shape()) + " and " + shape_str(y.shape()));
  }
  if (!(r > 0) || cx < 0 || cy < 0 || cx > frame || cy > frame) {
    throw std::invalid_argument("background_psnr: circle outside the frame");
  }
  const int64_t h = x.dim(1), w = x.dim(2);
  const double sy = static_cast<double>(frame) / static_cast<double>(h);
  const double sx = static_cast<double>(frame) / static_cast<double>(w);
  double sse = 0.0;
  int64_t count = 0;
  for (int64_t i = 0; i < h; ++i) {
    for (int64_t j = 0; j < w; ++j) {
      const double px = (static_cast<double>(j) + 0.5) * sx, py = (static_cast<double>(i) + 0.5) * sy;
      if (std::hypot(px - cx, py - cy) <= r) continue;
      ++count;
      for (int64_t c = 0; c < 3; ++c) {
        const int64_t k = (c * h + i) * w + j;
        const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
        sse += d * d;
      }
    }
  }
  if (count == 0) throw std::invalid_argument("background_psnr: the circle covers the whole frame");
  PsnrResult out;
  out.pixels = count;
  const double mse = sse / static_cast<double>(3 * count);
  if (mse == 0.0) {
    out.identical = true;
    return out;
  }
  out.db = 10.0 * std::log10(4.0 / mse);
  return out;
}

std::pair<std::vector<size_t>, std::vector<size_t>> heldout_split(const DatasetManifest& manifest) {
  std::pair<std::vector<size_t>, std::vector<size_t>> out;
  std::map<int, int> seen;
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    const int k = seen[manifest.records[i].class_id]++;
    (k % 5 == 4 ? out.second : out.first).push_back(i);
  }
  return out;
}

// Classifier -------------------------------------------------------------------

Tensor<float> crop_sign(const Tensor<float>& image, const MaskGeometry& geom, int size,
                        std::array<double, 3> jitter) {
  const Tensor<float> img = image.rank() == 4 ? image.reshaped({image.dim(1), image.dim(2), image.dim(3)}) : image;
  if (img.rank() != 3 || img.dim(0) != 3) throw std::invalid_argument("crop_sign expects [3,H,W], got " + shape_str(image.shape()));
  if (size < 1 || !(geom.r > 0)) throw std::invalid_argument("crop_sign: bad crop size or radius");
  const int64_t h = img.dim(1), w = img.dim(2);
  const double half = geom.r * jitter[2];
  const double cx = geom.cx + jitter[0] * geom.r, cy = geom.cy + jitter[1] * geom.r;
  const double fx = static_cast<double>(w) / geom.frame, fy = static_cast<double>(h) / geom.frame;
  Tensor<float> out({3, size, size});
  for (int i = 0; i < size; ++i) {
    // Frame coordinate of the crop pixel center, then source pixel index space.
    const double sy = std::clamp((cy - half + (i + 0.5) * 2.0 * half / size) * fy - 0.5, 0.0, h - 1.0);
    const auto y0 = static_cast<int64_t>(sy);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double ty = sy - static_cast<double>(y0);
    for (int j = 0; j < size; ++j) {
      const double sx = std::clamp((cx - half + (j + 0.5) * 2.0 * half / size) * fx - 0.5, 0.0, w - 1.0);
      const auto x0 = static_cast<int64_t>(sx);
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double tx = sx - static_cast<double>(x0);
      for (int64_t c = 0; c < 3; ++c) {
        const float* p = img.ptr() + c * h * w;
        const double v = (1 - ty) * ((1 - tx) * p[y0 * w + x0] + tx * p[y0 * w + x1]) +
                         ty * ((1 - tx) * p[y1 * w + x0] + tx * p[y1 * w + x1]);
        out[(c * size + i) * size + j] = static_cast<float>(v);
      }
    }
  }
  return out;
}

ReferenceClassifier ReferenceClassifier::create(int crop, std::vector<int> classes, uint64_t seed) {
  if (crop < 4 || crop % 4 != 0) throw std::invalid_argument("classifier crop size must be a multiple of 4");
  if (classes.size() < 2) throw std::invalid_argument("classifier needs at least two classes");
  RngState rng(seed);
  ReferenceClassifier c;
  c.crop = crop;
  c.classes = std::move(classes);
  c.conv1 = ConvLayer<float>::create(3, 16, 3, 1, rng);
  c.conv2 = ConvLayer<float>::create(16, 32, 3, 2, rng);
  const int64_t q = crop / 4;
  const int64_t d = 32 * q * q;
  const auto k = static_cast<int64_t>(c.classes.size());
  Tensor<float> w({k, d});
  const double bound = std::sqrt(3.0 / static_cast<double>(d));
  for (auto& v : w.data()) v = static_cast<float>(rng.uniform(-bound, bound));
  c.fc_weight = Var<float>(std::move(w), true);
  c.fc_bias = Var<float>(Tensor<float>::zeros({k}), true);
  return c;
}

ParameterList<float> ReferenceClassifier::parameters() const {
  ParameterList<float> out;
  conv1.collect("C.conv1", out);
  conv2.collect("C.conv2", out);
  out.push_back({"C.fc.weight", fc_weight});
  out.push_back({"C.fc.bias", fc_bias});
  return out;
}

Var<float> ReferenceClassifier::logits(const Var<float>& crops) const {
  const Shape& s = crops.shape();
  if (s.size() != 4 || s[1] != 3 || s[2] != crop || s[3] != crop) {
    throw std::invalid_argument("classifier expects " + std::to_string(crop) + "px crops, got " + shape_str(s));
  }
  Var<float> h = relu(conv1.forward(crops));
  h = relu(conv2.forward(h));
  // A 2x downscale with half-pixel centers averages each 2x2 block exactly.
  h = resize_bilinear(h, crop / 4, crop / 4);
  return fully_connected(flatten(h), fc_weight, fc_bias);
}

std::vector<int> ReferenceClassifier::predict(const Tensor<float>& crops) const {
  NoGradGuard ng;
  const Tensor<float> z = logits(constant(crops)).value();
  const int64_t n = z.dim(0), k = z.dim(1);
  std::vector<int> out;
  for (int64_t i = 0; i < n; ++i) {
    int64_t best = 0;
    for (int64_t j = 1; j < k; ++j) {
      if (z[i * k + j] > z[i * k + best]) best = j;
    }
    out.push_back(classes[static_cast<size_t>(best)]);
  }
  return out;
}

int ReferenceClassifier::classify(const Tensor<float>& image, const MaskGeometry& geom) const {
  return predict(crop_sign(image, geom, crop).reshaped({1, 3, crop, crop})).front();
}

double classifier_accuracy(const ReferenceClassifier& clf, const TrainingData& data) {
  int64_t correct = 0;
  const size_t chunk = 32;
  for (size_t start = 0; start < data.samples.size(); start += chunk) {
    std::vector<Tensor<float>> crops;
    const size_t end = std::min(data.samples.size(), start + chunk);
    for (size_t i = start; i < end; ++i) crops.push_back(crop_sign(data.samples[i].image, data.samples[i].geometry, clf.crop));
    const auto pred = clf.predict(stack(crops));
    for (size_t i = start; i < end; ++i) correct += pred[i - start] == data.samples[i].class_id;
  }
  return data.samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

ClassifierReport train_reference_classifier(const TrainingData& train, const TrainingData& heldout,
                                            const ClassifierOptions& options) {
  std::vector<int> classes;
  for (const auto& [c, v] : train.by_class) classes.push_back(c);
  ClassifierReport rep{ReferenceClassifier::create(options.crop, classes, options.seed), 0.0, 0.0};
  ReferenceClassifier& clf = rep.classifier;
  std::map<int, int> label_of;
  for (size_t i = 0; i < classes.size(); ++i) label_of[classes[i]] = static_cast<int>(i);

  const ParameterList<float> params = clf.parameters();
  std::vector<Var<float>> wrt;
  for (const auto& p : params) wrt.push_back(p.var);
  OptimizerState<float> opt = OptimizerState<float>::create(params);
  AdamConfig adam;
  adam.lr = options.lr;
  adam.beta1 = 0.9;
  adam.beta2 = 0.999;
  RngState rng(derive_seed(options.seed, 1));
  std::vector<size_t> order(train.samples.size());
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(options.batch_size)) {
      const size_t end = std::min(order.size(), start + static_cast<size_t>(options.batch_size));
      std::vector<Tensor<float>> crops;
      std::vector<int> labels;
      for (size_t i = start; i < end; ++i) {
        const TrainingSample& s = train.samples[order[i]];
        // Small window jitter so generated signs that are slightly off still classify.
        const std::array<double, 3> jitter{rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08), rng.uniform(0.9, 1.1)};
        crops.push_back(crop_sign(s.image, s.geometry, clf.crop, jitter));
        labels.push_back(label_of.at(s.class_id));
      }
      const Var<float> loss = softmax_cross_entropy(clf.logits(constant(stack(crops))), std::span<const int>(labels));
      const auto g = grad(loss, std::span<const Var<float>>(wrt));
      std::vector<Tensor<float>> gt;
      for (size_t i = 0; i < g.size(); ++i) gt.push_back(g[i].defined() ? g[i].value() : Tensor<float>::zeros(wrt[i].shape()));
      adam_step(params, gt, opt, adam);
    }
  }
  rep.train_accuracy = classifier_accuracy(clf, train);
  rep.heldout_accuracy = classifier_accuracy(clf, heldout);
  return rep;
}

// Transfer accuracy --------------------------------------------------------------

std::pair<int64_t, int64_t> binomial_interval(int64_t n, double p) {
  if (n <= 0 || !(p >= 0 && p <= 1)) throw std::invalid_argument("binomial_interval: bad arguments");
  std::vector<double> pmf(static_cast<size_t>(n + 1));
  for (int64_t k = 0; k <= n; ++k) {
    const double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0);
    const double lp = (k ? k * std::log(p) : 0.0) + (n - k ? static_cast<double>(n - k) * std::log1p(-p) : 0.0);
    pmf[static_cast<size_t>(k)] = std::exp(logc + lp);
  }
  int64_t lo = 0, hi = n;
  double cdf = 0.0;
  for (int64_t k = 0; k <= n; ++k) {
    cdf += pmf[static_cast<size_t>(k)];
    if (cdf >= 0.025) {
      lo = k;
      break;
    }
  }
  double upper = 0.0;
  for (int64_t k = n; k >= 0; --k) {
    upper += pmf[static_cast<size_t>(k)];
    if (upper >= 0.025) {
      hi = k;
      break;
    }
  }
  return {lo, hi};
}

EvalReport evaluate_transfer(const ReferenceClassifier& clf, const TrainingData& heldout, const TransferFn& produce,
                             uint64_t seed) {
  EvalReport rep;
  double psnr_sum = 0.0;
  int64_t psnr_n = 0;
  const int64_t r = heldout.resolution;
  for (size_t i = 0; i < heldout.samples.size(); ++i) {
    const TrainingSample& s = heldout.samples[i];
    const auto partners = heldout.partners(s.class_id);
    if (partners.empty()) continue;
    RngState rng(derive_seed(seed, i));
    const int b = partners[rng.below(partners.size())];
    const Tensor<float> p_b = heldout.pictograms.at(b).reshaped({1, 3, r, r});
    const Transferred t_out = produce(s, p_b, b);
    const Tensor<float>& y = t_out.image;
    const int pred = clf.classify(y, t_out.geometry);
    ClassTally& t = rep.per_class[b];
    ++t.total;
    t.correct += pred == b;
    ++rep.samples;
    const PsnrResult ps = background_psnr(s.image, y.reshaped({3, r, r}), s.geometry.cx, s.geometry.cy,
                                          s.geometry.r, s.geometry.frame);
    if (ps.identical) {
      ++rep.psnr_identical;
    } else {
      psnr_sum += ps.db;
      ++psnr_n;
    }
  }
  if (rep.samples == 0) throw std::invalid_argument("evaluate_transfer: no held-out sample has a partner class");
  int64_t correct = 0;
  for (const auto& [c, t] : rep.per_class) correct += t.correct;
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(rep.samples);
  // Chance: a uniform guess over the classifier's classes.
  rep.num_classes = static_cast<int>(clf.classes.size());
  rep.chance = 1.0 / rep.num_classes;
  const auto [lo, hi] = binomial_interval(rep.samples, rep.chance);
  rep.chance_lo = static_cast<double>(lo) / static_cast<double>(rep.samples);
  rep.chance_hi = static_cast<double>(hi) / static_cast<double>(rep.samples);
  rep.psnr_mean_db = psnr_n ? psnr_sum / static_cast<double>(psnr_n) : 0.0;
  return rep;
}

TransferFn generator_transfer(const Generator<float>& g) {
  return [&g](const TrainingSample& x, const Tensor<float>& p_b, int) {
    const Shape& s = x.image.shape();
    return Transferred{generate(g, x.image.reshaped({1, s[0], s[1], s[2]}), p_b), x.geometry};
  };
}

std::string EvalReport::to_text() const {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "transfer_accuracy %.4f (%lld samples)\n", accuracy, static_cast<long long>(samples));
  o << buf;
  std::snprintf(buf, sizeof buf, "chance %.4f, 95%% interval [%.4f, %.4f]\n", chance, chance_lo, chance_hi);
  o << buf;
  std::snprintf(buf, sizeof buf, "background_psnr_mean %.4f dB (%lld identical)\n", psnr_mean_db,
                static_cast<long long>(psnr_identical));
  o << buf;
  o << "class correct total accuracy\n";
  for (const auto& [c, t] : per_class) {
    std::snprintf(buf, sizeof buf, "%d %lld %lld %.4f\n", c, static_cast<long long>(t.correct),
                  static_cast<long long>(t.total), t.accuracy());
    o << buf;
  }
  return o.str();
}

// Grid -------------------------------------------------------------------------

Tensor<float> make_grid(const std::vector<GridTile>& tiles, int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid needs at least one row and column");
  const size_t need = static_cast<size_t>(rows) * static_cast<size_t>(cols);
  if (tiles.size() < need) {
    throw std::invalid_argument("grid needs " + std::to_string(need) + " samples, got " + std::to_string(tiles.size()));
  }
  const Shape& ts = tiles.front().input.shape();
  if (ts.size() != 3 || ts[0] != 3) throw std::invalid_argument("grid tiles must be [3,H,W]");
  const int64_t th = ts[1], tw = ts[2];
  const int64_t gh = rows * th, gw = 3 * cols * tw;
  Tensor<float> out({3, gh, gw}, -1.0f);
  for (size_t t = 0; t < need; ++t) {
    const int64_t row = static_cast<int64_t>(t) / cols, col = static_cast<int64_t>(t) % cols;
    const Tensor<float>* parts[3] = {&tiles[t].input, &tiles[t].pictogram, &tiles[t].output};
    for (int64_t k = 0; k < 3; ++k) {
      if (parts[k]->shape() != ts) throw std::invalid_argument("grid tiles differ in shape");
      const int64_t ox = (3 * col + k) * tw, oy = row * th;
      for (int64_t c = 0; c < 3; ++c) {
        for (int64_t y = 0; y < th; ++y) {
          std::memcpy(out.ptr() + (c * gh + oy + y) * gw + ox, parts[k]->ptr() + (c * th + y) * tw,
                      static_cast<size_t>(tw) * sizeof(float));
        }
      }
    }
  }
  return out;
}

}  // namespace dragan
