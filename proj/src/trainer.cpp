#include "dragan/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "dragan/image_io.hpp"

namespace dragan {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return out;
}

template <typename I>
I parse_int(const std::string& key, const std::string& v) {
  I out = 0;
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument(key + ": expected true or false, got '" + v + "'");
}

const char* fmt_bool(bool b) { return b ? "true" : "false"; }

Tensor<float> resize_tensor(const Tensor<float>& t, int64_t size) {
  if (t.dim(t.rank() - 1) == size && t.dim(t.rank() - 2) == size) return t;
  NoGradGuard ng;
  const Shape s = t.shape();
  const bool single = t.rank() == 3;
  const Tensor<float> batched = single ? t.reshaped({1, s[0], s[1], s[2]}) : t;
  Tensor<float> out = resize_bilinear(constant(batched), size, size).value();
  return single ? out.reshaped({s[0], size, size}) : out;
}

void copy_into(Tensor<float>& batch, int64_t index, const Tensor<float>& sample) {
  const int64_t n = sample.numel();
  std::memcpy(batch.ptr() + index * n, sample.ptr(), static_cast<size_t>(n) * sizeof(float));
}

// Levels that contribute to the loss, as indices into the coarsest-first output list.
std::vector<size_t> active_outputs(const GeneratorConfig& g) {
  std::vector<size_t> out;
  const auto s = static_cast<size_t>(g.scales);
  if (g.multiscale_enabled) {
    for (size_t i = 0; i < s; ++i) out.push_back(i);
  } else {
    out.push_back(s - 1);
  }
  return out;
}

std::vector<int> output_sizes(const GeneratorConfig& g) {
  std::vector<int> sizes;
  for (int l = g.scales - 1; l >= 0; --l) sizes.push_back(g.size_at(l));
  return sizes;
}

std::vector<Tensor<float>> values_or_zeros(const std::vector<Var<float>>& grads, const ParameterList<float>& params) {
  std::vector<Tensor<float>> out;
  out.reserve(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    out.push_back(grads[i].defined() ? grads[i].value() : Tensor<float>::zeros(params[i].var.shape()));
  }
  return out;
}

std::vector<Var<float>> vars_of(const ParameterList<float>& params) {
  std::vector<Var<float>> v;
  v.reserve(params.size());
  for (const auto& p : params) v.push_back(p.var);
  return v;
}

}  // namespace

// TrainConfig ------------------------------------------------------------------

MaskSpec TrainConfig::mask_spec() const {
  MaskSpec m;
  m.shape = mask_shape;
  m.floor = mask_floor;
  m.ramp_iterations = mask_ramp > 0 ? mask_ramp : std::max<int64_t>(1, iterations / 2);
  return m;
}

void TrainConfig::validate() const {
  generator.validate();
  adam.validate();
  if (critic.width < 1) throw std::invalid_argument("critic_width must be positive");
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be >= 0");
  if (n_critic < 1) throw std::invalid_argument("n_critic must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (mask_ramp < 0) throw std::invalid_argument("mask_ramp must be >= 0");
  if (checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
  if (scale_weights.size() != static_cast<size_t>(generator.scales)) {
    throw std::invalid_argument("scale_weights needs one entry per scale (" + std::to_string(generator.scales) +
                                ")");
  }
  for (double w : scale_weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("scale_weights must be finite and >= 0");
  }
  if (!(cycle_weight >= 0) || !std::isfinite(cycle_weight)) throw std::invalid_argument("cycle_weight must be >= 0");
  mask_spec().validate();
}

std::string TrainConfig::to_text() const {
  std::ostringstream o;
  o << "resolution = " << generator.resolution << "\n";
  o << "base_width = " << generator.base_width << "\n";
  o << "scales = " << generator.scales << "\n";
  o << "dra_enabled = " << fmt_bool(generator.dra_enabled) << "\n";
  o << "multiscale_enabled = " << fmt_bool(generator.multiscale_enabled) << "\n";
  o << "pictogram_concat_enabled = " << fmt_bool(generator.pictogram_concat_enabled) << "\n";
  o << "critic_width = " << critic.width << "\n";
  o << "critic_conditioned = " << fmt_bool(critic.conditioned) << "\n";
  o << "lr = " << fmt_double(adam.lr) << "\n";
  o << "beta1 = " << fmt_double(adam.beta1) << "\n";
  o << "beta2 = " << fmt_double(adam.beta2) << "\n";
  o << "adam_eps = " << fmt_double(adam.eps) << "\n";
  o << "lambda = " << fmt_double(lambda) << "\n";
  o << "n_critic = " << n_critic << "\n";
  o << "batch_size = " << batch_size << "\n";
  o << "iterations = " << iterations << "\n";
  o << "mask_shape = " << to_string(mask_shape) << "\n";
  o << "mask_floor = " << fmt_double(mask_floor) << "\n";
  o << "mask_ramp = " << mask_ramp << "\n";
  o << "mask_real = " << fmt_bool(mask_real) << "\n";
  o << "scale_weights = ";
  for (size_t i = 0; i < scale_weights.size(); ++i) o << (i ? "," : "") << fmt_double(scale_weights[i]);
  o << "\n";
  o << "cycle_weight = " << fmt_double(cycle_weight) << "\n";
  o << "seed = " << seed << "\n";
  o << "checkpoint_every = " << checkpoint_every << "\n";
  return o.str();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  const std::string& v = value;
  if (key == "resolution") {
    generator.resolution = parse_int<int>(key, v);
  } else if (key == "base_width") {
    generator.base_width = parse_int<int>(key, v);
  } else if (key == "scales") {
    generator.scales = parse_int<int>(key, v);
    if (generator.scales > 0) scale_weights.resize(static_cast<size_t>(generator.scales), 1.0);
  } else if (key == "dra_enabled") {
    generator.dra_enabled = parse_bool(key, v);
  } else if (key == "multiscale_enabled") {
    generator.multiscale_enabled = parse_bool(key, v);
  } else if (key == "pictogram_concat_enabled") {
    generator.pictogram_concat_enabled = parse_bool(key, v);
  } else if (key == "critic_width") {
    critic.width = parse_int<int>(key, v);
  } else if (key == "critic_conditioned") {
    critic.conditioned = parse_bool(key, v);
  } else if (key == "lr") {
    adam.lr = parse_double(key, v);
  } else if (key == "beta1") {
    adam.beta1 = parse_double(key, v);
  } else if (key == "beta2") {
    adam.beta2 = parse_double(key, v);
  } else if (key == "adam_eps") {
    adam.eps = parse_double(key, v);
  } else if (key == "lambda") {
    lambda = parse_double(key, v);
  } else if (key == "n_critic") {
    n_critic = parse_int<int>(key, v);
  } else if (key == "batch_size") {
    batch_size = parse_int<int>(key, v);
  } else if (key == "iterations") {
    iterations = parse_int<int64_t>(key, v);
  } else if (key == "mask_shape") {
    mask_shape = parse_mask_shape(v);
  } else if (key == "mask_floor") {
    mask_floor = parse_double(key, v);
  } else if (key == "mask_ramp") {
    mask_ramp = parse_int<int64_t>(key, v);
  } else if (key == "mask_real") {
    mask_real = parse_bool(key, v);
  } else if (key == "scale_weights") {
    std::vector<double> w;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) w.push_back(parse_double(key, trim(item)));
    scale_weights = std::move(w);
  } else if (key == "cycle_weight") {
    cycle_weight = parse_double(key, v);
  } else if (key == "seed") {
    seed = parse_int<uint64_t>(key, v);
  } else if (key == "checkpoint_every") {
    checkpoint_every = parse_int<int64_t>(key, v);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

TrainConfig TrainConfig::from_text(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(n) + ": expected 'key = value'");
    }
    try {
      base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(n) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig TrainConfig::from_text(const std::string& text) { return from_text(text, TrainConfig{}); }

void apply_ablation(TrainConfig& cfg, const std::string& which) {
  if (which == "dra") {
    cfg.generator.dra_enabled = false;
  } else if (which == "multiscale") {
    cfg.generator.multiscale_enabled = false;
  } else if (which == "mask") {
    cfg.mask_shape = MaskShape::none;
  } else if (which != "none") {
    throw std::invalid_argument("unknown ablation '" + which + "' (dra, multiscale, mask, none)");
  }
}

// Data -----------------------------------------------------------------------

TrainingData TrainingData::load(const DatasetManifest& manifest, int resolution, const std::vector<size_t>& subset) {
  if (resolution < 2) throw std::invalid_argument("training resolution too small");
  TrainingData d;
  d.resolution = resolution;
  std::vector<size_t> idx = subset;
  if (idx.empty()) {
    for (size_t i = 0; i < manifest.records.size(); ++i) idx.push_back(i);
  }
  for (size_t i : idx) {
    const ManifestRecord& r = manifest.records.at(i);
    TrainingSample s;
    s.image = resize_tensor(load_image(manifest.image_path(r)), resolution);
    s.geometry = MaskGeometry{r.cx, r.cy, r.r, kFrame};
    s.class_id = r.class_id;
    s.category = r.category;
    d.by_class[r.class_id].push_back(d.samples.size());
    d.samples.push_back(std::move(s));
    if (!d.pictograms.count(r.class_id)) {
      d.pictograms[r.class_id] = resize_tensor(load_image(manifest.pictogram_path(r.class_id)), resolution);
    }
  }
  if (d.samples.empty()) throw std::invalid_argument("training data is empty");
  return d;
}

std::vector<int> TrainingData::partners(int class_id) const {
  const int cat = class_id / kGlyphCount;
  std::vector<int> out;
  for (const auto& [c, v] : by_class) {
    if (c != class_id && c / kGlyphCount == cat && !v.empty()) out.push_back(c);
  }
  return out;
}

Batch sample_batch(const TrainingData& data, int batch_size, RngState& rng) {
  std::vector<int> sources;
  for (const auto& [c, v] : data.by_class) {
    if (!data.partners(c).empty()) sources.push_back(c);
  }
  if (sources.empty()) throw std::invalid_argument("no category has two classes to swap between");
  const int64_t n = batch_size, r = data.resolution;
  const Shape shape{n, 3, r, r};
  Batch b{Tensor<float>(shape), Tensor<float>(shape), Tensor<float>(shape), Tensor<float>(shape), {}, {}, {}, {}};
  for (int64_t i = 0; i < n; ++i) {
    const int a = sources[rng.below(sources.size())];
    const auto& pool_a = data.by_class.at(a);
    const TrainingSample& x = data.samples[pool_a[rng.below(pool_a.size())]];
    const auto partners = data.partners(a);
    const int target = partners[rng.below(partners.size())];
    const auto& pool_b = data.by_class.at(target);
    const TrainingSample& real = data.samples[pool_b[rng.below(pool_b.size())]];
    copy_into(b.x, i, x.image);
    copy_into(b.p_a, i, data.pictograms.at(a));
    copy_into(b.p_b, i, data.pictograms.at(target));
    copy_into(b.real_b, i, real.image);
    b.geom_x.push_back(x.geometry);
    b.geom_real.push_back(real.geometry);
    b.class_a.push_back(a);
    b.class_b.push_back(target);
  }
  return b;
}

// State ----------------------------------------------------------------------

TrainState TrainState::create(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s{Generator<float>::create(cfg.generator, derive_seed(cfg.seed, 1)),
               CriticStack<float>::create(cfg.generator, cfg.critic, derive_seed(cfg.seed, 2)),
               {},
               {},
               0,
               RngState(derive_seed(cfg.seed, 3)),
               false};
  s.generator_opt = OptimizerState<float>::create(s.generator.parameters());
  for (const auto& c : s.critics.critics) s.critic_opts.push_back(OptimizerState<float>::create(c.parameters()));
  return s;
}

ParameterList<float> TrainState::all_parameters() const {
  ParameterList<float> all = generator.parameters();
  for (auto& p : critics.parameters()) all.push_back(std::move(p));
  return all;
}

uint64_t parameter_hash(const ParameterList<float>& params) {
  uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (const auto& p : params) {
    for (float v : p.var.value().data()) {
      uint32_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

// Metrics --------------------------------------------------------------------

std::vector<std::pair<std::string, double>> MetricsRecord::fields() const {
  std::vector<std::pair<std::string, double>> f;
  f.emplace_back("iteration", static_cast<double>(iteration));
  for (size_t i = 0; i < sizes.size(); ++i) f.emplace_back("d_loss_" + std::to_string(sizes[i]), d_loss[i]);
  for (size_t i = 0; i < sizes.size(); ++i) f.emplace_back("gp_" + std::to_string(sizes[i]), gp[i]);
  f.emplace_back("g_adv", g_adv);
  f.emplace_back("g_cyc", g_cyc);
  f.emplace_back("w_estimate", w_estimate);
  return f;
}

std::string metrics_header(const std::vector<int>& sizes) {
  MetricsRecord r;
  r.sizes = sizes;
  r.d_loss.assign(sizes.size(), 0);
  r.gp.assign(sizes.size(), 0);
  std::string out;
  for (const auto& [k, v] : r.fields()) out += (out.empty() ? "" : " ") + k;
  return out;
}

std::string MetricsRecord::to_line() const {
  std::string out = std::to_string(iteration);
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, " %.9g", v);
    out += buf;
  };
  for (double v : d_loss) put(v);
  for (double v : gp) put(v);
  put(g_adv);
  put(g_cyc);
  put(w_estimate);
  return out;
}

MetricsRecord MetricsRecord::parse_line(const std::string& line, const std::vector<int>& sizes) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  const size_t want = 4 + 2 * sizes.size();
  if (tok.size() != want) {
    throw std::invalid_argument("metrics line has " + std::to_string(tok.size()) + " fields, expected " +
                                std::to_string(want));
  }
  MetricsRecord r;
  r.sizes = sizes;
  r.iteration = parse_int<int64_t>("iteration", tok[0]);
  size_t k = 1;
  for (size_t i = 0; i < sizes.size(); ++i) r.d_loss.push_back(parse_double("d_loss", tok[k++]));
  for (size_t i = 0; i < sizes.size(); ++i) r.gp.push_back(parse_double("gp", tok[k++]));
  r.g_adv = parse_double("g_adv", tok[k++]);
  r.g_cyc = parse_double("g_cyc", tok[k++]);
  r.w_estimate = parse_double("w_estimate", tok[k++]);
  return r;
}

bool MetricsRecord::all_finite() const {
  for (const auto& [k, v] : fields()) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// Training -------------------------------------------------------------------

MetricsRecord train_step(std::span<const Batch> critic_batches, const Batch& generator_batch, TrainState& state,
                         const TrainConfig& cfg) {
  const auto& gcfg = state.generator.config;
  if (critic_batches.size() != static_cast<size_t>(cfg.n_critic)) {
    throw std::invalid_argument("train_step needs n_critic critic batches");
  }
  const int64_t it = state.iteration;
  const int64_t next = it + 1;
  const std::vector<int> sizes = output_sizes(gcfg);
  const std::vector<size_t> active = active_outputs(gcfg);
  const MaskSpec mspec = cfg.mask_spec();
  const bool masking = cfg.mask_shape != MaskShape::none;

  MetricsRecord rec;
  rec.iteration = next;
  rec.sizes = sizes;
  rec.d_loss.assign(sizes.size(), 0.0);
  rec.gp.assign(sizes.size(), 0.0);
  double w_sum = 0.0;

  auto mask_for = [&](const Var<float>& y, const std::vector<MaskGeometry>& geoms, int size) {
    if (!masking) return y;
    return apply_mask(y, make_mask_batch<float>(mspec, geoms, it, size, size));
  };

  // Critic updates.
  for (const Batch& b : critic_batches) {
    GeneratorOutput<float> fakes;
    {
      NoGradGuard ng;
      fakes = generator_forward(constant(b.x), constant(b.p_b), state.generator);
    }
    const uint64_t g_before = state.verify_isolation ? parameter_hash(state.generator.parameters()) : 0;
    const Var<float> p_b = constant(b.p_b);
    for (size_t i : active) {
      const int size = sizes[i];
      Critic<float>& critic = state.critics.critics[i];
      const Var<float> real = constant(resize_tensor(b.real_b, size));
      const Var<float> real_in = cfg.mask_real ? mask_for(real, b.geom_real, size) : real;
      const Var<float> fake = mask_for(fakes.images[i].detach(), b.geom_x, size);
      const CriticFn<float> fn = [&critic, &p_b](const Var<float>& v) { return critic.forward(v, p_b); };
      const CriticLoss<float> loss = critic_loss(fn, real_in, fake, cfg.lambda, state.rng);
      const double total = loss.total.value()[0];
      const double penalty = loss.penalty.defined() ? static_cast<double>(loss.penalty.value()[0]) : 0.0;
      if (!std::isfinite(total) || !std::isfinite(penalty)) {
        throw NonFiniteLoss(next, "critic loss at scale " + std::to_string(size));
      }
      const ParameterList<float> params = critic.parameters();
      const std::vector<Var<float>> wrt = vars_of(params);
      const auto grads = grad(loss.total, std::span<const Var<float>>(wrt));
      try {
        adam_step(params, values_or_zeros(grads, params), state.critic_opts[i], cfg.adam);
      } catch (const NonFiniteGradient& e) {
        throw NonFiniteLoss(next, std::string("critic gradient (") + e.what() + ")");
      }
      rec.d_loss[i] += total / cfg.n_critic;
      rec.gp[i] += penalty / cfg.n_critic;
      if (i == sizes.size() - 1) w_sum += loss.real_score - loss.fake_score;
    }
    if (state.verify_isolation && parameter_hash(state.generator.parameters()) != g_before) {
      throw std::logic_error("critic update changed generator parameters");
    }
  }
  rec.w_estimate = w_sum / cfg.n_critic;

  // Generator update.
  const Batch& b = generator_batch;
  const uint64_t d_before = state.verify_isolation ? parameter_hash(state.critics.parameters()) : 0;
  const Var<float> x = constant(b.x);
  const Var<float> p_b = constant(b.p_b);
  const GeneratorOutput<float> out = generator_forward(x, p_b, state.generator);
  const Var<float> x_rec = generator_forward(out.full(), constant(b.p_a), state.generator).full();
  Var<float> adv_total, cyc_total;
  double adv_log = 0.0, cyc_log = 0.0;
  for (size_t i : active) {
    const int size = sizes[i];
    const float w = static_cast<float>(cfg.scale_weights[i]);
    const Critic<float>& critic = state.critics.critics[i];
    const CriticFn<float> fn = [&critic, &p_b](const Var<float>& v) { return critic.forward(v, p_b); };
    const Var<float> adv = generator_adv_loss(fn, mask_for(out.images[i], b.geom_x, size));
    Var<float> xs = x, rs = x_rec;
    if (size != gcfg.resolution) {
      xs = constant(resize_tensor(b.x, size));
      rs = resize_bilinear(x_rec, size, size);
    }
    const Var<float> cyc = cycle_loss(xs, rs);
    adv_log += w * static_cast<double>(adv.value()[0]);
    cyc_log += w * static_cast<double>(cyc.value()[0]);
    const Var<float> wa = scale(adv, w);
    const Var<float> wc = scale(cyc, w);
    adv_total = adv_total.defined() ? add(adv_total, wa) : wa;
    cyc_total = cyc_total.defined() ? add(cyc_total, wc) : wc;
  }
  rec.g_adv = adv_log;
  rec.g_cyc = cyc_log;
  if (!std::isfinite(adv_log) || !std::isfinite(cyc_log)) throw NonFiniteLoss(next, "generator loss");
  const Var<float> g_loss = add(adv_total, scale(cyc_total, static_cast<float>(cfg.cycle_weight)));
  const ParameterList<float> gparams = state.generator.parameters();
  const std::vector<Var<float>> gwrt = vars_of(gparams);
  const auto ggrads = grad(g_loss, std::span<const Var<float>>(gwrt));
  try {
    adam_step(gparams, values_or_zeros(ggrads, gparams), state.generator_opt, cfg.adam);
  } catch (const NonFiniteGradient& e) {
    throw NonFiniteLoss(next, std::string("generator gradient (") + e.what() + ")");
  }
  if (state.verify_isolation && parameter_hash(state.critics.parameters()) != d_before) {
    throw std::logic_error("generator update changed critic parameters");
  }
  state.iteration = next;
  return rec;
}

MetricsRecord run_iteration(TrainState& state, const TrainingData& data, const TrainConfig& cfg) {
  if (data.resolution != state.generator.config.resolution) {
    throw std::invalid_argument("training data resolution does not match the generator");
  }
  std::vector<Batch> critic_batches;
  for (int k = 0; k < cfg.n_critic; ++k) critic_batches.push_back(sample_batch(data, cfg.batch_size, state.rng));
  const Batch gen = sample_batch(data, cfg.batch_size, state.rng);
  return train_step(critic_batches, gen, state, cfg);
}

Tensor<float> generate(const Generator<float>& g, const Tensor<float>& images, const Tensor<float>& pictograms) {
  NoGradGuard ng;
  return generator_forward(constant(images), constant(pictograms), g).full().value();
}

}  // namespace dragan
