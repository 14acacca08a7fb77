#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dragan/checkpoint.hpp"
#include "dragan/gradcheck_suites.hpp"
#include "dragan/image_io.hpp"

namespace dragan::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor<float> to_batch(const Tensor<float>& chw) {
  return chw.reshaped({1, chw.dim(0), chw.dim(1), chw.dim(2)});
}

Tensor<float> resized(const Tensor<float>& chw, int64_t size) {
  if (chw.dim(1) == size && chw.dim(2) == size) return chw;
  NoGradGuard ng;
  const Tensor<float> r = resize_bilinear(constant(to_batch(chw)), size, size).value();
  return r.reshaped({3, size, size});
}

// Keeps the log records up to `iteration`; they must be exactly 1..iteration.
void truncate_log(const fs::path& log, int64_t iteration) {
  std::vector<std::string> keep;
  if (fs::exists(log)) {
    std::istringstream in(read_file(log));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      const int64_t it = std::stoll(line.substr(0, line.find(' ')));
      if (it > iteration) break;
      if (it != static_cast<int64_t>(keep.size()) + 1) {
        throw std::runtime_error("metrics log " + log.string() + " skips or repeats iteration " + std::to_string(it));
      }
      keep.push_back(line);
    }
  }
  if (static_cast<int64_t>(keep.size()) != iteration) {
    throw std::runtime_error("metrics log " + log.string() + " holds " + std::to_string(keep.size()) +
                             " records but the checkpoint is at iteration " + std::to_string(iteration));
  }
  std::ofstream out(log, std::ios::trunc);
  for (const auto& l : keep) out << l << "\n";
}

}  // namespace

DatasetManifest open_manifest(const fs::path& data) {
  return read_manifest(fs::is_directory(data) ? data / kManifestName : data);
}

fs::path snapshot_path(const fs::path& dir, int64_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%06lld.ckpt", static_cast<long long>(iteration));
  return dir / buf;
}

int cmd_gen_data(const GenDataArgs& a, std::ostream& out, std::ostream& err) {
  try {
    DatasetOptions o;
    o.seed = a.seed;
    o.classes_per_category = a.classes;
    o.scenes_per_class = a.scenes;
    o.high_skew = a.high_skew;
    if (!a.categories.empty()) {
      o.categories.clear();
      for (const auto& c : a.categories) o.categories.push_back(parse_category(c));
    }
    const DatasetManifest m = generate_dataset(o, a.out);
    out << "wrote " << m.records.size() << " scenes of " << m.class_ids().size() << " classes to " << a.out.string()
        << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "gen-data: " << e.what() << "\n";
    return kFailure;
  }
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig cfg;
  TrainState state;
  int64_t target = 0;
  try {
    if (a.resume) {
      LoadedCheckpoint ck = load_checkpoint(*a.resume);
      if (!a.set.empty() || a.config || a.seed || a.ablate != "none") {
        throw std::invalid_argument("--resume takes its configuration from the checkpoint");
      }
      cfg = ck.config;
      state = std::move(ck.state);
      target = a.iters.value_or(cfg.iterations);
    } else {
      if (a.config) cfg = TrainConfig::from_text(read_file(*a.config));
      if (a.iters) cfg.iterations = *a.iters;
      if (a.seed) cfg.seed = *a.seed;
      for (const auto& kv : a.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
      }
      apply_ablation(cfg, a.ablate);
      cfg.validate();
      state = TrainState::create(cfg);
      target = cfg.iterations;
    }
  } catch (const std::invalid_argument& e) {
    err << "train: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return kFailure;
  }

  fs::path last_good;
  try {
    const DatasetManifest manifest = open_manifest(a.data);
    std::vector<size_t> subset;
    if (a.train_split) subset = heldout_split(manifest).first;
    const TrainingData data = TrainingData::load(manifest, cfg.generator.resolution, subset);
    fs::create_directories(a.out);
    {
      std::ofstream c(a.out / "config.txt", std::ios::trunc);
      c << cfg.to_text();
    }
    const fs::path log_path = a.out / kMetricsLog;
    if (a.resume) {
      truncate_log(log_path, state.iteration);
      last_good = *a.resume;
    } else {
      std::ofstream(log_path, std::ios::trunc);
    }
    std::ofstream log(log_path, std::ios::app);
    const int64_t stop = a.stop_at ? std::min(*a.stop_at, target) : target;
    if (!a.quiet) {
      std::vector<int> sizes;
      for (int l = cfg.generator.scales - 1; l >= 0; --l) sizes.push_back(cfg.generator.size_at(l));
      out << "# " << metrics_header(sizes) << "\n";
    }
    bool saved = false;
    while (state.iteration < stop) {
      const MetricsRecord rec = run_iteration(state, data, cfg);
      log << rec.to_line() << "\n";
      log.flush();
      saved = false;
      if (state.iteration % cfg.checkpoint_every == 0) {
        save_checkpoint(state, cfg, snapshot_path(a.out, state.iteration));
        save_checkpoint(state, cfg, a.out / kLastCheckpoint);
        last_good = snapshot_path(a.out, state.iteration);
        saved = true;
      }
      if (!a.quiet && (state.iteration % 10 == 0 || state.iteration == stop)) out << rec.to_line() << "\n";
    }
    if (!saved) {
      save_checkpoint(state, cfg, a.out / kLastCheckpoint);
    }
    if (!a.quiet) out << "finished at iteration " << state.iteration << "\n";
    return kOk;
  } catch (const NonFiniteLoss& e) {
    err << "train: " << e.what() << "; last good checkpoint: " << (last_good.empty() ? "none" : last_good.string())
        << "\n";
    return kNonFinite;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return kFailure;
  }
}

int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
    const int64_t r = ck.config.generator.resolution;
    Tensor<float> x = load_image(a.image), p = load_image(a.pictogram);
    for (const Tensor<float>* t : {&x, &p}) {
      if ((t->dim(1) != r || t->dim(2) != r) && !a.resize) {
        throw std::invalid_argument("resolution mismatch: model expects " + std::to_string(r) + "x" +
                                    std::to_string(r) + ", got " + std::to_string(t->dim(2)) + "x" +
                                    std::to_string(t->dim(1)));
      }
    }
    x = resized(x, r);
    p = resized(p, r);
    const Tensor<float> y = generate(ck.state.generator, to_batch(x), to_batch(p));
    save_image(y.reshaped({3, r, r}), a.out);
    out << "wrote " << a.out.string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "generate: " << e.what() << "\n";
    return kFailure;
  }
}

int cmd_grid(const GridArgs& a, std::ostream& out, std::ostream& err) {
  try {
    if (a.rows < 1 || a.cols < 1) throw std::invalid_argument("--rows and --cols must be positive");
    const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
    const DatasetManifest manifest = open_manifest(a.manifest);
    if (manifest.records.empty()) throw std::invalid_argument("manifest is empty");
    const int r = ck.config.generator.resolution;
    const TrainingData data = TrainingData::load(manifest, r);
    std::vector<size_t> pool;
    for (size_t i = 0; i < data.samples.size(); ++i) {
      if (!data.partners(data.samples[i].class_id).empty()) pool.push_back(i);
    }
    const size_t need = static_cast<size_t>(a.rows) * static_cast<size_t>(a.cols);
    if (pool.size() < need) {
      throw std::invalid_argument("grid needs " + std::to_string(need) + " usable samples, manifest has " +
                                  std::to_string(pool.size()));
    }
    RngState rng(a.seed);
    for (size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.below(i)]);
    std::vector<GridTile> tiles;
    for (size_t k = 0; k < need; ++k) {
      const TrainingSample& s = data.samples[pool[k]];
      const auto partners = data.partners(s.class_id);
      const int b = partners[rng.below(partners.size())];
      const Tensor<float>& p = data.pictograms.at(b);
      const Tensor<float> y = generate(ck.state.generator, to_batch(s.image), to_batch(p));
      tiles.push_back({s.image, p, y.reshaped({3, r, r})});
    }
    save_image(make_grid(tiles, a.rows, a.cols), a.out);
    out << "wrote " << a.out.string() << " (" << a.rows * r << "x" << 3 * a.cols * r << ")\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "grid: " << e.what() << "\n";
    return kFailure;
  }
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  GradcheckScope scope;
  try {
    scope = parse_gradcheck_scope(a.scope);
    if (a.dtype != "f64") throw std::invalid_argument("only --dtype=f64 is supported");
  } catch (const std::exception& e) {
    err << "gradcheck: " << e.what() << "\n";
    return kUsage;
  }
  bool ok = true;
  double worst = 0.0;
  for (const auto& r : run_gradcheck_suite(scope)) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-40s max_rel_err %.3e  tol %.0e  %s\n", r.name.c_str(), r.max_rel_error,
                  r.tolerance, r.passed ? "ok" : "FAIL");
    out << buf;
    ok = ok && r.passed;
    worst = std::max(worst, r.max_rel_error);
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "scope %s: %s (worst %.3e)\n", a.scope.c_str(), ok ? "PASS" : "FAIL", worst);
  out << buf;
  return ok ? kOk : kFailure;
}

EvalOutcome evaluate_checkpoint(const Generator<float>& g, const DatasetManifest& manifest, uint64_t seed,
                                int classifier_epochs) {
  const auto [train_idx, held_idx] = heldout_split(manifest);
  const int r = g.config.resolution;
  const TrainingData train = TrainingData::load(manifest, r, train_idx);
  const TrainingData held = TrainingData::load(manifest, r, held_idx);
  ClassifierOptions opts;
  opts.epochs = classifier_epochs;
  opts.seed = derive_seed(seed, 0xC1A55);
  EvalOutcome o{train_reference_classifier(train, held, opts), {}, false};
  if (o.classifier.heldout_accuracy < dragan::kClassifierFloor) {
    o.refused = true;
    return o;
  }
  o.report = evaluate_transfer(o.classifier.classifier, held, generator_transfer(g), seed);
  return o;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  try {
    const LoadedCheckpoint ck = load_checkpoint(a.ckpt);
    const Generator<float> g = a.untrained
                                   ? TrainState::create(ck.config).generator
                                   : ck.state.generator;
    const EvalOutcome o = evaluate_checkpoint(g, open_manifest(a.manifest), a.seed, a.classifier_epochs);
    char buf[120];
    std::snprintf(buf, sizeof buf, "reference classifier held-out accuracy %.4f\n", o.classifier.heldout_accuracy);
    out << buf;
    if (o.refused) {
      err << "eval: reference classifier is below the " << dragan::kClassifierFloor << " floor; refusing to score\n";
      return kBelowFloor;
    }
    out << o.report.to_text();
    if (a.report) {
      std::ofstream f(*a.report, std::ios::trunc);
      f << buf << o.report.to_text();
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace dragan::cli
