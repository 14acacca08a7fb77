#pragma once

// The CLI verbs as plain functions, so the acceptance harness can run them
// in-process. Each returns a process exit code and reports on `out`/`err`.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dragan/eval.hpp"

namespace dragan::cli {

enum Exit : int { kOk = 0, kFailure = 1, kUsage = 2, kNonFinite = 3, kBelowFloor = 4 };

struct GenDataArgs {
  std::filesystem::path out;
  uint64_t seed = 1;
  int classes = 4;  // per category
  int scenes = 10;  // per class
  std::vector<std::string> categories;  // empty = all
  bool high_skew = false;
};
int cmd_gen_data(const GenDataArgs& a, std::ostream& out, std::ostream& err);

struct TrainArgs {
  std::filesystem::path data;  // dataset directory or manifest file
  std::filesystem::path out;
  std::optional<int64_t> iters;
  std::optional<uint64_t> seed;
  std::string ablate = "none";
  std::optional<std::filesystem::path> resume;
  std::optional<std::filesystem::path> config;
  std::vector<std::string> set;  // key=value overrides, applied last
  /// Stop after this iteration even if the schedule runs longer.
  std::optional<int64_t> stop_at;
  /// Train on the non-held-out scenes only.
  bool train_split = false;
  bool quiet = false;
};
int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err);

inline constexpr const char* kMetricsLog = "metrics.log";
inline constexpr const char* kLastCheckpoint = "last.ckpt";
std::filesystem::path snapshot_path(const std::filesystem::path& dir, int64_t iteration);

struct GenerateArgs {
  std::filesystem::path ckpt, image, pictogram, out;
  /// Resample inputs to the model resolution instead of rejecting them.
  bool resize = false;
};
int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err);

struct GridArgs {
  std::filesystem::path ckpt, manifest, out;
  int rows = 4, cols = 4;
  uint64_t seed = 1;
};
int cmd_grid(const GridArgs& a, std::ostream& out, std::ostream& err);

struct GradcheckArgs {
  std::string scope = "ops";
  std::string dtype = "f64";
};
int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err);

struct EvalArgs {
  std::filesystem::path ckpt, manifest;
  uint64_t seed = 1;
  int classifier_epochs = 40;
  /// Score a freshly initialized generator of the checkpoint's config instead.
  bool untrained = false;
  std::optional<std::filesystem::path> report;
};
int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err);

/// Shared by eval and the acceptance harness.
struct EvalOutcome {
  ClassifierReport classifier;
  EvalReport report;
  bool refused = false;  // classifier below the floor
};
EvalOutcome evaluate_checkpoint(const Generator<float>& g, const DatasetManifest& manifest, uint64_t seed,
                                int classifier_epochs);

DatasetManifest open_manifest(const std::filesystem::path& data);

}  // namespace dragan::cli
