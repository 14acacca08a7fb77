#pragma once

// Procedural toy traffic signs: front-facing pictograms and posed, lit
// scenes over procedural backgrounds, plus the on-disk dataset manifest.
//
// Colors are linear values in [0, 1] while rendering; tensors handed out are
// mapped to [-1, 1].

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dragan/rng.hpp"
#include "dragan/tensor.hpp"

namespace dragan {

enum class SignCategory { white_triangle = 0, white_circle = 1, blue_rectangle = 2 };

SignCategory parse_category(const std::string& s);
std::string to_string(SignCategory c);
std::vector<SignCategory> all_categories();

using Rgb = std::array<double, 3>;

/// Glyphs: 0 bar, 1 dot, 2 chevron, 3 cross, 4 vertical bar, 5 ring,
/// 6 plus, 7 two dots.
inline constexpr int kGlyphCount = 8;

struct ToySignSpec {
  SignCategory category = SignCategory::white_circle;
  int glyph_id = 0;
  Rgb border{};
  Rgb fill{};
  Rgb glyph{};

  /// Spec with the category's standard palette.
  static ToySignSpec make(SignCategory category, int glyph_id);
  /// Class ids are category * kGlyphCount + glyph_id.
  static ToySignSpec from_class_id(int class_id);
  int class_id() const { return static_cast<int>(category) * kGlyphCount + glyph_id; }
};

/// Row-major 3x3 projective transform.
using Homography = std::array<double, 9>;
inline constexpr Homography kIdentityHomography{1, 0, 0, 0, 1, 0, 0, 0, 1};

/// Pictograms are rendered in an 80x80 frame; the sign is inscribed in a
/// circle of this radius around the frame center.
inline constexpr int kFrame = 80;
inline constexpr double kPictogramRadius = 34.0;

struct SceneParams {
  /// Maps pictogram-frame pixel coordinates to scene pixel coordinates.
  Homography homography = kIdentityHomography;
  Rgb gain{1, 1, 1};
  Rgb bias{0, 0, 0};
  int background_id = 0;  // 0 gradient sky, 1 noise texture, 2 stripes
  uint64_t background_seed = 0;
  double noise_sigma = 0.0;
  uint64_t noise_seed = 0;

  /// Pose limits: 20 degrees of out-of-plane tilt normally, 50 with
  /// `high_skew`.
  static SceneParams random(RngState& rng, bool high_skew = false);
};

struct RenderedScene {
  Tensor<float> image;     // [3,80,80] in [-1,1]
  double cx = 0, cy = 0, r = 0;
  Tensor<float> coverage;  // [1,80,80] fraction of each pixel covered by the sign; empty unless requested
};

Tensor<float> render_pictogram(const ToySignSpec& spec, int size = kFrame);

/// Throws std::invalid_argument if the warped sign leaves the frame or its
/// bounding radius is below 8 pixels.
RenderedScene render_scene(const ToySignSpec& spec, const SceneParams& scene, bool emit_coverage = false);

// Manifest -------------------------------------------------------------------

struct ManifestRecord {
  std::string path;  // relative to the manifest's directory
  int class_id = 0;
  SignCategory category = SignCategory::white_circle;
  double cx = 0, cy = 0, r = 0;
  uint64_t seed = 0;
  bool operator==(const ManifestRecord&) const = default;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding the manifest file
  std::vector<ManifestRecord> records;

  std::vector<int> class_ids() const;  // sorted, unique
  std::filesystem::path image_path(const ManifestRecord& r) const { return root / r.path; }
  std::filesystem::path pictogram_path(int class_id) const;
};

struct ManifestError : std::runtime_error {
  ManifestError(size_t line, const std::string& what)
      : std::runtime_error("manifest line " + std::to_string(line) + ": " + what), line(line) {}
  size_t line;
};

inline constexpr const char* kManifestName = "manifest.tsv";

std::string format_manifest_line(const ManifestRecord& r);
/// Throws ManifestError naming the 1-based line of the first bad record.
DatasetManifest parse_manifest(const std::string& text, const std::filesystem::path& root);
DatasetManifest read_manifest(const std::filesystem::path& manifest_file);
void write_manifest(const DatasetManifest& m, const std::filesystem::path& manifest_file);

struct DatasetOptions {
  std::vector<SignCategory> categories = all_categories();
  int classes_per_category = 4;
  int scenes_per_class = 10;
  uint64_t seed = 1;
  bool high_skew = false;
};

/// Writes images/, pictograms/ and manifest.tsv under out_dir. The manifest
/// is written last, through a temporary file, so a failed run never leaves
/// one behind.
DatasetManifest generate_dataset(const DatasetOptions& options, const std::filesystem::path& out_dir);

}  // namespace dragan
