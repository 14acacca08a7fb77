#include "dragan/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "dragan/image_io.hpp"

namespace dragan {

namespace fs = std::filesystem;

SignCategory parse_category(const std::string& s) {
  if (s == "white_triangle") return SignCategory::white_triangle;
  if (s == "white_circle") return SignCategory::white_circle;
  if (s == "blue_rectangle") return SignCategory::blue_rectangle;
  throw std::invalid_argument("unknown category '" + s + "'");
}

std::string to_string(SignCategory c) {
  switch (c) {
    case SignCategory::white_triangle: return "white_triangle";
    case SignCategory::white_circle: return "white_circle";
    case SignCategory::blue_rectangle: return "blue_rectangle";
  }
  return "?";
}

std::vector<SignCategory> all_categories() {
  return {SignCategory::white_triangle, SignCategory::white_circle, SignCategory::blue_rectangle};
}

ToySignSpec ToySignSpec::make(SignCategory category, int glyph_id) {
  if (glyph_id < 0 || glyph_id >= kGlyphCount) {
    throw std::invalid_argument("unknown glyph id " + std::to_string(glyph_id));
  }
  ToySignSpec s;
  s.category = category;
  s.glyph_id = glyph_id;
  if (category == SignCategory::blue_rectangle) {
    s.border = {0.95, 0.95, 0.95};
    s.fill = {0.10, 0.30, 0.75};
    s.glyph = {0.95, 0.95, 0.95};
  } else {
    s.border = {0.80, 0.10, 0.10};
    s.fill = {0.95, 0.95, 0.95};
    s.glyph = {0.05, 0.05, 0.05};
  }
  return s;
}

ToySignSpec ToySignSpec::from_class_id(int class_id) {
  if (class_id < 0 || class_id >= 3 * kGlyphCount) {
    throw std::invalid_argument("class id " + std::to_string(class_id) + " out of range");
  }
  return make(static_cast<SignCategory>(class_id / kGlyphCount), class_id % kGlyphCount);
}

namespace {

constexpr int kSuper = 4;  // subsamples per pixel axis
constexpr Rgb kPictogramBackground{0.5, 0.5, 0.5};

bool in_glyph(int id, double a, double b) {
  const double ra = std::abs(a), rb = std::abs(b);
  switch (id) {
    case 0: return rb <= 0.2 && ra <= 0.8;
    case 1: return a * a + b * b <= 0.45 * 0.45;
    case 2: return std::abs(b - (0.9 * ra - 0.35)) <= 0.22 && ra <= 0.75;
    case 3: return (std::abs(a - b) <= 0.28 || std::abs(a + b) <= 0.28) && ra <= 0.7 && rb <= 0.7;
    case 4: return ra <= 0.2 && rb <= 0.8;
    case 5: {
      const double r = std::sqrt(a * a + b * b);
      return r >= 0.45 && r <= 0.75;
    }
    case 6: return (ra <= 0.2 && rb <= 0.8) || (rb <= 0.2 && ra <= 0.8);
    case 7: return (a - 0.45) * (a - 0.45) + b * b <= 0.09 || (a + 0.45) * (a + 0.45) + b * b <= 0.09;
    default: return false;
  }
}

// Color of the sign at normalized coordinates (unit circumradius, y down),
// or nothing outside the sign.
std::optional<Rgb> sign_color(const ToySignSpec& s, double u, double v) {
  double glyph_scale = 0;
  bool border = false;
  switch (s.category) {
    case SignCategory::white_circle: {
      const double d = std::sqrt(u * u + v * v);
      if (d > 1.0) return std::nullopt;
      border = d > 0.8;
      glyph_scale = 0.55;
      break;
    }
    case SignCategory::white_triangle: {
      // Upward equilateral triangle, circumradius 1, inradius 0.5.
      const double e = std::max({v, 0.8660254037844386 * u - 0.5 * v, -0.8660254037844386 * u - 0.5 * v});
      if (e > 0.5) return std::nullopt;
      border = e > 0.31;
      glyph_scale = 0.26;
      break;
    }
    case SignCategory::blue_rectangle: {
      const double e = std::max(std::abs(u), std::abs(v));
      if (e > 0.7) return std::nullopt;
      border = e > 0.62;
      glyph_scale = 0.48;
      break;
    }
  }
  if (border) return s.border;
  if (in_glyph(s.glyph_id, u / glyph_scale, v / glyph_scale)) return s.glyph;
  return s.fill;
}

std::array<double, 2> apply_h(const Homography& h, double x, double y) {
  const double w = h[6] * x + h[7] * y + h[8];
  return {(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w};
}

Homography invert(const Homography& m) {
  const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6], h = m[7], i = m[8];
  const double A = e * i - f * h, B = -(d * i - f * g), C = d * h - e * g;
  const double det = a * A + b * B + c * C;
  if (std::abs(det) < 1e-12) throw std::invalid_argument("singular homography");
  const double s = 1.0 / det;
  return {A * s, -(b * i - c * h) * s, (b * f - c * e) * s, B * s, (a * i - c * g) * s, -(a * f - c * d) * s,
          C * s, -(a * h - b * g) * s, (a * e - b * d) * s};
}

Homography multiply(const Homography& x, const Homography& y) {
  Homography r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double acc = 0;
      for (int k = 0; k < 3; ++k) acc += x[i * 3 + k] * y[k * 3 + j];
      r[i * 3 + j] = acc;
    }
  }
  return r;
}

// Averages the sign over one pixel's subsample grid. `to_frame` maps a scene
// point to pictogram-frame coordinates. Returns the sum of sign colors and
// the number of covering subsamples.
template <class ToFrame>
std::pair<Rgb, int> sample_pixel(const ToySignSpec& spec, int64_t i, int64_t j, ToFrame to_frame) {
  Rgb acc{0, 0, 0};
  int hits = 0;
  for (int sy = 0; sy < kSuper; ++sy) {
    for (int sx = 0; sx < kSuper; ++sx) {
      const double px = static_cast<double>(j) + (sx + 0.5) / kSuper;
      const double py = static_cast<double>(i) + (sy + 0.5) / kSuper;
      const auto q = to_frame(px, py);
      if (!q) continue;
      const double u = ((*q)[0] - kFrame / 2.0) / kPictogramRadius;
      const double v = ((*q)[1] - kFrame / 2.0) / kPictogramRadius;
      if (const auto c = sign_color(spec, u, v)) {
        for (int k = 0; k < 3; ++k) acc[static_cast<size_t>(k)] += (*c)[static_cast<size_t>(k)];
        ++hits;
      }
    }
  }
  return {acc, hits};
}

double lerp(double a, double b, double t) { return a + (b - a) * t; }

struct Background {
  int id = 0;
  Rgb c1{}, c2{};
  double angle = 0, period = 10, phase = 0;
  std::vector<Rgb> grid;  // noise texture lattice
  static constexpr int kLattice = 6;

  Background(int id_, uint64_t seed) : id(id_) {
    RngState rng(seed);
    if (id == 0) {
      c1 = {rng.uniform(0.3, 0.6), rng.uniform(0.5, 0.8), rng.uniform(0.7, 1.0)};
      c2 = {rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)};
    } else if (id == 1) {
      for (int k = 0; k < kLattice * kLattice; ++k) grid.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)});
    } else if (id == 2) {
      c1 = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      c2 = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
      angle = rng.uniform(0.0, std::numbers::pi);
      period = rng.uniform(6.0, 20.0);
      phase = rng.uniform(0.0, 2 * std::numbers::pi);
    } else {
      throw std::invalid_argument("unknown background id " + std::to_string(id));
    }
  }

  Rgb at(double x, double y) const {
    Rgb out{};
    if (id == 0) {
      const double t = y / kFrame;
      for (size_t k = 0; k < 3; ++k) out[k] = lerp(c1[k], c2[k], t);
    } else if (id == 1) {
      const double gx = x / kFrame * (kLattice - 1), gy = y / kFrame * (kLattice - 1);
      const int x0 = std::min(static_cast<int>(gx), kLattice - 2), y0 = std::min(static_cast<int>(gy), kLattice - 2);
      double tx = gx - x0, ty = gy - y0;
      tx = tx * tx * (3 - 2 * tx);
      ty = ty * ty * (3 - 2 * ty);
      const auto& a = grid[static_cast<size_t>(y0 * kLattice + x0)];
      const auto& b = grid[static_cast<size_t>(y0 * kLattice + x0 + 1)];
      const auto& c = grid[static_cast<size_t>((y0 + 1) * kLattice + x0)];
      const auto& d = grid[static_cast<size_t>((y0 + 1) * kLattice + x0 + 1)];
      for (size_t k = 0; k < 3; ++k) out[k] = lerp(lerp(a[k], b[k], tx), lerp(c[k], d[k], tx), ty);
    } else {
      const double s = 0.5 + 0.5 * std::sin(2 * std::numbers::pi * (x * std::cos(angle) + y * std::sin(angle)) / period + phase);
      for (size_t k = 0; k < 3; ++k) out[k] = lerp(c1[k], c2[k], s);
    }
    return out;
  }
};

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

}  // namespace

Tensor<float> render_pictogram(const ToySignSpec& spec, int size) {
  if (size < 1) throw std::invalid_argument("pictogram size must be positive");
  if (spec.glyph_id < 0 || spec.glyph_id >= kGlyphCount) {
    throw std::invalid_argument("unknown glyph id " + std::to_string(spec.glyph_id));
  }
  const double step = static_cast<double>(kFrame) / size;
  const int64_t n = size;
  Tensor<float> out({3, n, n});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      const auto [acc, hits] = sample_pixel(spec, i, j, [step](double x, double y) {
        return std::optional<std::array<double, 2>>({x * step, y * step});
      });
      const double cover = static_cast<double>(hits) / (kSuper * kSuper);
      for (int64_t c = 0; c < 3; ++c) {
        const double sign = hits ? acc[static_cast<size_t>(c)] / hits : 0.0;
        const double v = cover * sign + (1 - cover) * kPictogramBackground[static_cast<size_t>(c)];
        out.ptr()[(c * n + i) * n + j] = static_cast<float>(2 * v - 1);
      }
    }
  }
  return out;
}

SceneParams SceneParams::random(RngState& rng, bool high_skew) {
  const double deg = std::numbers::pi / 180.0;
  const double max_tilt = (high_skew ? 50.0 : 20.0) * deg;
  const double rho = rng.uniform(18.0, 28.0);
  const double alpha = rng.uniform(-max_tilt, max_tilt);
  const double beta = rng.uniform(-max_tilt, max_tilt);
  const double theta = rng.uniform(-12.0, 12.0) * deg;

  // Sign plane rotated in 3D at distance d from a pinhole with focal f.
  const double d = 6.0, f = rho * d;
  const double ca = std::cos(alpha), sa = std::sin(alpha), cb = std::cos(beta), sb = std::sin(beta);
  const double ct = std::cos(theta), st = std::sin(theta);
  const Homography rx{1, 0, 0, 0, ca, -sa, 0, sa, ca};
  const Homography ry{cb, 0, sb, 0, 1, 0, -sb, 0, cb};
  const Homography rz{ct, -st, 0, st, ct, 0, 0, 0, 1};
  const Homography rot = multiply(rx, multiply(ry, rz));
  const Homography m{rot[0], rot[1], 0, rot[3], rot[4], 0, rot[6], rot[7], d};
  const Homography a{f, 0, 0, 0, f, 0, 0, 0, 1};
  const double k = 1.0 / kPictogramRadius;
  const Homography b{k, 0, -kFrame / 2.0 * k, 0, k, -kFrame / 2.0 * k, 0, 0, 1};
  Homography h = multiply(a, multiply(m, b));

  double rb = 0;
  for (int t = 0; t < 360; ++t) {
    const double ang = 2 * std::numbers::pi * t / 360;
    const auto p = apply_h(h, kFrame / 2.0 + kPictogramRadius * std::cos(ang), kFrame / 2.0 + kPictogramRadius * std::sin(ang));
    rb = std::max(rb, std::hypot(p[0], p[1]));
  }
  rb += 2.0;
  const double cx = rng.uniform(rb, kFrame - rb), cy = rng.uniform(rb, kFrame - rb);
  h = multiply(Homography{1, 0, cx, 0, 1, cy, 0, 0, 1}, h);

  SceneParams s;
  s.homography = h;
  for (size_t c = 0; c < 3; ++c) s.gain[c] = rng.uniform(0.6, 1.4);
  for (size_t c = 0; c < 3; ++c) s.bias[c] = rng.uniform(-0.15, 0.15);
  s.background_id = static_cast<int>(rng.below(3));
  s.background_seed = rng.next_u64();
  s.noise_sigma = rng.uniform(0.0, 0.04);
  s.noise_seed = rng.next_u64();
  return s;
}

RenderedScene render_scene(const ToySignSpec& spec, const SceneParams& scene, bool emit_coverage) {
  const Homography& h = scene.homography;
  const Homography inv = invert(h);

  // Bounding circle of the warped sign: the sign lies inside the
  // pictogram's circumcircle, whose image is convex. One pixel of slack
  // keeps partially covered pixel centers inside too.
  const auto center = apply_h(h, kFrame / 2.0, kFrame / 2.0);
  double r = 0;
  for (int t = 0; t < 720; ++t) {
    const double ang = 2 * std::numbers::pi * t / 720;
    const double qx = kFrame / 2.0 + kPictogramRadius * std::cos(ang), qy = kFrame / 2.0 + kPictogramRadius * std::sin(ang);
    if (h[6] * qx + h[7] * qy + h[8] <= 0) throw std::invalid_argument("sign crosses the camera plane");
    const auto p = apply_h(h, qx, qy);
    r = std::max(r, std::hypot(p[0] - center[0], p[1] - center[1]));
  }
  r += 1.0;
  if (r < 8.0) throw std::invalid_argument("sign radius below 8 pixels");
  if (center[0] - r < 0 || center[1] - r < 0 || center[0] + r > kFrame || center[1] + r > kFrame) {
    throw std::invalid_argument("sign leaves the frame");
  }

  const Background bg(scene.background_id, scene.background_seed);
  RngState noise(scene.noise_seed);
  RenderedScene out;
  out.cx = center[0];
  out.cy = center[1];
  out.r = r;
  const int64_t n = kFrame;
  out.image = Tensor<float>({3, n, n});
  if (emit_coverage) out.coverage = Tensor<float>({1, n, n});
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      const auto [acc, hits] = sample_pixel(spec, i, j, [&inv](double x, double y) -> std::optional<std::array<double, 2>> {
        const double w = inv[6] * x + inv[7] * y + inv[8];
        if (w <= 0) return std::nullopt;
        return std::array<double, 2>{(inv[0] * x + inv[1] * y + inv[2]) / w, (inv[3] * x + inv[4] * y + inv[5]) / w};
      });
      const double cover = static_cast<double>(hits) / (kSuper * kSuper);
      const Rgb back = bg.at(static_cast<double>(j) + 0.5, static_cast<double>(i) + 0.5);
      for (int64_t c = 0; c < 3; ++c) {
        const auto ci = static_cast<size_t>(c);
        const double sign = hits ? clamp01(scene.gain[ci] * (acc[ci] / hits) + scene.bias[ci]) : 0.0;
        double v = cover * sign + (1 - cover) * back[ci];
        if (scene.noise_sigma > 0) v += scene.noise_sigma * noise.normal();
        out.image.ptr()[(c * n + i) * n + j] = static_cast<float>(2 * clamp01(v) - 1);
      }
      if (emit_coverage) out.coverage.ptr()[i * n + j] = static_cast<float>(cover);
    }
  }
  return out;
}

// Manifest -------------------------------------------------------------------

std::vector<int> DatasetManifest::class_ids() const {
  std::set<int> s;
  for (const auto& r : records) s.insert(r.class_id);
  return {s.begin(), s.end()};
}

fs::path DatasetManifest::pictogram_path(int class_id) const {
  return root / "pictograms" / (std::to_string(class_id) + ".png");
}

std::string format_manifest_line(const ManifestRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s\t%d\t%s\t%.3f\t%.3f\t%.3f\t%llu", r.path.c_str(), r.class_id,
                to_string(r.category).c_str(), r.cx, r.cy, r.r, static_cast<unsigned long long>(r.seed));
  return buf;
}

namespace {

template <typename N>
N parse_number(const std::string& field, size_t line, const char* what) {
  N v{};
  const char* end = field.data() + field.size();
  const auto [p, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc() || p != end || field.empty()) {
    throw ManifestError(line, std::string("bad ") + what + " '" + field + "'");
  }
  return v;
}

}  // namespace

DatasetManifest parse_manifest(const std::string& text, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    size_t start = 0;
    for (;;) {
      const size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() != 7) {
      throw ManifestError(lineno, "expected 7 tab-separated fields, found " + std::to_string(f.size()));
    }
    ManifestRecord r;
    r.path = f[0];
    if (r.path.empty()) throw ManifestError(lineno, "empty path");
    r.class_id = parse_number<int>(f[1], lineno, "class id");
    try {
      r.category = parse_category(f[2]);
    } catch (const std::invalid_argument& e) {
      throw ManifestError(lineno, e.what());
    }
    if (r.class_id < 0 || r.class_id / kGlyphCount != static_cast<int>(r.category)) {
      throw ManifestError(lineno, "class id " + f[1] + " does not belong to category " + f[2]);
    }
    r.cx = parse_number<double>(f[3], lineno, "cx");
    r.cy = parse_number<double>(f[4], lineno, "cy");
    r.r = parse_number<double>(f[5], lineno, "r");
    if (!(r.r > 0)) throw ManifestError(lineno, "radius must be positive");
    r.seed = parse_number<uint64_t>(f[6], lineno, "seed");
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest read_manifest(const fs::path& manifest_file) {
  std::ifstream in(manifest_file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), manifest_file.parent_path());
}

void write_manifest(const DatasetManifest& m, const fs::path& manifest_file) {
  const fs::path tmp = manifest_file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    for (const auto& r : m.records) out << format_manifest_line(r) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, manifest_file);
}

DatasetManifest generate_dataset(const DatasetOptions& o, const fs::path& out_dir) {
  if (o.categories.empty()) throw std::invalid_argument("no categories requested");
  if (o.classes_per_category < 1 || o.classes_per_category > kGlyphCount) {
    throw std::invalid_argument("classes per category must be in [1, " + std::to_string(kGlyphCount) + "]");
  }
  if (o.scenes_per_class < 1) throw std::invalid_argument("scenes per class must be positive");
  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "pictograms");

  DatasetManifest m;
  m.root = out_dir;
  uint64_t index = 0;
  for (SignCategory cat : o.categories) {
    for (int g = 0; g < o.classes_per_category; ++g) {
      const ToySignSpec spec = ToySignSpec::make(cat, g);
      save_image(render_pictogram(spec), m.pictogram_path(spec.class_id()));
      for (int k = 0; k < o.scenes_per_class; ++k) {
        const uint64_t seed = derive_seed(o.seed, index++);
        RngState rng(seed);
        const RenderedScene sc = render_scene(spec, SceneParams::random(rng, o.high_skew));
        char name[64];
        std::snprintf(name, sizeof name, "images/c%02d_s%04d.png", spec.class_id(), k);
        save_image(sc.image, out_dir / name);
        ManifestRecord r{name, spec.class_id(), cat, sc.cx, sc.cy, sc.r, seed};
        // Keep in memory exactly what the manifest text says.
        m.records.push_back(parse_manifest(format_manifest_line(r), out_dir).records.front());
      }
    }
  }
  write_manifest(m, out_dir / kManifestName);
  return m;
}

}  // namespace dragan
