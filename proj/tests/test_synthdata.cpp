#include <doctest.h>

#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <fstream>
#include <sstream>

#include "dragan/image_io.hpp"
#include "dragan/synthdata.hpp"

using namespace dragan;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dragan_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_gray_png(const fs::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, 2, 2, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_BASE,
               PNG_FILTER_TYPE_BASE);
  png_write_info(png, info);
  png_byte row[2] = {0, 255};
  png_write_row(png, row);
  png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

// Unit-range value of channel c at (y, x).
double unit(const Tensor<float>& t, int64_t c, int64_t y, int64_t x) {
  return (static_cast<double>(t.at(0, c, y, x)) + 1.0) / 2.0;
}

}  // namespace

TEST_CASE("png round trip and value mapping") {
  const fs::path dir = scratch("png");
  Rgb8Image img;
  img.width = 5;
  img.height = 3;
  for (int i = 0; i < 45; ++i) img.pixels.push_back(static_cast<uint8_t>(i * 37 % 256));
  img.pixels[0] = 0;
  img.pixels[1] = 255;
  write_png_rgb8(img, dir / "a.png");
  const auto t = load_image(dir / "a.png");
  CHECK(t.shape() == Shape{3, 3, 5});
  CHECK(t[0] == -1.0f);
  CHECK(t[15] == 1.0f);  // channel 1 of pixel (0, 0)
  save_image(t, dir / "b.png");
  CHECK(bitwise_equal(load_image(dir / "b.png"), t));
  CHECK(slurp(dir / "a.png") == slurp(dir / "b.png"));
  CHECK(read_png_rgb8(dir / "b.png").pixels == img.pixels);

  write_gray_png(dir / "gray.png");
  CHECK_THROWS_AS(load_image(dir / "gray.png"), ImageFormatError);
  std::ofstream(dir / "junk.png") << "not a png";
  CHECK_THROWS_AS(load_image(dir / "junk.png"), ImageFormatError);
  CHECK_THROWS(load_image(dir / "missing.png"));
}

TEST_CASE("pictograms") {
  const auto a = render_pictogram(ToySignSpec::make(SignCategory::white_circle, 3));
  CHECK(bitwise_equal(a, render_pictogram(ToySignSpec::make(SignCategory::white_circle, 3))));
  CHECK(a.shape() == Shape{3, 80, 80});
  const auto t = a.reshaped({1, 3, 80, 80});
  // Corner is the neutral background.
  for (int64_t c = 0; c < 3; ++c) CHECK(unit(t, c, 0, 0) == doctest::Approx(0.5).epsilon(0.01));
  // Center is glyph (black) or fill (white).
  const double center = unit(t, 0, 40, 40);
  CHECK((center < 0.1 || center > 0.9));

  const auto b = render_pictogram(ToySignSpec::make(SignCategory::blue_rectangle, 0)).reshaped({1, 3, 80, 80});
  double red = 0, blue = 0;
  for (int64_t y = 25; y < 55; ++y) {
    for (int64_t x = 25; x < 55; ++x) {
      red += unit(b, 0, y, x);
      blue += unit(b, 2, y, x);
    }
  }
  CHECK(blue > red);

  // All 24 classes render distinct images.
  for (int i = 0; i < 3 * kGlyphCount; ++i) {
    for (int j = i + 1; j < 3 * kGlyphCount; ++j) {
      CHECK_FALSE(bitwise_equal(render_pictogram(ToySignSpec::from_class_id(i), 20),
                                render_pictogram(ToySignSpec::from_class_id(j), 20)));
    }
  }
  ToySignSpec bad = ToySignSpec::make(SignCategory::white_circle, 0);
  bad.glyph_id = 9;
  CHECK_THROWS_AS(render_pictogram(bad), std::invalid_argument);
  CHECK_THROWS_AS(ToySignSpec::make(SignCategory::white_circle, -1), std::invalid_argument);
}

TEST_CASE("identity scene reproduces the pictogram") {
  const auto spec = ToySignSpec::make(SignCategory::white_triangle, 2);
  const auto picto = render_pictogram(spec).reshaped({1, 3, 80, 80});
  SceneParams p;
  const auto sc = render_scene(spec, p, true);
  const auto img = sc.image.reshaped({1, 3, 80, 80});
  int full = 0;
  for (int64_t y = 0; y < 80; ++y) {
    for (int64_t x = 0; x < 80; ++x) {
      if (sc.coverage[y * 80 + x] != 1.0f) continue;
      ++full;
      for (int64_t c = 0; c < 3; ++c) CHECK(img.at(0, c, y, x) == picto.at(0, c, y, x));
    }
  }
  CHECK(full > 500);
  CHECK(sc.cx == doctest::Approx(40));
  CHECK(sc.r == doctest::Approx(kPictogramRadius + 1.0));

  SceneParams dim = p;
  dim.gain = {0.6, 0.6, 0.6};
  const auto dark = render_scene(spec, dim, true);
  double ref = 0, lit = 0;
  for (int64_t y = 0; y < 80; ++y) {
    for (int64_t x = 0; x < 80; ++x) {
      if (dark.coverage[y * 80 + x] != 1.0f) continue;
      for (int64_t c = 0; c < 3; ++c) {
        ref += unit(picto, c, y, x);
        lit += unit(dark.image.reshaped({1, 3, 80, 80}), c, y, x);
      }
    }
  }
  CHECK(lit == doctest::Approx(0.6 * ref).epsilon(1e-5));
}

TEST_CASE("random scenes: determinism and mask consistency") {
  for (int cat = 0; cat < 3; ++cat) {
    for (uint64_t seed = 0; seed < 12; ++seed) {
      const auto spec = ToySignSpec::make(static_cast<SignCategory>(cat), static_cast<int>(seed % kGlyphCount));
      RngState r1(seed), r2(seed);
      const auto a = render_scene(spec, SceneParams::random(r1, seed % 4 == 0), true);
      const auto b = render_scene(spec, SceneParams::random(r2, seed % 4 == 0), true);
      CHECK(bitwise_equal(a.image, b.image));
      CHECK(a.r >= 8.0);
      CHECK(a.cx - a.r >= 0.0);
      CHECK(a.cx + a.r <= 80.0);
      for (int64_t y = 0; y < 80; ++y) {
        for (int64_t x = 0; x < 80; ++x) {
          if (a.coverage[y * 80 + x] == 0.0f) continue;
          CHECK(std::hypot(x + 0.5 - a.cx, y + 0.5 - a.cy) <= a.r);
        }
      }
    }
  }
  SceneParams off;
  off.homography = {1, 0, 30, 0, 1, 0, 0, 0, 1};
  CHECK_THROWS_AS(render_scene(ToySignSpec::make(SignCategory::white_circle, 0), off), std::invalid_argument);
  SceneParams tiny;
  tiny.homography = {0.1, 0, 36, 0, 0.1, 36, 0, 0, 1};
  CHECK_THROWS_AS(render_scene(ToySignSpec::make(SignCategory::white_circle, 0), tiny), std::invalid_argument);
}

TEST_CASE("dataset generation") {
  const fs::path d1 = scratch("ds1"), d2 = scratch("ds2");
  DatasetOptions o;
  o.scenes_per_class = 10;
  o.seed = 42;
  const auto m = generate_dataset(o, d1);
  CHECK(m.records.size() == 120);
  CHECK(m.class_ids().size() == 12);
  std::map<int, int> per_class;
  for (const auto& r : m.records) {
    ++per_class[r.class_id];
    CHECK(fs::exists(m.image_path(r)));
  }
  for (const auto& [c, n] : per_class) CHECK(n == 10);
  for (int c : m.class_ids()) CHECK(fs::exists(m.pictogram_path(c)));
  int pngs = 0;
  for (const auto& e : fs::directory_iterator(d1 / "images")) pngs += e.path().extension() == ".png";
  CHECK(pngs == 120);

  const auto reread = read_manifest(d1 / kManifestName);
  CHECK(reread.records == m.records);

  generate_dataset(o, d2);
  CHECK(slurp(d1 / kManifestName) == slurp(d2 / kManifestName));
  for (const auto& r : m.records) CHECK(slurp(d1 / r.path) == slurp(d2 / r.path));

  const auto img = load_image(m.image_path(m.records[0]));
  CHECK(img.shape() == Shape{3, 80, 80});
}

TEST_CASE("manifest parsing errors carry line numbers") {
  const std::string good = "images/a.png\t9\twhite_circle\t40.000\t41.500\t20.000\t7\n";
  CHECK(parse_manifest(good + good, ".").records.size() == 2);
  auto line_of = [](const std::string& text) {
    try {
      parse_manifest(text, ".");
    } catch (const ManifestError& e) {
      return e.line;
    }
    return size_t{0};
  };
  CHECK(line_of(good + "images/b.png\t9\twhite_circle\t40\t41\n") == 2);
  CHECK(line_of(good + good + "images/b.png\tx\twhite_circle\t40\t41\t20\t7\n") == 3);
  CHECK(line_of("images/b.png\t9\tyellow_star\t40\t41\t20\t7\n") == 1);
  CHECK(line_of("images/b.png\t1\twhite_circle\t40\t41\t20\t7\n") == 1);  // class 1 is a triangle
  CHECK(line_of(good + "\nimages/b.png\t9\twhite_circle\t40\t41\t-2\t7\n") == 3);
  CHECK(line_of(good + "images/b.png\t9\twhite_circle\t40\t41z\t20\t7\n") == 2);
}

TEST_CASE("unwritable output leaves no manifest") {
  const fs::path d = scratch("ro");
  std::ofstream(d / "blocker") << "x";
  DatasetOptions o;
  o.scenes_per_class = 1;
  CHECK_THROWS(generate_dataset(o, d / "blocker" / "sub"));
  CHECK_FALSE(fs::exists(d / "blocker" / "sub" / kManifestName));
}
