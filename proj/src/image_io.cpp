#include "dragan/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <string>

namespace dragan {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

const char* color_type_name(int t) {
  switch (t) {
    case PNG_COLOR_TYPE_GRAY: return "grayscale";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    default: return "unknown";
  }
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg ? msg : "libpng error";
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

Rgb8Image read_png_rgb8(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ImageFormatError(path.string() + ": not a PNG file");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  Rgb8Image img;
  std::vector<png_bytep> rows;
  std::string reject;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageFormatError(path.string() + ": " + err);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_RGB || depth != 8) {
    reject = path.string() + ": unsupported PNG format (" + color_type_name(color) + ", " + std::to_string(depth) +
             "-bit); expected 8-bit RGB";
  } else {
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(static_cast<size_t>(img.width) * static_cast<size_t>(img.height) * 3);
    rows.resize(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<size_t>(y)] = img.pixels.data() + static_cast<size_t>(y) * static_cast<size_t>(img.width) * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!reject.empty()) throw ImageFormatError(reject);
  return img;
}

void write_png_rgb8(const Rgb8Image& image, const std::filesystem::path& path) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<size_t>(image.width) * static_cast<size_t>(image.height) * 3) {
    throw std::invalid_argument("write_png_rgb8: inconsistent image buffer");
  }
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<size_t>(image.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path.string() + ": " + err);
  }
  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_BASE, PNG_FILTER_TYPE_BASE);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    rows[static_cast<size_t>(y)] =
        const_cast<png_bytep>(image.pixels.data() + static_cast<size_t>(y) * static_cast<size_t>(image.width) * 3);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw std::runtime_error("write failed: " + path.string());
}

Tensor<float> image_to_tensor(const Rgb8Image& image) {
  const int64_t h = image.height, w = image.width;
  Tensor<float> t({3, h, w});
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        t.ptr()[(c * h + y) * w + x] = static_cast<float>(image.pixels[static_cast<size_t>((y * w + x) * 3 + c)]) / 127.5f - 1.0f;
      }
    }
  }
  return t;
}

Rgb8Image tensor_to_image(const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw std::invalid_argument("expected an image tensor [3,H,W], got " + shape_str(image.shape()));
  }
  Rgb8Image out;
  out.height = static_cast<int>(image.dim(1));
  out.width = static_cast<int>(image.dim(2));
  const int64_t h = out.height, w = out.width;
  out.pixels.resize(static_cast<size_t>(h * w * 3));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x) {
      for (int64_t c = 0; c < 3; ++c) {
        out.pixels[static_cast<size_t>((y * w + x) * 3 + c)] = quantize_unit(image.ptr()[(c * h + y) * w + x]);
      }
    }
  }
  return out;
}

Tensor<float> load_image(const std::filesystem::path& path) { return image_to_tensor(read_png_rgb8(path)); }

void save_image(const Tensor<float>& image, const std::filesystem::path& path) {
  write_png_rgb8(tensor_to_image(image), path);
}

}  // namespace dragan
