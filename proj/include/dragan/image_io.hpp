#pragma once

// 8-bit RGB PNG <-> float tensors in [-1, 1] (v = u8 / 127.5 - 1).

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "dragan/tensor.hpp"

namespace dragan {

struct ImageFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Interleaved RGB bytes.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // height * width * 3
};

/// Rejects anything that is not 8-bit RGB without alpha (grayscale,
/// palette, 16-bit, RGBA) with ImageFormatError.
Rgb8Image read_png_rgb8(const std::filesystem::path& path);
/// Deterministic output: fixed compression settings, no timestamps.
void write_png_rgb8(const Rgb8Image& image, const std::filesystem::path& path);

/// [3,H,W] in [-1, 1].
Tensor<float> load_image(const std::filesystem::path& path);
/// Values are clamped to [-1, 1] and rounded to the nearest u8 level.
void save_image(const Tensor<float>& image, const std::filesystem::path& path);

Tensor<float> image_to_tensor(const Rgb8Image& image);
Rgb8Image tensor_to_image(const Tensor<float>& image);
inline uint8_t quantize_unit(float v) {
  const float c = !(v >= -1.0f) ? -1.0f : (v > 1.0f ? 1.0f : v);  // NaN maps to -1
  return static_cast<uint8_t>(static_cast<int>((c + 1.0f) * 127.5f + 0.5f));
}

}  // namespace dragan
