#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lgi {

inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

/// 28x28 grayscale image, row-major, intensities in [0, 1].
struct DigitImage {
  std::array<float, kImagePixels> pixels{};

  static DigitImage blank() { return {}; }
  /// Validates size and range; throws RangeError/ShapeError.
  static DigitImage from(std::span<const float> values);

  float& at(std::size_t row, std::size_t col) { return pixels[row * kImageSide + col]; }
  float at(std::size_t row, std::size_t col) const { return pixels[row * kImageSide + col]; }

  bool valid() const noexcept;
  std::size_t lit_pixels(float threshold = 0.0f) const noexcept;

  bool operator==(const DigitImage&) const = default;
};

/// Per-pixel mean squared error.
double mean_squared_error(const DigitImage& a, const DigitImage& b);
/// Pearson correlation of pixel intensities; 0 when either image is constant.
double pixel_correlation(const DigitImage& a, const DigitImage& b);

/// Byte value used for 8-bit encodings: round(255 v).
std::uint8_t to_byte(float v) noexcept;

/// Binary PGM ("P5\n28 28\n255\n" followed by 784 bytes).
std::string encode_pgm(const DigitImage& image);
void write_pgm(const DigitImage& image, const std::filesystem::path& path);
DigitImage decode_pgm(std::span<const std::uint8_t> bytes);

/// Side-by-side PGM of several images (one row of tiles).
std::string encode_pgm_strip(const std::vector<DigitImage>& images);

/// Four-level character ramp rendering, one text line per pixel row.
std::string render_ascii(const DigitImage& image);

}  // namespace lgi
