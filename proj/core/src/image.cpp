#include "lgi/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lgi/checkpoint.hpp"
#include "lgi/errors.hpp"

namespace lgi {

DigitImage DigitImage::from(std::span<const float> values) {
  if (values.size() != kImagePixels) {
    throw ShapeError("DigitImage needs " + std::to_string(kImagePixels) + " values, got " + std::to_string(values.size()));
  }
  DigitImage img;
  for (std::size_t i = 0; i < kImagePixels; ++i) {
    const float v = values[i];
    if (!(v >= 0.0f && v <= 1.0f)) throw RangeError("pixel " + std::to_string(i) + " outside [0,1]");
    img.pixels[i] = v;
  }
  return img;
}

bool DigitImage::valid() const noexcept {
  return std::all_of(pixels.begin(), pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

std::size_t DigitImage::lit_pixels(float threshold) const noexcept {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(), [&](float v) { return v > threshold; }));
}

double mean_squared_error(const DigitImage& a, const DigitImage& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < kImagePixels; ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    acc += d * d;
  }
  return acc / kImagePixels;
}

double pixel_correlation(const DigitImage& a, const DigitImage& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < kImagePixels; ++i) {
    ma += a.pixels[i];
    mb += b.pixels[i];
  }
  ma /= kImagePixels;
  mb /= kImagePixels;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < kImagePixels; ++i) {
    const double da = a.pixels[i] - ma, db = b.pixels[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

std::uint8_t to_byte(float v) noexcept {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

std::string encode_pgm(const DigitImage& image) { return encode_pgm_strip({image}); }

std::string encode_pgm_strip(const std::vector<DigitImage>& images) {
  const std::size_t width = kImageSide * std::max<std::size_t>(images.size(), 1);
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(kImageSide) + "\n255\n";
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (const auto& img : images) {
      for (std::size_t c = 0; c < kImageSide; ++c) out.push_back(static_cast<char>(to_byte(img.at(r, c))));
    }
  }
  return out;
}

void write_pgm(const DigitImage& image, const std::filesystem::path& path) {
  const std::string bytes = encode_pgm(image);
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

DigitImage decode_pgm(std::span<const std::uint8_t> bytes) {
  std::string head(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 32)));
  std::istringstream in(head);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (!in || magic != "P5") throw FormatError("not a binary PGM", 0);
  if (w != kImageSide || h != kImageSide || maxval != 255) throw FormatError("PGM must be 28x28 with maxval 255", 3);
  const auto data_start = static_cast<std::size_t>(in.tellg()) + 1;
  if (bytes.size() < data_start + kImagePixels) throw FormatError("PGM pixel data truncated", bytes.size());
  DigitImage img;
  for (std::size_t i = 0; i < kImagePixels; ++i) img.pixels[i] = bytes[data_start + i] / 255.0f;
  return img;
}

std::string render_ascii(const DigitImage& image) {
  static constexpr char kRamp[4] = {' ', '.', '+', '#'};
  std::string out;
  out.reserve((kImageSide + 1) * kImageSide);
  for (std::size_t r = 0; r < kImageSide; ++r) {
    for (std::size_t c = 0; c < kImageSide; ++c) {
      const float v = std::clamp(image.at(r, c), 0.0f, 1.0f);
      out.push_back(kRamp[std::min<int>(3, static_cast<int>(v * 4.0f))]);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace lgi
