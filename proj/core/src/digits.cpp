#include "lgi/digits.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lgi/checkpoint.hpp"
#include "lgi/errors.hpp"

namespace lgi::curriculum {

DigitPool::DigitPool(std::vector<DigitImage> images, std::vector<std::uint8_t> labels, PoolSource provenance)
    : images_(std::move(images)), labels_(std::move(labels)), provenance_(provenance) {
  if (images_.size() != labels_.size()) {
    throw ConsistencyError("digit pool has " + std::to_string(images_.size()) + " images but " +
                           std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] > 9) throw RangeError("label " + std::to_string(labels_[i]) + " at index " + std::to_string(i));
    if (!images_[i].valid()) throw RangeError("image " + std::to_string(i) + " has pixels outside [0,1]");
    by_label_[labels_[i]].push_back(i);
  }
}

std::span<const std::size_t> DigitPool::indices_of(int label) const {
  if (label < 0 || label > 9) throw RangeError("digit label " + std::to_string(label));
  return by_label_[static_cast<std::size_t>(label)];
}

std::size_t DigitPool::sample_index(Rng& rng) const {
  if (images_.empty()) throw ContractError("sampling from an empty digit pool");
  return static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(images_.size()) - 1));
}

std::size_t DigitPool::sample_index_of(int label, Rng& rng) const {
  const auto idx = indices_of(label);
  if (idx.empty()) throw RangeError("digit pool has no instance of " + std::to_string(label));
  return idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(idx.size()) - 1))];
}

DigitPool DigitPool::head(std::size_t n) const {
  n = std::min(n, images_.size());
  return DigitPool({images_.begin(), images_.begin() + static_cast<std::ptrdiff_t>(n)},
                   {labels_.begin(), labels_.begin() + static_cast<std::ptrdiff_t>(n)}, provenance_);
}

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) throw FormatError(std::string(what) + " header truncated", bytes.size());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

}  // namespace

DigitPool decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes) {
  if (read_be32(image_bytes, 0, "IDX image") != kIdxImageMagic) throw FormatError("bad IDX image magic", 0);
  if (read_be32(label_bytes, 0, "IDX label") != kIdxLabelMagic) throw FormatError("bad IDX label magic", 0);
  const std::size_t count = read_be32(image_bytes, 4, "IDX image");
  const std::size_t rows = read_be32(image_bytes, 8, "IDX image");
  const std::size_t cols = read_be32(image_bytes, 12, "IDX image");
  if (rows != kImageSide || cols != kImageSide) throw FormatError("IDX images must be 28x28", 8);
  const std::size_t label_count = read_be32(label_bytes, 4, "IDX label");
  if (label_count != count) {
    throw ConsistencyError("IDX image count " + std::to_string(count) + " != label count " + std::to_string(label_count));
  }
  constexpr std::size_t kImageHeader = 16, kLabelHeader = 8;
  if (image_bytes.size() < kImageHeader + count * kImagePixels) {
    throw FormatError("IDX image data truncated", image_bytes.size());
  }
  if (label_bytes.size() < kLabelHeader + count) throw FormatError("IDX label data truncated", label_bytes.size());

  std::vector<DigitImage> images(count);
  std::vector<std::uint8_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t base = kImageHeader + i * kImagePixels;
    for (std::size_t p = 0; p < kImagePixels; ++p) images[i].pixels[p] = image_bytes[base + p] / 255.0f;
    labels[i] = label_bytes[kLabelHeader + i];
    if (labels[i] > 9) throw FormatError("IDX label out of range", kLabelHeader + i);
  }
  return DigitPool(std::move(images), std::move(labels), PoolSource::idx_file);
}

DigitPool load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path) {
  return decode_idx(read_file_bytes(image_path), read_file_bytes(label_path));
}

std::vector<std::uint8_t> encode_idx_images(const std::vector<DigitImage>& images) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.size() * kImagePixels);
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(images.size()));
  put_be32(out, kImageSide);
  put_be32(out, kImageSide);
  for (const auto& img : images) {
    for (float v : img.pixels) out.push_back(to_byte(v));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic glyphs

namespace {

struct Point {
  float x;
  float y;
};
using Stroke = std::vector<Point>;

// Elliptic arc in glyph units (y grows downward). Angles in degrees;
// 0 = right, 90 = down, 270 = up.
Stroke arc(float cx, float cy, float rx, float ry, float from_deg, float to_deg, int segments = 24) {
  Stroke s;
  for (int i = 0; i <= segments; ++i) {
    const float t = (from_deg + (to_deg - from_deg) * static_cast<float>(i) / segments) * std::numbers::pi_v<float> / 180.0f;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

Stroke append(Stroke a, std::initializer_list<Point> tail) {
  a.insert(a.end(), tail.begin(), tail.end());
  return a;
}

std::vector<Stroke> reflect(std::vector<Stroke> strokes) {
  for (auto& s : strokes) {
    for (auto& p : s) p = {1.0f - p.x, 1.0f - p.y};
  }
  return strokes;
}

// Skeletons in a unit box; a 6 is the point reflection of a 9.
std::vector<Stroke> skeleton(int digit) {
  switch (digit) {
    case 0: return {arc(0.5f, 0.5f, 0.27f, 0.4f, 0.0f, 360.0f, 32)};
    case 1: return {{{0.38f, 0.24f}, {0.52f, 0.1f}, {0.52f, 0.9f}}};
    case 2: return {append(arc(0.5f, 0.32f, 0.25f, 0.22f, 180.0f, 400.0f), {{0.22f, 0.9f}, {0.8f, 0.9f}})};
    case 3: return {arc(0.5f, 0.3f, 0.24f, 0.2f, 200.0f, 450.0f), arc(0.5f, 0.7f, 0.27f, 0.2f, 270.0f, 520.0f)};
    case 4: return {{{0.64f, 0.9f}, {0.64f, 0.1f}, {0.2f, 0.64f}, {0.82f, 0.64f}}};
    case 5: return {{{0.78f, 0.1f}, {0.3f, 0.1f}, {0.28f, 0.46f}}, arc(0.5f, 0.66f, 0.27f, 0.23f, 225.0f, 500.0f)};
    case 6: return reflect(skeleton(9));
    case 7: return {{{0.2f, 0.1f}, {0.8f, 0.1f}, {0.42f, 0.9f}}};
    case 8: return {arc(0.5f, 0.29f, 0.2f, 0.19f, 0.0f, 360.0f), arc(0.5f, 0.7f, 0.25f, 0.21f, 0.0f, 360.0f)};
    case 9: return {arc(0.5f, 0.32f, 0.24f, 0.22f, 0.0f, 360.0f), {{0.74f, 0.34f}, {0.72f, 0.9f}}};
    default: break;
  }
  throw RangeError("digit " + std::to_string(digit) + " outside 0..9");
}

float segment_distance(float px, float py, Point a, Point b) {
  const float vx = b.x - a.x, vy = b.y - a.y;
  const float len2 = vx * vx + vy * vy;
  float t = len2 > 0.0f ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0f;
  t = std::clamp(t, 0.0f, 1.0f);
  const float dx = px - (a.x + t * vx), dy = py - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

DigitImage synth_glyph(int digit, Rng& rng) {
  auto strokes = skeleton(digit);

  // Random affine jitter about the glyph centre, then map the unit box onto
  // the central 20x20 pixel box.
  const float angle = rng.uniform(-0.14f, 0.14f);
  const float shear = rng.uniform(-0.15f, 0.15f);
  const float sx = rng.uniform(0.82f, 1.02f);
  const float sy = rng.uniform(0.88f, 1.02f);
  const float tx = rng.uniform(-0.05f, 0.05f);
  const float ty = rng.uniform(-0.04f, 0.04f);
  const float width = rng.uniform(1.3f, 2.1f);
  const float ca = std::cos(angle), sa = std::sin(angle);
  constexpr float kBox = 20.0f, kOrigin = 4.0f;

  for (auto& s : strokes) {
    for (auto& p : s) {
      const float x = (p.x - 0.5f) * sx + shear * (p.y - 0.5f);
      const float y = (p.y - 0.5f) * sy;
      const float rx = ca * x - sa * y + 0.5f + tx;
      const float ry = sa * x + ca * y + 0.5f + ty;
      p = {kOrigin + 0.5f + rx * (kBox - 1.0f), kOrigin + 0.5f + ry * (kBox - 1.0f)};
    }
  }

  DigitImage img;
  const auto lo = static_cast<std::size_t>(kOrigin), hi = static_cast<std::size_t>(kOrigin + kBox);
  for (std::size_t r = lo; r < hi; ++r) {
    for (std::size_t c = lo; c < hi; ++c) {
      const float px = static_cast<float>(c) + 0.5f, py = static_cast<float>(r) + 0.5f;
      float d = 1e9f;
      for (const auto& s : strokes) {
        for (std::size_t k = 0; k + 1 < s.size(); ++k) d = std::min(d, segment_distance(px, py, s[k], s[k + 1]));
      }
      img.at(r, c) = std::clamp(width * 0.5f + 0.5f - d, 0.0f, 1.0f);
    }
  }
  return img;
}

DigitPool synthetic_pool(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DigitImage> images;
  std::vector<std::uint8_t> labels;
  images.reserve(count);
  labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int digit = static_cast<int>(i % 10);
    images.push_back(synth_glyph(digit, rng));
    labels.push_back(static_cast<std::uint8_t>(digit));
  }
  return DigitPool(std::move(images), std::move(labels), PoolSource::synthetic);
}

}  // namespace lgi::curriculum
