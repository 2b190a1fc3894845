#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lgi/image.hpp"
#include "lgi/rng.hpp"

namespace lgi::curriculum {

enum class PoolSource { idx_file, synthetic };

/// Labelled digit images. Immutable once built.
class DigitPool {
 public:
  DigitPool() = default;
  DigitPool(std::vector<DigitImage> images, std::vector<std::uint8_t> labels, PoolSource provenance);

  std::size_t size() const noexcept { return images_.size(); }
  bool empty() const noexcept { return images_.empty(); }
  const DigitImage& image(std::size_t i) const { return images_.at(i); }
  int label(std::size_t i) const { return labels_.at(i); }
  PoolSource provenance() const noexcept { return provenance_; }

  const std::vector<DigitImage>& images() const noexcept { return images_; }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
  /// Indices of every image with the given label.
  std::span<const std::size_t> indices_of(int label) const;

  std::size_t sample_index(Rng& rng) const;
  /// Random instance of `label`; RangeError when the pool has none.
  std::size_t sample_index_of(int label, Rng& rng) const;

  /// First `n` images (or all when smaller).
  DigitPool head(std::size_t n) const;

 private:
  std::vector<DigitImage> images_;
  std::vector<std::uint8_t> labels_;
  PoolSource provenance_ = PoolSource::synthetic;
  std::array<std::vector<std::size_t>, 10> by_label_;
};

/// Reads an IDX image file (magic 0x00000803, 28x28) and label file
/// (magic 0x00000801). Pixel bytes are scaled by 1/255.
DigitPool load_idx(const std::filesystem::path& image_path, const std::filesystem::path& label_path);
DigitPool decode_idx(std::span<const std::uint8_t> image_bytes, std::span<const std::uint8_t> label_bytes);

/// Serialises a pool to IDX byte streams (pixels rounded to bytes).
std::vector<std::uint8_t> encode_idx_images(const std::vector<DigitImage>& images);
std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t>& labels);

/// Stroke rendering of `digit` with random slant, scale, offset and stroke
/// width. Support stays inside the central 20x20 box (rows/cols 4..23).
DigitImage synth_glyph(int digit, Rng& rng);

/// `count` synthetic glyphs with labels cycling 0..9.
DigitPool synthetic_pool(std::size_t count, std::uint64_t seed);

}  // namespace lgi::curriculum
