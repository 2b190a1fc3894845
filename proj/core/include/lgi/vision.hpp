#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "lgi/digits.hpp"
#include "lgi/image.hpp"
#include "lgi/layers.hpp"
#include "lgi/optim.hpp"

namespace lgi::vision {

struct VisionConfig {
  std::size_t hidden1 = 512;
  std::size_t hidden2 = 256;
  std::size_t v3 = 128;
  std::size_t v4 = 32;
};

/// Encoder layer-3 and layer-4 (AIT) activations.
struct LatentPair {
  std::vector<float> v3;
  std::vector<float> v4;

  bool operator==(const LatentPair&) const = default;
};

/// Autoencoder. The encoder runs 784 -> hidden1 -> hidden2 -> V3 -> V4 with
/// tanh throughout; the decoder reconstructs from V3 (not V4):
/// V3 -> hidden2 -> hidden1 -> 784, sigmoid on the last layer.
class VisionModel {
 public:
  VisionModel() = default;
  static VisionModel init(const VisionConfig& config, Rng& rng);

  const VisionConfig& config() const noexcept { return config_; }
  ParamList params() const;

  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

  /// Batched passes with gradient recording. x is [batch x 784].
  std::pair<Tensor, Tensor> encode_batch(const Tensor& x) const;
  Tensor decode_batch(const Tensor& v3) const;
  Tensor v4_from_v3(const Tensor& v3) const;

  const std::vector<FcLayer>& encoder() const { return encoder_; }
  const std::vector<FcLayer>& decoder() const { return decoder_; }

 private:
  VisionConfig config_;
  std::vector<FcLayer> encoder_;
  std::vector<FcLayer> decoder_;
  bool frozen_ = false;
};

LatentPair encode(const DigitImage& image, const VisionModel& model);
/// Encodes many images in one pass.
std::vector<LatentPair> encode_all(std::span<const DigitImage> images, const VisionModel& model);
/// ShapeError unless v3 has the decoder's input size.
DigitImage decode(std::span<const float> v3, const VisionModel& model);
/// Applies only encoder layer 4.
std::vector<float> v3_to_v4(std::span<const float> v3, const VisionModel& model);

struct AutoencoderConfig {
  VisionConfig model;
  std::size_t steps = 5000;
  std::size_t batch = 32;
  AdamConfig adam{};
  std::uint64_t seed = 1;
  /// Probability of replacing a sampled image by a random curriculum transform of it.
  float augment_probability = 0.7f;
  std::size_t log_every = 250;
};

struct AutoencoderMetrics {
  std::vector<std::pair<std::size_t, float>> loss_curve;
  float initial_loss = 0.0f;
  float final_loss = 0.0f;
};

/// Per-pixel MSE reconstruction training. The model is frozen on return.
VisionModel train_autoencoder(const curriculum::DigitPool& pool, const AutoencoderConfig& config,
                              AutoencoderMetrics* metrics = nullptr);

/// Mean per-pixel squared error of decode(encode(x).v3) over `images`.
double reconstruction_mse(std::span<const DigitImage> images, const VisionModel& model);

/// Reconstruction through the V3 path.
DigitImage reconstruct(const DigitImage& image, const VisionModel& model);

}  // namespace lgi::vision
