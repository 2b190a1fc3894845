#include "lgi/vision.hpp"

#include <algorithm>

#include "lgi/errors.hpp"
#include "lgi/transforms.hpp"

namespace lgi::vision {

namespace {

Tensor images_to_tensor(std::span<const DigitImage> images) {
  std::vector<float> values;
  values.reserve(images.size() * kImagePixels);
  for (const auto& img : images) values.insert(values.end(), img.pixels.begin(), img.pixels.end());
  return Tensor::from({images.size(), kImagePixels}, std::move(values));
}

DigitImage row_to_image(std::span<const float> row) {
  DigitImage img;
  // Sigmoid saturates to exactly 0 or 1 in float; clamp keeps the image valid regardless.
  std::transform(row.begin(), row.end(), img.pixels.begin(), [](float v) { return std::clamp(v, 0.0f, 1.0f); });
  return img;
}

}  // namespace

VisionModel VisionModel::init(const VisionConfig& config, Rng& rng) {
  VisionModel m;
  m.config_ = config;
  m.encoder_.push_back(FcLayer::init(kImagePixels, config.hidden1, Activation::tanh, rng));
  m.encoder_.push_back(FcLayer::init(config.hidden1, config.hidden2, Activation::tanh, rng));
  m.encoder_.push_back(FcLayer::init(config.hidden2, config.v3, Activation::tanh, rng));
  m.encoder_.push_back(FcLayer::init(config.v3, config.v4, Activation::tanh, rng));
  m.decoder_.push_back(FcLayer::init(config.v3, config.hidden2, Activation::tanh, rng));
  m.decoder_.push_back(FcLayer::init(config.hidden2, config.hidden1, Activation::tanh, rng));
  m.decoder_.push_back(FcLayer::init(config.hidden1, kImagePixels, Activation::sigmoid, rng));
  return m;
}

ParamList VisionModel::params() const {
  ParamList out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) encoder_[i].append_params(out, "vision.encoder" + std::to_string(i + 1));
  for (std::size_t i = 0; i < decoder_.size(); ++i) decoder_[i].append_params(out, "vision.decoder" + std::to_string(i + 1));
  return out;
}

std::pair<Tensor, Tensor> VisionModel::encode_batch(const Tensor& x) const {
  Tensor h = fc_forward(x, encoder_[0]);
  h = fc_forward(h, encoder_[1]);
  Tensor v3 = fc_forward(h, encoder_[2]);
  Tensor v4 = fc_forward(v3, encoder_[3]);
  return {std::move(v3), std::move(v4)};
}

Tensor VisionModel::decode_batch(const Tensor& v3) const {
  Tensor h = fc_forward(v3, decoder_[0]);
  h = fc_forward(h, decoder_[1]);
  return fc_forward(h, decoder_[2]);
}

Tensor VisionModel::v4_from_v3(const Tensor& v3) const { return fc_forward(v3, encoder_[3]); }

LatentPair encode(const DigitImage& image, const VisionModel& model) {
  return encode_all(std::span<const DigitImage>(&image, 1), model).front();
}

std::vector<LatentPair> encode_all(std::span<const DigitImage> images, const VisionModel& model) {
  std::vector<LatentPair> out;
  if (images.empty()) return out;
  NoGradGuard no_grad;
  const auto [v3, v4] = model.encode_batch(images_to_tensor(images));
  const std::size_t d3 = v3.dim(1), d4 = v4.dim(1);
  out.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto a = v3.data().subspan(i * d3, d3);
    const auto b = v4.data().subspan(i * d4, d4);
    out.push_back({{a.begin(), a.end()}, {b.begin(), b.end()}});
  }
  return out;
}

DigitImage decode(std::span<const float> v3, const VisionModel& model) {
  if (v3.size() != model.config().v3) {
    throw ShapeError("decode: expected " + std::to_string(model.config().v3) + " values, got " + std::to_string(v3.size()));
  }
  NoGradGuard no_grad;
  const Tensor out = model.decode_batch(Tensor::from({1, v3.size()}, {v3.begin(), v3.end()}));
  return row_to_image(out.data());
}

std::vector<float> v3_to_v4(std::span<const float> v3, const VisionModel& model) {
  if (v3.size() != model.config().v3) {
    throw ShapeError("v3_to_v4: expected " + std::to_string(model.config().v3) + " values, got " + std::to_string(v3.size()));
  }
  NoGradGuard no_grad;
  return model.v4_from_v3(Tensor::from({1, v3.size()}, {v3.begin(), v3.end()})).to_vector();
}

DigitImage reconstruct(const DigitImage& image, const VisionModel& model) {
  return decode(encode(image, model).v3, model);
}

double reconstruction_mse(std::span<const DigitImage> images, const VisionModel& model) {
  if (images.empty()) return 0.0;
  NoGradGuard no_grad;
  double total = 0.0;
  constexpr std::size_t kChunk = 256;
  for (std::size_t begin = 0; begin < images.size(); begin += kChunk) {
    const auto chunk = images.subspan(begin, std::min(kChunk, images.size() - begin));
    const Tensor x = images_to_tensor(chunk);
    const Tensor y = model.decode_batch(model.encode_batch(x).first);
    const auto a = x.data();
    const auto b = y.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = static_cast<double>(a[i]) - b[i];
      total += d * d;
    }
  }
  return total / static_cast<double>(images.size() * kImagePixels);
}

VisionModel train_autoencoder(const curriculum::DigitPool& pool, const AutoencoderConfig& config,
                              AutoencoderMetrics* metrics) {
  if (pool.empty()) throw ConfigError("train_autoencoder: digit pool is empty");
  if (config.batch == 0) throw ConfigError("train_autoencoder: batch size must be positive");
  Rng rng(config.seed);
  Rng init_rng = rng.split();
  VisionModel model = VisionModel::init(config.model, init_rng);
  ParamList named = model.params();
  // Layer 4 (AIT) receives no reconstruction gradient; it stays at its
  // initialisation, a fixed projection of V3.
  std::vector<Tensor> params;
  for (const auto& p : named) {
    if (!p.name.starts_with("vision.encoder4")) params.push_back(p.tensor);
  }
  auto state = OptimizerState::for_params(params, config.adam);

  AutoencoderMetrics local;
  std::vector<DigitImage> batch(config.batch);
  const float scale_factor = 1.0f / static_cast<float>(config.batch * kImagePixels);
  for (std::size_t step = 0; step < config.steps; ++step) {
    for (auto& img : batch) {
      const DigitImage& src = pool.image(pool.sample_index(rng));
      img = rng.bernoulli(config.augment_probability) ? curriculum::random_curriculum_transform(src, rng) : src;
    }
    const Tensor x = images_to_tensor(batch);
    const Tensor recon = model.decode_batch(model.encode_batch(x).first);
    const Tensor loss = scale(square_sum(recon - x), scale_factor);
    zero_grads(params);
    loss.backward();
    adam_step(params, state);
    if (step == 0) local.initial_loss = loss.item();
    local.final_loss = loss.item();
    if (config.log_every && (step % config.log_every == 0 || step + 1 == config.steps)) {
      local.loss_curve.emplace_back(step, loss.item());
    }
  }
  model.freeze();
  if (metrics) *metrics = std::move(local);
  return model;
}

}  // namespace lgi::vision
