#include <gtest/gtest.h>

#include "lgi/digits.hpp"
#include "lgi/errors.hpp"
#include "lgi/vision.hpp"
#include "tiny_models.hpp"

namespace lgi::vision {
namespace {

TEST(Vision, LatentShapesAndRanges) {
  Rng rng(1);
  const VisionModel m = VisionModel::init(testing::kTinyVision, rng);
  const auto pool = curriculum::synthetic_pool(10, 1);
  const LatentPair z = encode(pool.image(0), m);
  ASSERT_EQ(z.v3.size(), 8u);
  ASSERT_EQ(z.v4.size(), 4u);
  for (float v : z.v3) EXPECT_LT(std::abs(v), 1.0f);
  const DigitImage out = decode(z.v3, m);
  for (float v : out.pixels) {
    ASSERT_GT(v, 0.0f);
    ASSERT_LT(v, 1.0f);
  }
  EXPECT_EQ(reconstruct(pool.image(0), m), out);
  const std::vector<float> short_v3(7, 0.0f);
  EXPECT_THROW(decode(short_v3, m), ShapeError);
}

TEST(Vision, V4IsEncoderLayerFourOfV3) {
  Rng rng(2);
  const VisionModel m = VisionModel::init(testing::kTinyVision, rng);
  const auto pool = curriculum::synthetic_pool(20, 2);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const LatentPair z = encode(pool.image(i), m);
    const auto v4 = v3_to_v4(z.v3, m);
    for (std::size_t j = 0; j < v4.size(); ++j) ASSERT_NEAR(v4[j], z.v4[j], 1e-6);
  }
}

TEST(Vision, BatchedEncodingMatchesSingle) {
  Rng rng(3);
  const VisionModel m = VisionModel::init(testing::kTinyVision, rng);
  const auto pool = curriculum::synthetic_pool(12, 3);
  const auto all = encode_all(pool.images(), m);
  ASSERT_EQ(all.size(), 12u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto single = encode(pool.image(i), m);
    for (std::size_t j = 0; j < single.v3.size(); ++j) ASSERT_NEAR(all[i].v3[j], single.v3[j], 1e-5);
  }
}

TEST(Vision, ShortTrainingReducesReconstructionError) {
  const auto pool = curriculum::synthetic_pool(200, 4);
  AutoencoderConfig config;
  config.model = {.hidden1 = 64, .hidden2 = 32, .v3 = 16, .v4 = 4};
  config.steps = 150;
  config.batch = 16;
  config.log_every = 50;
  AutoencoderMetrics metrics;
  Rng rng(config.seed);
  const VisionModel untrained = VisionModel::init(config.model, rng);
  const VisionModel trained = train_autoencoder(pool, config, &metrics);
  EXPECT_TRUE(trained.frozen());
  EXPECT_LT(metrics.final_loss, metrics.initial_loss);
  const auto heldout = curriculum::synthetic_pool(50, 5);
  EXPECT_LT(reconstruction_mse(heldout.images(), trained), reconstruction_mse(heldout.images(), untrained));
}

TEST(Vision, TrainingIsDeterministic) {
  const auto pool = curriculum::synthetic_pool(50, 6);
  AutoencoderConfig config;
  config.model = {.hidden1 = 16, .hidden2 = 8, .v3 = 4, .v4 = 2};
  config.steps = 20;
  config.batch = 4;
  const auto a = train_autoencoder(pool, config);
  const auto b = train_autoencoder(pool, config);
  EXPECT_EQ(param_checksum(a.params()), param_checksum(b.params()));
}

}  // namespace
}  // namespace lgi::vision
