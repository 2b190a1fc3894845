#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "lgi/errors.hpp"
#include "lgi/optim.hpp"

namespace lgi {
namespace {

TEST(FcLayer, ForwardMatchesScalarOracle) {
  for (Activation act : {Activation::identity, Activation::tanh, Activation::sigmoid}) {
    Rng rng(11);
    const FcLayer layer = FcLayer::init(6, 4, act, rng);
    const auto oracle = testing::ScalarFc::from(layer);
    const Tensor x = testing::uniform_tensor({6}, rng, false);
    const Tensor y = fc_forward(x, layer);
    const auto ref = oracle.forward(testing::to_double(x.data()));
    for (std::size_t o = 0; o < 4; ++o) EXPECT_NEAR(y.at(o), ref[o], 1e-6);
  }
}

TEST(FcLayer, InitBoundsAndShape) {
  Rng rng(1);
  const FcLayer layer = FcLayer::init(16, 3, Activation::tanh, rng);
  EXPECT_EQ(layer.in_features(), 16u);
  EXPECT_EQ(layer.out_features(), 3u);
  for (float w : layer.weight.data()) EXPECT_LE(std::abs(w), 0.25f);
  EXPECT_THROW(FcLayer::init(0, 3, Activation::tanh, rng), ShapeError);
}

TEST(LstmLayer, SequenceMatchesScalarOracle) {
  Rng rng(12);
  const LstmLayer layer = LstmLayer::init(5, 7, rng);
  const auto oracle = testing::ScalarLstm::from(layer);
  LstmState state = layer.zero_state();
  std::vector<double> h(7, 0.0), c(7, 0.0);
  for (int t = 0; t < 6; ++t) {
    const Tensor x = testing::uniform_tensor({5}, rng, false);
    state = lstm_step(x, state, layer);
    oracle.step(testing::to_double(x.data()), h, c);
    for (std::size_t j = 0; j < 7; ++j) {
      EXPECT_NEAR(state.h.at(j), h[j], 1e-5);
      EXPECT_NEAR(state.c.at(j), c[j], 1e-5);
    }
  }
}

TEST(LstmLayer, BatchedRowsMatchSingleRows) {
  Rng rng(13);
  const LstmLayer layer = LstmLayer::init(3, 4, rng);
  const Tensor xb = testing::uniform_tensor({2, 3}, rng, false);
  const LstmState batched = lstm_step(xb, layer.zero_state(2), layer);
  for (std::size_t row = 0; row < 2; ++row) {
    const Tensor xr = Tensor::from({3}, {xb.at(row * 3), xb.at(row * 3 + 1), xb.at(row * 3 + 2)});
    const LstmState single = lstm_step(xr, layer.zero_state(), layer);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_FLOAT_EQ(batched.h.at(row * 4 + j), single.h.at(j));
  }
}

TEST(LstmLayer, ShapeErrors) {
  Rng rng(1);
  const LstmLayer layer = LstmLayer::init(3, 4, rng);
  EXPECT_THROW(lstm_step(Tensor::zeros({5}), layer.zero_state(), layer), ShapeError);
  EXPECT_THROW(lstm_step(Tensor::zeros({2, 3}), layer.zero_state(3), layer), ShapeError);
  LstmState wrong{Tensor::zeros({5}), Tensor::zeros({5})};
  EXPECT_THROW(lstm_step(Tensor::zeros({3}), wrong, layer), ShapeError);
}

class GradientCheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradientCheck, FcAnalyticMatchesFiniteDifferences) {
  const auto r = testing::check_fc_gradients(GetParam());
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_relative_error, 1e-3);
}

TEST_P(GradientCheck, LstmAnalyticMatchesFiniteDifferences) {
  const auto r = testing::check_lstm_gradients(GetParam());
  EXPECT_GT(r.checked, 0u);
  EXPECT_LT(r.max_relative_error, 1e-3);
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Range<std::uint64_t>(1, 21));

TEST(ParamChecksum, ChangesWithValuesAndNames) {
  Rng rng(2);
  FcLayer layer = FcLayer::init(3, 2, Activation::tanh, rng);
  ParamList a, b;
  layer.append_params(a, "x");
  layer.append_params(b, "y");
  EXPECT_NE(param_checksum(a), param_checksum(b));
  const auto before = param_checksum(a);
  layer.weight.data()[0] += 1.0f;
  EXPECT_NE(param_checksum(a), before);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  Tensor p = Tensor::vector({1.0f, -2.0f, 0.5f}, true);
  sum(mul(p, Tensor::vector({3.0f, -0.5f, 0.0f}))).backward();
  Adam opt({p}, {.learning_rate = 0.1f});
  opt.step();
  // Bias-corrected first step: m_hat / sqrt(v_hat) = sign(g).
  EXPECT_NEAR(p.at(0), 0.9f, 1e-5);
  EXPECT_NEAR(p.at(1), -1.9f, 1e-5);
  EXPECT_NEAR(p.at(2), 0.5f, 1e-6);
  EXPECT_EQ(opt.state().step, 1u);
}

TEST(Adam, ClippingScalesGlobalNorm) {
  Tensor p = Tensor::vector({0.0f, 0.0f}, true);
  sum(mul(p, Tensor::vector({30.0f, 40.0f}))).backward();
  EXPECT_NEAR(grad_norm({p}), 50.0, 1e-4);
  std::vector<Tensor> params{p};
  auto state = OptimizerState::for_params(params, {.learning_rate = 1.0f, .clip_norm = 5.0f});
  adam_step(params, state);
  // After clipping the gradient is (3, 4); the first Adam step is still -lr * sign.
  EXPECT_NEAR(p.at(0), -1.0f, 1e-4);
  EXPECT_NEAR(p.at(1), -1.0f, 1e-4);
  zero_grads(params);
  EXPECT_EQ(grad_norm(params), 0.0);
}

}  // namespace
}  // namespace lgi
