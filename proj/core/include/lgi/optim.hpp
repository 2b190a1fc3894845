#pragma once

#include <cstdint>
#include <vector>

#include "lgi/tensor.hpp"

namespace lgi {

struct AdamConfig {
  float learning_rate = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float epsilon = 1e-8f;
  /// Global gradient-norm clip; 0 disables clipping.
  float clip_norm = 0.0f;
};

struct OptimizerState {
  AdamConfig config;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;
  std::uint64_t step = 0;

  static OptimizerState for_params(const std::vector<Tensor>& params, AdamConfig config = {});
};

/// One bias-corrected Adam update using the gradients stored on `params`.
/// Parameters without a gradient are treated as having a zero gradient.
void adam_step(std::vector<Tensor>& params, OptimizerState& state);

void zero_grads(std::vector<Tensor>& params);

/// Euclidean norm over all gradients.
double grad_norm(const std::vector<Tensor>& params);

/// Convenience wrapper holding a parameter list and its state.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {})
      : params_(std::move(params)), state_(OptimizerState::for_params(params_, config)) {}

  void step() { adam_step(params_, state_); }
  void zero_grad() { zero_grads(params_); }
  const OptimizerState& state() const { return state_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  OptimizerState state_;
};

}  // namespace lgi
