#include "lgi/optim.hpp"

#include <cmath>

#include "lgi/errors.hpp"

namespace lgi {

OptimizerState OptimizerState::for_params(const std::vector<Tensor>& params, AdamConfig config) {
  OptimizerState state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.emplace_back(p.size(), 0.0f);
    state.second_moment.emplace_back(p.size(), 0.0f);
  }
  return state;
}

double grad_norm(const std::vector<Tensor>& params) {
  double total = 0.0;
  for (const auto& p : params) {
    for (float g : p.grad()) total += static_cast<double>(g) * g;
  }
  return std::sqrt(total);
}

void adam_step(std::vector<Tensor>& params, OptimizerState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but state holds " +
                     std::to_string(state.first_moment.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != state.first_moment[k].size()) {
      throw ShapeError("adam_step: parameter " + std::to_string(k) + " has " + std::to_string(params[k].size()) +
                       " values, moments have " + std::to_string(state.first_moment[k].size()));
    }
  }
  const auto& cfg = state.config;
  float clip = 1.0f;
  if (cfg.clip_norm > 0.0f) {
    const double norm = grad_norm(params);
    if (norm > cfg.clip_norm) clip = static_cast<float>(cfg.clip_norm / norm);
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const float correction1 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta1), t));
  const float correction2 = static_cast<float>(1.0 - std::pow(static_cast<double>(cfg.beta2), t));

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].data();
    const auto grads = params[k].grad();
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float g = grads.empty() ? 0.0f : grads[i] * clip;
      m[i] = cfg.beta1 * m[i] + (1.0f - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0f - cfg.beta2) * g * g;
      const float m_hat = m[i] / correction1;
      const float v_hat = v[i] / correction2;
      values[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace lgi
