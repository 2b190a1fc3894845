#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lgi/rng.hpp"
#include "lgi/tensor.hpp"

namespace lgi {

enum class Activation { identity, tanh, sigmoid };

Tensor activate(const Tensor& x, Activation activation);

/// A trainable tensor together with its stable checkpoint name.
struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

/// Fully connected layer: activation(W x + b), W stored [out x in].
struct FcLayer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::identity;

  /// Weights and biases drawn from uniform(-1/sqrt(in), 1/sqrt(in)).
  static FcLayer init(std::size_t in, std::size_t out, Activation activation, Rng& rng);

  std::size_t in_features() const { return weight.dim(1); }
  std::size_t out_features() const { return weight.dim(0); }

  void append_params(ParamList& out, const std::string& prefix) const;
};

/// x is [in] or [batch x in].
Tensor fc_forward(const Tensor& x, const FcLayer& layer);

struct LstmState {
  Tensor h;
  Tensor c;
};

/// LSTM cell. Gate blocks in the stacked weights are ordered
/// input, forget, output, candidate; each block has hidden_size rows.
struct LstmLayer {
  Tensor w_input;   // [4H x in]
  Tensor w_hidden;  // [4H x H]
  Tensor bias;      // [4H]

  static LstmLayer init(std::size_t input_size, std::size_t hidden_size, Rng& rng);

  std::size_t input_size() const { return w_input.dim(1); }
  std::size_t hidden_size() const { return w_hidden.dim(1); }

  /// Zero state for a batch; batch == 0 gives rank-1 [H] state.
  LstmState zero_state(std::size_t batch = 0) const;

  void append_params(ParamList& out, const std::string& prefix) const;
};

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmLayer& layer);

/// FNV-1a over the raw bytes of every parameter, in order.
std::uint64_t param_checksum(const ParamList& params);

std::vector<Tensor> tensors_of(const ParamList& params);

}  // namespace lgi
