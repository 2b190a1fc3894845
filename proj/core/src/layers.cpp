#include "lgi/layers.hpp"

#include <cmath>
#include <cstring>

#include "lgi/errors.hpp"

namespace lgi {

namespace {

Tensor uniform_tensor(Shape shape, float bound, Rng& rng) {
  std::vector<float> values(shape_size(shape));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(values), true);
}

}  // namespace

Tensor activate(const Tensor& x, Activation activation) {
  switch (activation) {
    case Activation::tanh:
      return tanh(x);
    case Activation::sigmoid:
      return sigmoid(x);
    case Activation::identity:
      break;
  }
  return x;
}

FcLayer FcLayer::init(std::size_t in, std::size_t out, Activation activation, Rng& rng) {
  if (in == 0 || out == 0) throw ShapeError("FcLayer::init: zero-sized layer");
  const float bound = 1.0f / std::sqrt(static_cast<float>(in));
  FcLayer layer;
  layer.weight = uniform_tensor({out, in}, bound, rng);
  layer.bias = uniform_tensor({out}, bound, rng);
  layer.activation = activation;
  return layer;
}

void FcLayer::append_params(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Tensor fc_forward(const Tensor& x, const FcLayer& layer) {
  return activate(linear(x, layer.weight, layer.bias), layer.activation);
}

LstmLayer LstmLayer::init(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  if (input_size == 0 || hidden_size == 0) throw ShapeError("LstmLayer::init: zero-sized layer");
  const float bound = 1.0f / std::sqrt(static_cast<float>(input_size + hidden_size));
  LstmLayer layer;
  layer.w_input = uniform_tensor({4 * hidden_size, input_size}, bound, rng);
  layer.w_hidden = uniform_tensor({4 * hidden_size, hidden_size}, bound, rng);
  layer.bias = uniform_tensor({4 * hidden_size}, bound, rng);
  return layer;
}

LstmState LstmLayer::zero_state(std::size_t batch) const {
  const std::size_t h = hidden_size();
  Shape shape = batch == 0 ? Shape{h} : Shape{batch, h};
  return {Tensor::zeros(shape), Tensor::zeros(shape)};
}

void LstmLayer::append_params(ParamList& out, const std::string& prefix) const {
  out.push_back({prefix + ".w_input", w_input});
  out.push_back({prefix + ".w_hidden", w_hidden});
  out.push_back({prefix + ".bias", bias});
}

LstmState lstm_step(const Tensor& x, const LstmState& state, const LstmLayer& layer) {
  const std::size_t hs = layer.hidden_size();
  if (state.h.shape() != state.c.shape()) throw ShapeError("lstm_step: h and c shapes differ");
  if (state.h.shape().back() != hs) {
    throw ShapeError("lstm_step: state " + shape_string(state.h.shape()) + " does not match hidden size " +
                     std::to_string(hs));
  }
  if (x.rank() != state.h.rank() || (x.rank() == 2 && x.dim(0) != state.h.dim(0))) {
    throw ShapeError("lstm_step: input " + shape_string(x.shape()) + " incompatible with state " +
                     shape_string(state.h.shape()));
  }
  const Tensor z = linear(x, layer.w_input, layer.bias) + linear(state.h, layer.w_hidden, Tensor{});
  const Tensor i = sigmoid(slice_cols(z, 0, hs));
  const Tensor f = sigmoid(slice_cols(z, hs, 2 * hs));
  const Tensor o = sigmoid(slice_cols(z, 2 * hs, 3 * hs));
  const Tensor g = tanh(slice_cols(z, 3 * hs, 4 * hs));
  Tensor c = f * state.c + i * g;
  Tensor h = o * tanh(c);
  return {std::move(h), std::move(c)};
}

std::uint64_t param_checksum(const ParamList& params) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  auto feed = [&hash](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 0x100000001B3ULL;
    }
  };
  for (const auto& p : params) {
    feed(p.name.data(), p.name.size());
    const auto values = p.tensor.data();
    feed(values.data(), values.size_bytes());
  }
  return hash;
}

std::vector<Tensor> tensors_of(const ParamList& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor);
  return out;
}

}  // namespace lgi
