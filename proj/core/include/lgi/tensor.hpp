#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lgi {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

namespace detail {
struct TensorNode;
}

/// Dense row-major float32 array with optional reverse-mode gradient tracking.
///
/// A Tensor is a cheap shared handle. Operations on tensors that require
/// gradients record their inputs and a backward rule; calling backward() on a
/// scalar result walks that record in reverse topological order. Leaf tensors
/// (parameters) accumulate gradients across calls until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor vector(std::initializer_list<float> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;

  std::span<float> data();
  std::span<const float> data() const;
  float item() const;
  float at(std::size_t index) const { return data()[index]; }

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  /// Gradient buffer; empty span when no gradient has been accumulated.
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  /// Reverse pass from a one-element tensor. Non-leaf gradients are cleared
  /// first, leaf gradients accumulate.
  void backward() const;

  /// Copy of the values, cut off from the recorded computation.
  Tensor detach() const;
  /// Same values viewed with a new shape (copying, recorded for gradients).
  Tensor reshape(Shape shape) const;

  std::vector<float> to_vector() const;

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
  friend struct TensorAccess;

  std::shared_ptr<detail::TensorNode> node_;
};

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() noexcept;
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

// Differentiable operations. Matrices are rank-2 [rows x cols]; rank-1
// arguments to matmul/linear are treated as a single row.

Tensor matmul(const Tensor& a, const Tensor& b);
/// x * W^T + b with W stored [out x in]; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float factor);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
/// Concatenation along the last axis of rank-2 (or rank-1) tensors.
Tensor concat_cols(const std::vector<Tensor>& parts);
/// Stacks rank-2 tensors with equal column counts vertically.
Tensor concat_rows(const std::vector<Tensor>& parts);
/// Columns [begin, end) of a rank-2 (or rank-1) tensor.
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor sum(const Tensor& a);
Tensor square_sum(const Tensor& a);
/// sum_i w_i * sum_j a_ij^2 with constant per-row weights.
Tensor weighted_square_sum(const Tensor& a, std::span<const float> row_weights);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

bool all_finite(std::span<const float> values) noexcept;

}  // namespace lgi
