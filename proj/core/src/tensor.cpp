#include "lgi/tensor.hpp"

#include <Eigen/Core>
#include <Eigen/StdVector>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "lgi/errors.hpp"

namespace lgi {

namespace detail {

// Aligned to the SIMD packet size so Eigen takes the same code path for every
// buffer, independent of where the heap places it.
using Buffer = std::vector<float, Eigen::aligned_allocator<float>>;

struct TensorNode {
  Shape shape;
  Buffer value;
  Buffer grad;
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  Buffer& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
    return grad;
  }
};

}  // namespace detail

using detail::Buffer;
using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

struct TensorAccess {
  static const NodePtr& node(const Tensor& t) {
    if (!t.node_) throw ContractError("operation on an undefined tensor");
    return t.node_;
  }
  static Tensor wrap(NodePtr node) { return Tensor(std::move(node)); }
};

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Eigen::Index;

MatMap as_matrix(Buffer& v, std::size_t rows, std::size_t cols) {
  return MatMap(v.data(), static_cast<Index>(rows), static_cast<Index>(cols));
}
ConstMatMap as_matrix(const Buffer& v, std::size_t rows, std::size_t cols) {
  return ConstMatMap(v.data(), static_cast<Index>(rows), static_cast<Index>(cols));
}

const NodePtr& node_of(const Tensor& t) { return TensorAccess::node(t); }

NodePtr make_node(Shape shape, Buffer value, const std::vector<NodePtr>& parents) {
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  if (g_grad_enabled) {
    const bool tracked = std::any_of(parents.begin(), parents.end(),
                                     [](const NodePtr& p) { return p->requires_grad; });
    if (tracked) {
      node->requires_grad = true;
      node->leaf = false;
      node->parents = parents;
    }
  }
  return node;
}

// Rows and columns of a rank-1 or rank-2 tensor (rank-1 is one row).
std::pair<std::size_t, std::size_t> matrix_dims(const Shape& s, const char* op) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError(std::string(op) + ": expected rank 1 or 2, got " + shape_string(s));
}

void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (a != b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  }
}

template <typename Fn>
Tensor unary(const Tensor& a, Fn forward, void (*backward)(const TensorNode&, const TensorNode&, Buffer&)) {
  const auto& pa = node_of(a);
  Buffer out(pa->value.size());
  std::transform(pa->value.begin(), pa->value.end(), out.begin(), forward);
  auto node = make_node(pa->shape, std::move(out), {pa});
  if (node->requires_grad) {
    node->backward_fn = [backward](TensorNode& self) {
      auto& parent = *self.parents[0];
      if (parent.requires_grad) backward(self, parent, parent.ensure_grad());
    };
  }
  return TensorAccess::wrap(std::move(node));
}

float stable_sigmoid(float x) {
  if (x >= 0.0f) return 1.0f / (1.0f + std::exp(-x));
  const float e = std::exp(x);
  return e / (1.0f + e);
}

}  // namespace

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

bool grad_enabled() noexcept { return g_grad_enabled; }

NoGradGuard::NoGradGuard() noexcept : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace {

Tensor make_leaf(Shape shape, Buffer values, bool requires_grad) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("Tensor::from: " + shape_string(shape) + " needs " + std::to_string(shape_size(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return TensorAccess::wrap(std::move(node));
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  Buffer values(shape_size(shape), value);
  return make_leaf(std::move(shape), std::move(values), requires_grad);
}


Tensor Tensor::from(Shape shape, std::vector<float> values, bool requires_grad) {
  return make_leaf(std::move(shape), Buffer(values.begin(), values.end()), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<float> values, bool requires_grad) {
  return make_leaf({values.size()}, Buffer(values), requires_grad);
}

const Shape& Tensor::shape() const { return node_of(*this)->shape; }
std::size_t Tensor::size() const { return node_of(*this)->value.size(); }
std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw ShapeError("dim: axis out of range for " + shape_string(s));
  return s[axis];
}

std::span<float> Tensor::data() { return node_of(*this)->value; }
std::span<const float> Tensor::data() const { return node_of(*this)->value; }

float Tensor::item() const {
  const auto& n = node_of(*this);
  if (n->value.size() != 1) throw ShapeError("item: tensor has " + std::to_string(n->value.size()) + " elements");
  return n->value[0];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }

void Tensor::set_requires_grad(bool flag) {
  const auto& n = node_of(*this);
  if (!n->leaf) throw ContractError("set_requires_grad on a non-leaf tensor");
  n->requires_grad = flag;
}

bool Tensor::has_grad() const { return !node_of(*this)->grad.empty(); }
std::span<const float> Tensor::grad() const { return node_of(*this)->grad; }
std::span<float> Tensor::mutable_grad() { return node_of(*this)->ensure_grad(); }
void Tensor::zero_grad() { node_of(*this)->grad.clear(); }

void Tensor::backward() const {
  const auto& root = node_of(*this);
  if (root->value.size() != 1) {
    throw ContractError("backward: seed must be a scalar, got " + shape_string(root->shape));
  }
  if (!root->requires_grad) throw ContractError("backward: tensor is not part of a recorded computation");

  // Iterative post-order DFS gives a topological order without recursion depth limits.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (TensorNode* n : order) {
    if (!n->leaf) n->grad.clear();
  }
  root->ensure_grad()[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Tensor Tensor::detach() const {
  const auto& n = node_of(*this);
  return make_leaf(n->shape, n->value, false);
}

Tensor Tensor::reshape(Shape shape) const {
  const auto& pa = node_of(*this);
  if (shape_size(shape) != pa->value.size()) {
    throw ShapeError("reshape: " + shape_string(pa->shape) + " -> " + shape_string(shape));
  }
  auto node = make_node(std::move(shape), pa->value, {pa});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      auto& g = p.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  }
  return Tensor(std::move(node));
}

std::vector<float> Tensor::to_vector() const {
  const auto& v = node_of(*this)->value;
  return {v.begin(), v.end()};
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& pa = node_of(a);
  const auto& pb = node_of(b);
  const auto [m, k] = matrix_dims(pa->shape, "matmul");
  if (pb->shape.size() != 2) throw ShapeError("matmul: right operand must be rank 2, got " + shape_string(pb->shape));
  const std::size_t k2 = pb->shape[0], n = pb->shape[1];
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(pa->shape) + " x " + shape_string(pb->shape));
  }
  Buffer out(m * n);
  as_matrix(out, m, n).noalias() = as_matrix(pa->value, m, k) * as_matrix(pb->value, k, n);
  Shape shape = pa->shape.size() == 1 ? Shape{n} : Shape{m, n};
  auto node = make_node(std::move(shape), std::move(out), {pa, pb});
  if (node->requires_grad) {
    node->backward_fn = [m, k, n](TensorNode& self) {
      auto& A = *self.parents[0];
      auto& B = *self.parents[1];
      const auto dC = as_matrix(std::as_const(self.grad), m, n);
      if (A.requires_grad) {
        as_matrix(A.ensure_grad(), m, k).noalias() += dC * as_matrix(std::as_const(B.value), k, n).transpose();
      }
      if (B.requires_grad) {
        as_matrix(B.ensure_grad(), k, n).noalias() += as_matrix(std::as_const(A.value), m, k).transpose() * dC;
      }
    };
  }
  return Tensor(TensorAccess::wrap(std::move(node)));
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const auto& px = node_of(x);
  const auto& pw = node_of(weight);
  const auto [rows, in] = matrix_dims(px->shape, "linear");
  if (pw->shape.size() != 2 || pw->shape[1] != in) {
    throw ShapeError("linear: input " + shape_string(px->shape) + " incompatible with weight " +
                     shape_string(pw->shape));
  }
  const std::size_t out_dim = pw->shape[0];
  std::vector<NodePtr> parents{px, pw};
  Buffer out(rows * out_dim);
  auto y = as_matrix(out, rows, out_dim);
  y.noalias() = as_matrix(px->value, rows, in) * as_matrix(pw->value, out_dim, in).transpose();
  const bool has_bias = bias.defined();
  if (has_bias) {
    const auto& pb = node_of(bias);
    if (pb->value.size() != out_dim) {
      throw ShapeError("linear: bias " + shape_string(pb->shape) + " does not match " + std::to_string(out_dim) +
                       " outputs");
    }
    const Eigen::Map<const Eigen::RowVectorXf> b(pb->value.data(), static_cast<Index>(out_dim));
    y.rowwise() += b;
    parents.push_back(pb);
  }
  Shape shape = px->shape.size() == 1 ? Shape{out_dim} : Shape{rows, out_dim};
  auto node = make_node(std::move(shape), std::move(out), parents);
  if (node->requires_grad) {
    node->backward_fn = [rows, in, out_dim, has_bias](TensorNode& self) {
      auto& X = *self.parents[0];
      auto& W = *self.parents[1];
      const auto dY = as_matrix(std::as_const(self.grad), rows, out_dim);
      if (X.requires_grad) {
        as_matrix(X.ensure_grad(), rows, in).noalias() += dY * as_matrix(std::as_const(W.value), out_dim, in);
      }
      if (W.requires_grad) {
        as_matrix(W.ensure_grad(), out_dim, in).noalias() += dY.transpose() * as_matrix(std::as_const(X.value), rows, in);
      }
      if (has_bias && self.parents[2]->requires_grad) {
        Eigen::Map<Eigen::RowVectorXf> db(self.parents[2]->ensure_grad().data(), static_cast<Index>(out_dim));
        db += dY.colwise().sum();
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& pa = node_of(a);
  const auto& pb = node_of(b);
  require_same_shape(pa->shape, pb->shape, "add");
  Buffer out(pa->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] + pb->value[i];
  auto node = make_node(pa->shape, std::move(out), {pa, pb});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      for (int side = 0; side < 2; ++side) {
        auto& p = *self.parents[side];
        if (!p.requires_grad) continue;
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto& pa = node_of(a);
  const auto& pb = node_of(b);
  require_same_shape(pa->shape, pb->shape, "sub");
  Buffer out(pa->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] - pb->value[i];
  auto node = make_node(pa->shape, std::move(out), {pa, pb});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      if (auto& p = *self.parents[0]; p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
      if (auto& p = *self.parents[1]; p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto& pa = node_of(a);
  const auto& pb = node_of(b);
  require_same_shape(pa->shape, pb->shape, "mul");
  Buffer out(pa->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] * pb->value[i];
  auto node = make_node(pa->shape, std::move(out), {pa, pb});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& A = *self.parents[0];
      auto& B = *self.parents[1];
      if (A.requires_grad) {
        auto& g = A.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * B.value[i];
      }
      if (B.requires_grad) {
        auto& g = B.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * A.value[i];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor scale(const Tensor& a, float factor) {
  const auto& pa = node_of(a);
  Buffer out(pa->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa->value[i] * factor;
  auto node = make_node(pa->shape, std::move(out), {pa});
  if (node->requires_grad) {
    node->backward_fn = [factor](TensorNode& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](float x) { return std::tanh(x); },
      [](const TensorNode& self, const TensorNode&, Buffer& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const float y = self.value[i];
          g[i] += self.grad[i] * (1.0f - y * y);
        }
      });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, stable_sigmoid, [](const TensorNode& self, const TensorNode&, Buffer& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const float y = self.value[i];
      g[i] += self.grad[i] * y * (1.0f - y);
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  std::vector<NodePtr> nodes;
  std::vector<std::size_t> widths;
  const bool vector_form = node_of(parts[0])->shape.size() == 1;
  std::size_t rows = 0, total = 0;
  for (const auto& p : parts) {
    const auto& n = node_of(p);
    const auto [r, c] = matrix_dims(n->shape, "concat_cols");
    if ((n->shape.size() == 1) != vector_form) throw ShapeError("concat_cols: mixed ranks");
    if (nodes.empty()) rows = r;
    if (r != rows) throw ShapeError("concat_cols: row counts differ");
    nodes.push_back(n);
    widths.push_back(c);
    total += c;
  }
  Buffer out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::size_t w = widths[k];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(nodes[k]->value.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + offset));
    }
    offset += w;
  }
  Shape shape = vector_form ? Shape{total} : Shape{rows, total};
  auto node = make_node(std::move(shape), std::move(out), nodes);
  if (node->requires_grad) {
    node->backward_fn = [widths, rows, total](TensorNode& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < widths.size(); ++k) {
        auto& p = *self.parents[k];
        const std::size_t w = widths[k];
        if (p.requires_grad) {
          auto& g = p.ensure_grad();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < w; ++c) g[r * w + c] += self.grad[r * total + off + c];
          }
        }
        off += w;
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  std::vector<NodePtr> nodes;
  std::vector<std::size_t> sizes;
  std::size_t cols = 0, rows = 0;
  for (const auto& p : parts) {
    const auto& n = node_of(p);
    if (n->shape.size() != 2) throw ShapeError("concat_rows: expected rank 2, got " + shape_string(n->shape));
    if (nodes.empty()) cols = n->shape[1];
    if (n->shape[1] != cols) throw ShapeError("concat_rows: column counts differ");
    rows += n->shape[0];
    sizes.push_back(n->value.size());
    nodes.push_back(n);
  }
  Buffer out;
  out.reserve(rows * cols);
  for (const auto& n : nodes) out.insert(out.end(), n->value.begin(), n->value.end());
  auto node = make_node(Shape{rows, cols}, std::move(out), nodes);
  if (node->requires_grad) {
    node->backward_fn = [sizes](TensorNode& self) {
      std::size_t off = 0;
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        auto& p = *self.parents[k];
        if (p.requires_grad) {
          auto& g = p.ensure_grad();
          for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
        }
        off += sizes[k];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const auto& pa = node_of(a);
  const auto [rows, cols] = matrix_dims(pa->shape, "slice_cols");
  if (begin > end || end > cols) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) + ") outside " +
                     shape_string(pa->shape));
  }
  const std::size_t w = end - begin;
  Buffer out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(pa->value.begin() + static_cast<std::ptrdiff_t>(r * cols + begin), w,
                out.begin() + static_cast<std::ptrdiff_t>(r * w));
  }
  Shape shape = pa->shape.size() == 1 ? Shape{w} : Shape{rows, w};
  auto node = make_node(std::move(shape), std::move(out), {pa});
  if (node->requires_grad) {
    node->backward_fn = [rows, cols, begin, w](TensorNode& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += self.grad[r * w + c];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor sum(const Tensor& a) {
  const auto& pa = node_of(a);
  double acc = 0.0;
  for (float v : pa->value) acc += v;
  auto node = make_node(Shape{}, {static_cast<float>(acc)}, {pa});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& g = self.parents[0]->ensure_grad();
      for (auto& x : g) x += self.grad[0];
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor square_sum(const Tensor& a) {
  const auto& pa = node_of(a);
  double acc = 0.0;
  for (float v : pa->value) acc += static_cast<double>(v) * v;
  auto node = make_node(Shape{}, {static_cast<float>(acc)}, {pa});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& p = *self.parents[0];
      auto& g = p.ensure_grad();
      const float s = 2.0f * self.grad[0];
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * p.value[i];
    };
  }
  return TensorAccess::wrap(std::move(node));
}

Tensor weighted_square_sum(const Tensor& a, std::span<const float> row_weights) {
  const auto& pa = node_of(a);
  const auto [rows, cols] = matrix_dims(pa->shape, "weighted_square_sum");
  if (row_weights.size() != rows) {
    throw ShapeError("weighted_square_sum: " + std::to_string(row_weights.size()) + " weights for " +
                     std::to_string(rows) + " rows");
  }
  Buffer weights(row_weights.begin(), row_weights.end());
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (weights[r] == 0.0f) continue;
    double row = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = pa->value[r * cols + c];
      row += v * v;
    }
    acc += weights[r] * row;
  }
  auto node = make_node(Shape{}, {static_cast<float>(acc)}, {pa});
  if (node->requires_grad) {
    node->backward_fn = [weights = std::move(weights), rows, cols](TensorNode& self) {
      auto& p = *self.parents[0];
      auto& g = p.ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const float s = 2.0f * weights[r] * self.grad[0];
        if (s == 0.0f) continue;
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += s * p.value[r * cols + c];
      }
    };
  }
  return TensorAccess::wrap(std::move(node));
}

bool all_finite(std::span<const float> values) noexcept {
  return std::all_of(values.begin(), values.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace lgi
