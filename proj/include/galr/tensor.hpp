#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "galr/error.hpp"

namespace galr {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += " x ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(const Node&)> backward;

  bool is_leaf() const { return !backward; }

  std::span<T> grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    return grad;
  }
};

// Gradient accumulator for input `i` of `node`, or an empty span when that
// input does not take part in differentiation.
template <typename T>
std::span<T> input_grad(const Node<T>& node, std::size_t i) {
  const auto& in = node.inputs[i];
  if (!in || !in->requires_grad) return {};
  return in->grad_buffer();
}

template <typename T>
std::span<const T> input_value(const Node<T>& node, std::size_t i) {
  return node.inputs[i]->value;
}

}  // namespace detail

// Dense row-major n-dimensional array with optional gradient tracking.
// Copies share storage; forward ops never mutate their operands.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using BackwardFn = std::function<void(const detail::Node<T>&)>;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<T>>()) {
    for (auto d : shape) require(d > 0, "tensor dimensions must be positive, got " + shape_str(shape));
    require(shape_numel(shape) == data.size(),
            "tensor data length " + std::to_string(data.size()) + " does not match shape " +
                shape_str(shape));
    node_->shape = std::move(shape);
    node_->value = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T(0)), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  // Builds an op result. The graph edge is only recorded when at least one
  // input requires a gradient, so inference runs without tape overhead.
  static Tensor make_result(Shape shape, std::vector<T> data, const char* op,
                            std::vector<Tensor> inputs, BackwardFn backward) {
    Tensor out(std::move(shape), std::move(data));
    out.node_->op = op;
    const bool track = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor& t) { return t.requires_grad(); });
    if (track) {
      out.node_->requires_grad = true;
      out.node_->backward = std::move(backward);
      out.node_->inputs.reserve(inputs.size());
      for (auto& t : inputs) out.node_->inputs.push_back(t.node_);
    }
    return out;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t numel() const { return node_->value.size(); }

  std::span<const T> data() const { return node_->value; }
  std::vector<T> to_vector() const { return node_->value; }

  // Writable view for leaves only (parameter init, loading, perturbation).
  std::span<T> mutable_data() {
    require(node_->is_leaf(), "mutable_data() is only available on leaf tensors");
    return node_->value;
  }

  T item() const {
    require(numel() == 1, "item() requires a single-element tensor, got " + shape_str(shape()));
    return node_->value[0];
  }

  template <typename... I>
  T operator()(I... idx) const {
    const std::size_t index[] = {static_cast<std::size_t>(idx)...};
    require(sizeof...(I) == rank(), "index rank mismatch");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < sizeof...(I); ++i) {
      require(index[i] < node_->shape[i], "index out of range");
      flat = flat * node_->shape[i] + index[i];
    }
    return node_->value[flat];
  }

  bool requires_grad() const { return node_ && node_->requires_grad; }

  void set_requires_grad(bool on) {
    require(node_->is_leaf(), "requires_grad can only be toggled on leaf tensors");
    node_->requires_grad = on;
  }

  bool has_grad() const { return node_ && node_->grad.size() == node_->value.size(); }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  bool is_leaf() const { return node_->is_leaf(); }
  std::string_view op() const { return node_->op; }

  Tensor detach() const { return Tensor(shape(), node_->value); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(node_->value.begin(), node_->value.end());
    return Tensor<U>(shape(), std::move(out));
  }

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

// Test hook for the gradient checker: scales the incoming adjoint of every
// node whose op name equals `corrupt_op`.
struct BackwardOptions {
  std::string corrupt_op;
  double corrupt_scale = 1.5;
};

// Reverse topological ordering of the differentiable subgraph under a root.
template <typename T>
class GradTape {
 public:
  explicit GradTape(const Tensor<T>& root) {
    require(root.defined(), "cannot build a tape from an undefined tensor");
    if (!root.requires_grad()) return;
    using NodePtr = detail::Node<T>*;
    std::unordered_set<NodePtr> visited;
    // Iterative post-order DFS; deep recurrences must not blow the stack.
    std::vector<std::pair<NodePtr, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    visited.insert(root.node().get());
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      if (next < node->inputs.size()) {
        NodePtr child = node->inputs[next++].get();
        if (child && child->requires_grad && visited.insert(child).second)
          stack.emplace_back(child, 0);
      } else {
        order_.push_back(node);
        stack.pop_back();
      }
    }
    std::reverse(order_.begin(), order_.end());
  }

  std::size_t size() const { return order_.size(); }

  std::vector<std::string_view> ops() const {
    std::vector<std::string_view> out;
    out.reserve(order_.size());
    for (auto* n : order_) out.emplace_back(n->op);
    return out;
  }

  // Seeds the root adjoint with one and replays every recorded op once in
  // reverse. Leaf gradients accumulate across calls; interior gradients are
  // reset first.
  void backward(const BackwardOptions& options = {}) {
    if (order_.empty()) return;
    for (auto* n : order_)
      if (!n->is_leaf()) n->grad.clear();
    auto root_grad = order_.front()->grad_buffer();
    for (auto& g : root_grad) g += T(1);
    for (auto* n : order_) {
      if (n->is_leaf() || n->grad.empty()) continue;
      if (!options.corrupt_op.empty() && options.corrupt_op == n->op)
        for (auto& g : n->grad) g *= static_cast<T>(options.corrupt_scale);
      n->backward(*n);
    }
  }

 private:
  std::vector<detail::Node<T>*> order_;
};

template <typename T>
void backward(const Tensor<T>& loss, const BackwardOptions& options = {}) {
  require(loss.defined() && loss.numel() == 1,
          "backward() requires a scalar loss, got " +
              (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  GradTape<T>(loss).backward(options);
}

}  // namespace galr
