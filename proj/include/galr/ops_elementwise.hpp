#pragma once

#include <cmath>
#include <vector>

#include "galr/tensor.hpp"

namespace galr {

namespace detail {

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  require(a == b, std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

template <typename T>
T sigmoid_scalar(T x) {
  // Split on sign so exp never overflows.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// Unary op with derivative expressed through (input, output).
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, const char* name, Fwd fwd, Deriv deriv) {
  const auto in = x.data();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  return Tensor<T>::make_result(x.shape(), std::move(out), name, {x}, [deriv](const Node<T>& n) {
    auto gx = input_grad(n, 0);
    if (gx.empty()) return;
    const auto xv = input_value(n, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += n.grad[i] * deriv(xv[i], n.value[i]);
  });
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), "add", {a, b}, [](const detail::Node<T>& n) {
    for (std::size_t k = 0; k < 2; ++k) {
      auto g = detail::input_grad(n, k);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "sub");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), "sub", {a, b}, [](const detail::Node<T>& n) {
    auto ga = detail::input_grad(n, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i];
    auto gb = detail::input_grad(n, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= n.grad[i];
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return Tensor<T>::make_result(a.shape(), std::move(out), "mul", {a, b}, [](const detail::Node<T>& n) {
    const auto av = detail::input_value(n, 0);
    const auto bv = detail::input_value(n, 1);
    auto ga = detail::input_grad(n, 0);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += n.grad[i] * bv[i];
    auto gb = detail::input_grad(n, 1);
    for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += n.grad[i] * av[i];
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * factor;
  return Tensor<T>::make_result(x.shape(), std::move(out), "scale", {x}, [factor](const detail::Node<T>& n) {
    auto g = detail::input_grad(n, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * factor;
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  // Subgradient 0 at the origin.
  return detail::unary(
      x, "relu", [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return detail::unary(
      x, "sigmoid", [](T v) { return detail::sigmoid_scalar(v); },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return detail::unary(
      x, "tanh", [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

// x * sigmoid(x)
template <typename T>
Tensor<T> swish(const Tensor<T>& x) {
  return detail::unary(
      x, "swish", [](T v) { return v * detail::sigmoid_scalar(v); },
      [](T v, T) {
        const T s = detail::sigmoid_scalar(v);
        return s * (T(1) + v * (T(1) - s));
      });
}

// Sum of all elements as a 1-element tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total = T(0);
  for (T v : x.data()) total += v;
  return Tensor<T>::make_result({1}, {total}, "sum", {x}, [](const detail::Node<T>& n) {
    auto g = detail::input_grad(n, 0);
    for (auto& v : g) v += n.grad[0];
  });
}

// Sum of elementwise products with a constant weight tensor; handy for
// building scalar probes of a vector-valued output.
template <typename T>
Tensor<T> weighted_sum(const Tensor<T>& x, const Tensor<T>& weights) {
  return sum(mul(x, weights));
}

}  // namespace galr
