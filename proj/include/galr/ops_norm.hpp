#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "galr/ops_shape.hpp"
#include "galr/tensor.hpp"

namespace galr {

inline constexpr double kLayerNormEps = 1e-5;

// Normalizes every fibre along `axis` (default: last) to zero mean and unit
// biased variance, then applies gamma/beta of length shape[axis].
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = kLayerNormEps, int axis = -1) {
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? rank + axis : axis;
  require(ax >= 0 && ax < rank, "layer_norm: axis out of range");
  require(eps >= 0.0, "layer_norm: eps must be non-negative");
  const auto split = detail::split_at(x.shape(), static_cast<std::size_t>(ax));
  const std::size_t d = split.extent;
  require(gamma.rank() == 1 && gamma.dim(0) == d && beta.rank() == 1 && beta.dim(0) == d,
          "layer_norm: gamma/beta must have length " + std::to_string(d));

  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto rstd = std::make_shared<std::vector<T>>(split.outer * split.inner);
  std::vector<T> y(x.numel());
  for (std::size_t o = 0; o < split.outer; ++o)
    for (std::size_t i = 0; i < split.inner; ++i) {
      const std::size_t base = o * d * split.inner + i;
      T mean = T(0);
      for (std::size_t k = 0; k < d; ++k) mean += xv[base + k * split.inner];
      mean /= static_cast<T>(d);
      T var = T(0);
      for (std::size_t k = 0; k < d; ++k) {
        const T c = xv[base + k * split.inner] - mean;
        var += c * c;
      }
      var /= static_cast<T>(d);
      const T r = T(1) / std::sqrt(var + static_cast<T>(eps));
      (*rstd)[o * split.inner + i] = r;
      for (std::size_t k = 0; k < d; ++k) {
        const std::size_t idx = base + k * split.inner;
        const T h = (xv[idx] - mean) * r;
        (*xhat)[idx] = h;
        y[idx] = gv[k] * h + bv[k];
      }
    }

  return Tensor<T>::make_result(
      x.shape(), std::move(y), "layer_norm", {x, gamma, beta}, [split, xhat, rstd](const detail::Node<T>& n) {
        const std::size_t d = split.extent;
        const auto gv = detail::input_value(n, 1);
        auto gx = detail::input_grad(n, 0);
        auto gg = detail::input_grad(n, 1);
        auto gb = detail::input_grad(n, 2);
        for (std::size_t o = 0; o < split.outer; ++o)
          for (std::size_t i = 0; i < split.inner; ++i) {
            const std::size_t base = o * d * split.inner + i;
            T mean_dh = T(0);
            T mean_dh_h = T(0);
            for (std::size_t k = 0; k < d; ++k) {
              const std::size_t idx = base + k * split.inner;
              const T gy = n.grad[idx];
              const T dh = gy * gv[k];
              mean_dh += dh;
              mean_dh_h += dh * (*xhat)[idx];
              if (!gg.empty()) gg[k] += gy * (*xhat)[idx];
              if (!gb.empty()) gb[k] += gy;
            }
            if (gx.empty()) continue;
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            const T r = (*rstd)[o * split.inner + i];
            for (std::size_t k = 0; k < d; ++k) {
              const std::size_t idx = base + k * split.inner;
              gx[idx] += r * (n.grad[idx] * gv[k] - mean_dh - (*xhat)[idx] * mean_dh_h);
            }
          }
      });
}

// Softmax over the last axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto xv = x.data();
  std::vector<T> y(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data() + r * d;
    T* out = y.data() + r * d;
    T peak = in[0];
    for (std::size_t k = 1; k < d; ++k) peak = std::max(peak, in[k]);
    T total = T(0);
    for (std::size_t k = 0; k < d; ++k) {
      out[k] = std::exp(in[k] - peak);
      total += out[k];
    }
    for (std::size_t k = 0; k < d; ++k) out[k] /= total;
  }
  return Tensor<T>::make_result(x.shape(), std::move(y), "softmax", {x}, [rows, d](const detail::Node<T>& n) {
    auto gx = detail::input_grad(n, 0);
    if (gx.empty()) return;
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = n.value.data() + r * d;
      const T* gy = n.grad.data() + r * d;
      T inner = T(0);
      for (std::size_t k = 0; k < d; ++k) inner += gy[k] * y[k];
      for (std::size_t k = 0; k < d; ++k) gx[r * d + k] += y[k] * (gy[k] - inner);
    }
  });
}

// Bin i of the last axis covers [floor(i * L_in / L_out), floor((i + 1) * L_in / L_out)).
inline std::pair<std::size_t, std::size_t> adaptive_bin(std::size_t i, std::size_t len_in, std::size_t len_out) {
  return {i * len_in / len_out, (i + 1) * len_in / len_out};
}

// Averages contiguous bins of the last axis down to `len_out` entries.
template <typename T>
Tensor<T> adaptive_avg_pool1d(const Tensor<T>& x, std::size_t len_out) {
  require(x.rank() >= 1, "adaptive_avg_pool1d: rank must be >= 1");
  const std::size_t len_in = x.shape().back();
  require(len_out >= 1 && len_out <= len_in,
          "adaptive_avg_pool1d: cannot pool length " + std::to_string(len_in) + " to " + std::to_string(len_out));
  const std::size_t rows = x.numel() / len_in;
  Shape out_shape = x.shape();
  out_shape.back() = len_out;
  const auto xv = x.data();
  std::vector<T> y(rows * len_out);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t i = 0; i < len_out; ++i) {
      const auto [lo, hi] = adaptive_bin(i, len_in, len_out);
      T total = T(0);
      for (std::size_t k = lo; k < hi; ++k) total += xv[r * len_in + k];
      y[r * len_out + i] = total / static_cast<T>(hi - lo);
    }
  return Tensor<T>::make_result(std::move(out_shape), std::move(y), "adaptive_avg_pool1d", {x},
                                [rows, len_in, len_out](const detail::Node<T>& n) {
                                  auto gx = detail::input_grad(n, 0);
                                  if (gx.empty()) return;
                                  for (std::size_t r = 0; r < rows; ++r)
                                    for (std::size_t i = 0; i < len_out; ++i) {
                                      const auto [lo, hi] = adaptive_bin(i, len_in, len_out);
                                      const T g = n.grad[r * len_out + i] / static_cast<T>(hi - lo);
                                      for (std::size_t k = lo; k < hi; ++k) gx[r * len_in + k] += g;
                                    }
                                });
}

}  // namespace galr
