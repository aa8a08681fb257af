#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "galr/parallel.hpp"
#include "galr/tensor.hpp"

namespace galr {

namespace detail {

// Four independent partial sums, combined in a fixed order.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T s0 = T(0), s1 = T(0), s2 = T(0), s3 = T(0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

// y[r, o] = bias[o] + <x[r, :], w[o, :]>
template <typename T>
void affine_rows(const T* x, const T* w, const T* bias, T* y, std::size_t rows, std::size_t in,
                 std::size_t out) {
  parallel_for(rows, 16, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const T* xr = x + r * in;
      T* yr = y + r * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = (bias ? bias[o] : T(0)) + dot(xr, w + o * in, in);
    }
  });
}

// Adjoint of affine_rows. Any of gx/gw/gb may be null.
template <typename T>
void affine_rows_backward(const T* x, const T* w, const T* gy, T* gx, T* gw, T* gb, std::size_t rows,
                          std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* gr = gy + r * out;
    for (std::size_t o = 0; o < out; ++o) {
      const T g = gr[o];
      if (g == T(0)) continue;
      if (gx) axpy(g, w + o * in, gx + r * in, in);
      if (gw) axpy(g, x + r * in, gw + o * in, in);
      if (gb) gb[o] += g;
    }
  }
}

template <typename T>
T* data_or_null(std::span<T> s) {
  return s.empty() ? nullptr : s.data();
}

}  // namespace detail

// x[..., in] -> [..., out] with weight [out x in] and optional bias [out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias = {}) {
  require(weight.rank() == 2, "linear: weight must be [out x in], got " + shape_str(weight.shape()));
  const std::size_t out = weight.dim(0);
  const std::size_t in = weight.dim(1);
  require(x.rank() >= 1 && x.shape().back() == in,
          "linear: input " + shape_str(x.shape()) + " does not end in " + std::to_string(in));
  if (bias.defined())
    require(bias.rank() == 1 && bias.dim(0) == out, "linear: bias must be [" + std::to_string(out) + "]");
  const std::size_t rows = x.numel() / in;
  Shape out_shape = x.shape();
  out_shape.back() = out;
  std::vector<T> y(rows * out);
  detail::affine_rows(x.data().data(), weight.data().data(), bias.defined() ? bias.data().data() : nullptr,
                      y.data(), rows, in, out);
  return Tensor<T>::make_result(
      std::move(out_shape), std::move(y), "linear", {x, weight, bias},
      [rows, in, out](const detail::Node<T>& n) {
        detail::affine_rows_backward(detail::input_value(n, 0).data(), detail::input_value(n, 1).data(),
                                     n.grad.data(), detail::data_or_null(detail::input_grad(n, 0)),
                                     detail::data_or_null(detail::input_grad(n, 1)),
                                     n.inputs[2] ? detail::data_or_null(detail::input_grad(n, 2)) : nullptr,
                                     rows, in, out);
      });
}

// Batched matrix product over matching leading dims:
// a[..., m, k] x b[..., k, n] (or b[..., n, k] when transpose_b).
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false) {
  require(a.rank() >= 2 && a.rank() == b.rank(), "matmul: operands must share rank >= 2");
  const std::size_t r = a.rank();
  for (std::size_t i = 0; i + 2 < r; ++i) require(a.dim(i) == b.dim(i), "matmul: batch dimension mismatch");
  const std::size_t m = a.dim(r - 2);
  const std::size_t k = a.dim(r - 1);
  const std::size_t n = transpose_b ? b.dim(r - 2) : b.dim(r - 1);
  require((transpose_b ? b.dim(r - 1) : b.dim(r - 2)) == k,
          "matmul: inner dimension mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const std::size_t batch = a.numel() / (m * k);
  Shape out_shape = a.shape();
  out_shape[r - 1] = n;
  std::vector<T> out(batch * m * n, T(0));
  const T* av = a.data().data();
  const T* bv = b.data().data();
  parallel_for(batch, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t bi = begin; bi < end; ++bi) {
      const T* A = av + bi * m * k;
      const T* B = bv + bi * k * n;
      T* C = out.data() + bi * m * n;
      for (std::size_t i = 0; i < m; ++i) {
        if (transpose_b) {
          for (std::size_t j = 0; j < n; ++j) C[i * n + j] = detail::dot(A + i * k, B + j * k, k);
        } else {
          for (std::size_t p = 0; p < k; ++p) detail::axpy(A[i * k + p], B + p * n, C + i * n, n);
        }
      }
    }
  });
  return Tensor<T>::make_result(
      std::move(out_shape), std::move(out), "matmul", {a, b},
      [batch, m, k, n, transpose_b](const detail::Node<T>& node) {
        const T* A = detail::input_value(node, 0).data();
        const T* B = detail::input_value(node, 1).data();
        T* gA = detail::data_or_null(detail::input_grad(node, 0));
        T* gB = detail::data_or_null(detail::input_grad(node, 1));
        const T* G = node.grad.data();
        for (std::size_t bi = 0; bi < batch; ++bi) {
          const T* a = A + bi * m * k;
          const T* b = B + bi * k * n;
          const T* g = G + bi * m * n;
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
              const T gij = g[i * n + j];
              if (gij == T(0)) continue;
              if (transpose_b) {
                // C[i,j] = sum_p a[i,p] b[j,p]
                if (gA) detail::axpy(gij, b + j * k, gA + bi * m * k + i * k, k);
                if (gB) detail::axpy(gij, a + i * k, gB + bi * k * n + j * k, k);
              } else {
                // C[i,j] = sum_p a[i,p] b[p,j]
                for (std::size_t p = 0; p < k; ++p) {
                  if (gA) gA[bi * m * k + i * k + p] += gij * b[p * n + j];
                  if (gB) gB[bi * k * n + p * n + j] += gij * a[i * k + p];
                }
              }
            }
        }
      });
}

// Cross-correlation (no kernel flip).
// input [in x L] or [batch x in x L], weight [out x in x kernel], bias [out].
// L_out = floor((L + 2 pad - kernel) / stride) + 1.
template <typename T>
Tensor<T> conv1d(const Tensor<T>& input, const Tensor<T>& weight, std::size_t stride, std::size_t pad,
                 const Tensor<T>& bias = {}) {
  require(input.rank() == 2 || input.rank() == 3,
          "conv1d: input must be [in x L] or [batch x in x L], got " + shape_str(input.shape()));
  require(weight.rank() == 3, "conv1d: weight must be [out x in x kernel], got " + shape_str(weight.shape()));
  const bool batched = input.rank() == 3;
  const std::size_t batch = batched ? input.dim(0) : 1;
  const std::size_t in = input.dim(batched ? 1 : 0);
  const std::size_t len = input.dim(batched ? 2 : 1);
  const std::size_t out = weight.dim(0);
  const std::size_t kernel = weight.dim(2);
  require(weight.dim(1) == in, "conv1d: weight expects " + std::to_string(weight.dim(1)) +
                                   " input channels, input has " + std::to_string(in));
  require(stride >= 1, "conv1d: stride must be >= 1");
  require(len + 2 * pad >= kernel, "conv1d: kernel longer than padded input");
  if (bias.defined()) require(bias.rank() == 1 && bias.dim(0) == out, "conv1d: bias must be [out]");
  const std::size_t len_out = (len + 2 * pad - kernel) / stride + 1;
  const std::size_t patch = in * kernel;

  // im2col: cols[b][t][c * kernel + j] = padded input[c, t * stride + j]
  auto cols = std::make_shared<std::vector<T>>(batch * len_out * patch, T(0));
  const T* xv = input.data().data();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t t = 0; t < len_out; ++t) {
      T* col = cols->data() + (b * len_out + t) * patch;
      for (std::size_t c = 0; c < in; ++c)
        for (std::size_t j = 0; j < kernel; ++j) {
          const std::ptrdiff_t pos =
              static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(pad);
          if (pos >= 0 && static_cast<std::size_t>(pos) < len)
            col[c * kernel + j] = xv[(b * in + c) * len + static_cast<std::size_t>(pos)];
        }
    }

  std::vector<T> y(batch * out * len_out);
  const T* wv = weight.data().data();
  const T* bv = bias.defined() ? bias.data().data() : nullptr;
  parallel_for(batch * out, 4, [&](std::size_t begin, std::size_t end) {
    for (std::size_t bo = begin; bo < end; ++bo) {
      const std::size_t b = bo / out;
      const std::size_t o = bo % out;
      const T* w = wv + o * patch;
      T* yr = y.data() + bo * len_out;
      for (std::size_t t = 0; t < len_out; ++t)
        yr[t] = (bv ? bv[o] : T(0)) + detail::dot(w, cols->data() + (b * len_out + t) * patch, patch);
    }
  });

  Shape out_shape = batched ? Shape{batch, out, len_out} : Shape{out, len_out};
  return Tensor<T>::make_result(
      std::move(out_shape), std::move(y), "conv1d", {input, weight, bias},
      [=](const detail::Node<T>& n) {
        const T* w = detail::input_value(n, 1).data();
        T* gx = detail::data_or_null(detail::input_grad(n, 0));
        T* gw = detail::data_or_null(detail::input_grad(n, 1));
        T* gb = n.inputs[2] ? detail::data_or_null(detail::input_grad(n, 2)) : nullptr;
        std::vector<T> gcol(gx ? patch : 0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t t = 0; t < len_out; ++t) {
            const T* col = cols->data() + (b * len_out + t) * patch;
            if (gx) std::fill(gcol.begin(), gcol.end(), T(0));
            for (std::size_t o = 0; o < out; ++o) {
              const T g = n.grad[(b * out + o) * len_out + t];
              if (g == T(0)) continue;
              if (gw) detail::axpy(g, col, gw + o * patch, patch);
              if (gb) gb[o] += g;
              if (gx) detail::axpy(g, w + o * patch, gcol.data(), patch);
            }
            if (!gx) continue;
            for (std::size_t c = 0; c < in; ++c)
              for (std::size_t j = 0; j < kernel; ++j) {
                const std::ptrdiff_t pos =
                    static_cast<std::ptrdiff_t>(t * stride + j) - static_cast<std::ptrdiff_t>(pad);
                if (pos >= 0 && static_cast<std::size_t>(pos) < len)
                  gx[(b * in + c) * len + static_cast<std::size_t>(pos)] += gcol[c * kernel + j];
              }
          }
      });
}

}  // namespace galr
