#pragma once

#include <cmath>
#include <vector>

#include "galr/ops_elementwise.hpp"
#include "galr/ops_linalg.hpp"
#include "galr/ops_norm.hpp"
#include "galr/ops_shape.hpp"

namespace galr {

// Query/key/value/output projections, each [D x D] with a [D] bias.
template <typename T>
struct AttentionWeights {
  Tensor<T> wq, bq;
  Tensor<T> wk, bk;
  Tensor<T> wv, bv;
  Tensor<T> wo, bo;
};

// Scaled dot-product self-attention with `heads` heads of width D / heads,
// scores scaled by 1 / sqrt(D / heads) and normalized over the sequence axis.
// x is [S x D] or [batch x S x D]. When `probabilities` is non-null it receives
// the attention weights as [batch x heads x S x S].
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const AttentionWeights<T>& w, std::size_t heads,
                               Tensor<T>* probabilities = nullptr) {
  require(x.rank() == 2 || x.rank() == 3,
          "multi_head_attention: input must be [S x D] or [batch x S x D], got " + shape_str(x.shape()));
  const bool batched = x.rank() == 3;
  const std::size_t batch = batched ? x.dim(0) : 1;
  const std::size_t seq = x.dim(batched ? 1 : 0);
  const std::size_t d = x.dim(batched ? 2 : 1);
  require(heads >= 1 && d % heads == 0, "multi_head_attention: feature dim " + std::to_string(d) +
                                            " is not divisible by " + std::to_string(heads) + " heads");
  const std::size_t width = d / heads;

  auto split_heads = [&](const Tensor<T>& t) {
    auto r = reshape(t, {batch, seq, heads, width});
    return reshape(permute(r, {0, 2, 1, 3}), {batch * heads, seq, width});
  };
  const auto q = split_heads(linear(x, w.wq, w.bq));
  const auto k = split_heads(linear(x, w.wk, w.bk));
  const auto v = split_heads(linear(x, w.wv, w.bv));

  const auto scores = scale(matmul(q, k, /*transpose_b=*/true), static_cast<T>(1.0 / std::sqrt(double(width))));
  const auto weights = softmax(scores);
  if (probabilities) *probabilities = reshape(weights, {batch, heads, seq, seq});

  auto context = reshape(matmul(weights, v), {batch, heads, seq, width});
  context = reshape(permute(context, {0, 2, 1, 3}), {batch, seq, d});
  auto out = linear(context, w.wo, w.bo);
  return batched ? out : reshape(out, {seq, d});
}

// Fixed sin/cos position table [positions x dim]: even columns sin, odd cos.
template <typename T>
Tensor<T> sinusoidal_positions(std::size_t positions, std::size_t dim) {
  std::vector<T> table(positions * dim);
  for (std::size_t p = 0; p < positions; ++p)
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(dim));
      const double angle = static_cast<double>(p) * rate;
      table[p * dim + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return Tensor<T>({positions, dim}, std::move(table));
}

}  // namespace galr
