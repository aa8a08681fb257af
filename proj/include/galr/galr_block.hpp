#pragma once

#include <string>

#include "galr/attention.hpp"
#include "galr/framing.hpp"
#include "galr/ops_elementwise.hpp"
#include "galr/ops_linalg.hpp"
#include "galr/ops_norm.hpp"
#include "galr/ops_shape.hpp"
#include "galr/parameters.hpp"
#include "galr/recurrent.hpp"

namespace galr {

template <typename T>
struct GalrBlockParams {
  RecurrentWeights<T> rnn;
  Tensor<T> proj_weight, proj_bias;  // linear after the RNN, bias always present
  Tensor<T> rnn_ln_gamma, rnn_ln_beta;
  AttentionWeights<T> attn;
  Tensor<T> down_weight, down_bias;  // [D x D x factor]; only when factor > 1
  Tensor<T> up_weight, up_bias;      // pointwise [D x D]; only when factor > 1
  Tensor<T> san_ln_gamma, san_ln_beta;

  static GalrBlockParams from_store(const ParameterStore<T>& store, const std::string& prefix, bool resampling) {
    GalrBlockParams p;
    auto get = [&](const std::string& name) { return store.get(prefix + "/" + name); };
    p.rnn = {get("rnn/w_ih"), get("rnn/w_hh"), get("rnn/b_ih"), get("rnn/b_hh")};
    p.proj_weight = get("rnn_proj/weight");
    p.proj_bias = get("rnn_proj/bias");
    p.rnn_ln_gamma = get("rnn_ln/gamma");
    p.rnn_ln_beta = get("rnn_ln/beta");
    p.attn = {get("attn/wq"), get("attn/bq"), get("attn/wk"), get("attn/bk"),
              get("attn/wv"), get("attn/bv"), get("attn/wo"), get("attn/bo")};
    if (resampling) {
      p.down_weight = get("san_down/weight");
      p.down_bias = get("san_down/bias");
      p.up_weight = get("san_up/weight");
      p.up_bias = get("san_up/bias");
    }
    p.san_ln_gamma = get("san_ln/gamma");
    p.san_ln_beta = get("san_ln/beta");
    return p;
  }
};

struct GalrBlockOptions {
  RnnKind rnn = RnnKind::kGru;
  std::size_t heads = 8;
  std::size_t sampling_factor = 1;
  bool positional_encoding = false;
  double eps = kLayerNormEps;

  static GalrBlockOptions from_config(const EncoderConfig& c) {
    return {c.rnn, c.heads, c.san_sampling_factor, c.positional_encoding, kLayerNormEps};
  }
};

// Intra-chunk processing: each chunk's K-step sequence goes through the RNN
// (hidden size D), a biased linear map and LN over D, then the input is added
// back. Chunks never see each other.
template <typename T>
ChunkTensor<T> local_rnn_layer(const ChunkTensor<T>& q, const GalrBlockParams<T>& p, const GalrBlockOptions& opt) {
  const auto seqs = permute(q.data, {1, 2, 0});  // [S x K x D]
  auto h = run_rnn(opt.rnn, seqs, p.rnn);
  h = linear(h, p.proj_weight, p.proj_bias);
  h = layer_norm(h, p.rnn_ln_gamma, p.rnn_ln_beta, opt.eps);
  return {add(permute(h, {2, 0, 1}), q.data), q.scale, q.block};
}

// Inter-chunk processing: for every intra-chunk position k, attention runs over
// the S chunks. With factor f > 1 the chunk axis is zero-padded to a multiple
// of f, reduced by a strided conv (kernel = stride = f), attended, repeated f
// times, cut back to S and passed through a pointwise conv. LN over D and a
// residual connection follow.
template <typename T>
ChunkTensor<T> global_san_layer(const ChunkTensor<T>& l, const GalrBlockParams<T>& p, const GalrBlockOptions& opt) {
  const std::size_t d = l.channels();
  const std::size_t s = l.chunks();
  const std::size_t k = l.chunk_len();
  const std::size_t f = opt.sampling_factor;
  require(f >= 1, "global_san_layer: sampling factor must be >= 1");
  if (s < f)
    fail(ErrorCode::kInvalidArgument, "global_san_layer: " + std::to_string(s) +
                                          " chunks cannot be downsampled by factor " + std::to_string(f));

  auto x = permute(l.data, {2, 1, 0});  // [K x S x D]
  if (f > 1) {
    const std::size_t reduced = ceil_div(s, f);
    x = pad_tail(x, 1, reduced * f);
    x = permute(conv1d(permute(x, {0, 2, 1}), p.down_weight, f, 0, p.down_bias), {0, 2, 1});  // [K x S' x D]
  }
  if (opt.positional_encoding) {
    const std::size_t positions = x.dim(1);
    const auto table = sinusoidal_positions<T>(positions, d);
    std::vector<T> tiled;
    tiled.reserve(x.numel());
    for (std::size_t i = 0; i < k; ++i) tiled.insert(tiled.end(), table.data().begin(), table.data().end());
    x = add(x, Tensor<T>(x.shape(), std::move(tiled)));
  }
  auto g = multi_head_attention(x, p.attn, opt.heads);
  if (f > 1) {
    g = slice(repeat_interleave(g, 1, f), 1, 0, s);
    g = linear(g, p.up_weight, p.up_bias);
  }
  g = layer_norm(g, p.san_ln_gamma, p.san_ln_beta, opt.eps);
  return {add(permute(g, {2, 1, 0}), l.data), l.scale, l.block};
}

template <typename T>
ChunkTensor<T> galr_block_forward(const ChunkTensor<T>& q, const GalrBlockParams<T>& p, const GalrBlockOptions& opt) {
  auto out = global_san_layer(local_rnn_layer(q, p, opt), p, opt);
  out.block = q.block + 1;
  return out;
}

}  // namespace galr
