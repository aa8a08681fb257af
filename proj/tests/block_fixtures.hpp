#pragma once

#include "test_util.hpp"

namespace testutil {

// Random block parameters for width d; gates follow the cell type.
inline galr::GalrBlockParams<double> random_block(galr::Pcg32& rng, std::size_t d, std::size_t factor = 1,
                                                  galr::RnnKind kind = galr::RnnKind::kGru) {
  const std::size_t g = galr::gate_count(kind);
  auto m = [&](galr::Shape s) { return random_tensor(rng, std::move(s), -0.8, 0.8); };
  galr::GalrBlockParams<double> p;
  p.rnn = {m({g * d, d}), m({g * d, d}), m({g * d}), m({g * d})};
  p.proj_weight = m({d, d});
  p.proj_bias = m({d});
  p.rnn_ln_gamma = random_tensor(rng, {d}, 0.5, 1.5);
  p.rnn_ln_beta = m({d});
  p.attn = {m({d, d}), m({d}), m({d, d}), m({d}), m({d, d}), m({d}), m({d, d}), m({d})};
  if (factor > 1) {
    p.down_weight = m({d, d, factor});
    p.down_bias = m({d});
    p.up_weight = m({d, d});
    p.up_bias = m({d});
  }
  p.san_ln_gamma = random_tensor(rng, {d}, 0.5, 1.5);
  p.san_ln_beta = m({d});
  return p;
}

inline galr::NamedLeaves<double> block_leaves(const galr::GalrBlockParams<double>& p) {
  galr::NamedLeaves<double> l{{"w_ih", p.rnn.w_ih}, {"w_hh", p.rnn.w_hh}, {"b_ih", p.rnn.b_ih},
                              {"b_hh", p.rnn.b_hh}, {"proj_w", p.proj_weight}, {"proj_b", p.proj_bias},
                              {"rnn_g", p.rnn_ln_gamma}, {"rnn_b", p.rnn_ln_beta}, {"wq", p.attn.wq},
                              {"bq", p.attn.bq}, {"wk", p.attn.wk}, {"bk", p.attn.bk},
                              {"wv", p.attn.wv}, {"bv", p.attn.bv}, {"wo", p.attn.wo},
                              {"bo", p.attn.bo}, {"san_g", p.san_ln_gamma}, {"san_b", p.san_ln_beta}};
  if (p.down_weight.defined()) {
    l.emplace_back("down_w", p.down_weight);
    l.emplace_back("down_b", p.down_bias);
    l.emplace_back("up_w", p.up_weight);
    l.emplace_back("up_b", p.up_bias);
  }
  return l;
}

// Zero sublayer outputs and zero LN offsets; everything else stays random.
inline void zero_sublayer_outputs(galr::GalrBlockParams<double>& p) {
  const std::size_t d = p.proj_bias.numel();
  p.proj_weight = TD::zeros({d, d});
  p.proj_bias = TD::zeros({d});
  p.attn.wo = TD::zeros({d, d});
  p.attn.bo = TD::zeros({d});
  p.rnn_ln_beta = TD::zeros({d});
  p.san_ln_beta = TD::zeros({d});
  if (p.up_weight.defined()) {
    p.up_weight = TD::zeros({d, d});
    p.up_bias = TD::zeros({d});
  }
}

inline galr::ChunkTensor<double> random_chunks(galr::Pcg32& rng, std::size_t d, std::size_t s, std::size_t k) {
  return {random_tensor(rng, {d, s, k}), 0, 0};
}

}  // namespace testutil
