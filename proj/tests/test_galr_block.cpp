#include "block_fixtures.hpp"

using namespace galr;
using namespace testutil;

namespace {

GalrBlockOptions options(std::size_t heads, std::size_t factor = 1, RnnKind kind = RnnKind::kGru) {
  GalrBlockOptions o;
  o.rnn = kind;
  o.heads = heads;
  o.sampling_factor = factor;
  return o;
}

// Reference for the local layer: loop chunks, scalar GRU, linear, LN, residual.
std::vector<double> local_oracle(const TD& q, const GalrBlockParams<double>& p) {
  const std::size_t d = q.dim(0), s = q.dim(1), k = q.dim(2);
  std::vector<double> out(d * s * k);
  for (std::size_t c = 0; c < s; ++c) {
    std::vector<double> seq(k * d);
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t i = 0; i < d; ++i) seq[t * d + i] = q(i, c, t);
    const auto h = oracle::gru(seq, k, d, d, values(p.rnn.w_ih), values(p.rnn.w_hh), values(p.rnn.b_ih),
                               values(p.rnn.b_hh));
    std::vector<double> lin(k * d);
    const auto w = values(p.proj_weight), b = values(p.proj_bias);
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t o = 0; o < d; ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < d; ++i) acc += w[o * d + i] * h[t * d + i];
        lin[t * d + o] = acc;
      }
    const auto ln = oracle::layer_norm_rows(lin, k, d, values(p.rnn_ln_gamma), values(p.rnn_ln_beta));
    for (std::size_t t = 0; t < k; ++t)
      for (std::size_t i = 0; i < d; ++i) out[(i * s + c) * k + t] = ln[t * d + i] + q(i, c, t);
  }
  return out;
}

// Reference for the global layer with factor 1: attention across chunks per position.
std::vector<double> global_oracle(const TD& x, const GalrBlockParams<double>& p, std::size_t heads) {
  const std::size_t d = x.dim(0), s = x.dim(1), k = x.dim(2);
  const oracle::Attention a{values(p.attn.wq), values(p.attn.bq), values(p.attn.wk), values(p.attn.bk),
                            values(p.attn.wv), values(p.attn.bv), values(p.attn.wo), values(p.attn.bo)};
  std::vector<double> out(d * s * k);
  for (std::size_t t = 0; t < k; ++t) {
    std::vector<double> seq(s * d);
    for (std::size_t c = 0; c < s; ++c)
      for (std::size_t i = 0; i < d; ++i) seq[c * d + i] = x(i, c, t);
    const auto g = oracle::layer_norm_rows(oracle::attention(seq, s, d, heads, a), s, d, values(p.san_ln_gamma),
                                           values(p.san_ln_beta));
    for (std::size_t c = 0; c < s; ++c)
      for (std::size_t i = 0; i < d; ++i) out[(i * s + c) * k + t] = g[c * d + i] + x(i, c, t);
  }
  return out;
}

TD perturb_chunk(const TD& x, std::size_t target, double delta) {
  auto v = values(x);
  const std::size_t s = x.dim(1), k = x.dim(2);
  for (std::size_t i = 0; i < x.dim(0); ++i)
    for (std::size_t t = 0; t < k; ++t) v[(i * s + target) * k + t] += delta;
  return TD(x.shape(), v);
}

double max_change_outside(const TD& a, const TD& b, std::size_t excluded) {
  double m = 0;
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t c = 0; c < a.dim(1); ++c) {
      if (c == excluded) continue;
      for (std::size_t t = 0; t < a.dim(2); ++t) m = std::max(m, std::abs(a(i, c, t) - b(i, c, t)));
    }
  return m;
}

}  // namespace

TEST(GalrBlock, ZeroedSublayersAreExactIdentity) {
  Pcg32 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 * (1 + trial % 3), s = 1 + trial % 5, k = 2 * (1 + trial % 4);
    auto p = random_block(rng, d);
    zero_sublayer_outputs(p);
    const auto q = random_chunks(rng, d, s, k);
    const auto out = galr_block_forward(q, p, options(2));
    ASSERT_EQ(values(out.data), values(q.data)) << "trial " << trial;
    EXPECT_EQ(out.block, 1u);
  }
}

TEST(GalrBlock, ZeroedAttentionWithFactorTwoIsIdentity) {
  Pcg32 rng(2);
  auto p = random_block(rng, 4, 2);
  zero_sublayer_outputs(p);
  const auto q = random_chunks(rng, 4, 5, 4);
  EXPECT_EQ(values(global_san_layer(q, p, options(2, 2)).data), values(q.data));
}

TEST(LocalRnnLayer, ChunksAreIndependent) {
  Pcg32 rng(3);
  const auto p = random_block(rng, 4);
  const auto q = random_chunks(rng, 4, 5, 6);
  const auto base = local_rnn_layer(q, p, options(2));
  for (std::size_t target = 0; target < 5; ++target) {
    const auto moved = local_rnn_layer({perturb_chunk(q.data, target, 0.37), 0, 0}, p, options(2));
    EXPECT_EQ(max_change_outside(base.data, moved.data, target), 0.0);
  }
}

TEST(GlobalSanLayer, PerturbationReachesOtherChunks) {
  Pcg32 rng(4);
  const auto p = random_block(rng, 4);
  const auto q = random_chunks(rng, 4, 5, 6);
  const auto base = global_san_layer(q, p, options(2));
  const auto moved = global_san_layer({perturb_chunk(q.data, 2, 0.37), 0, 0}, p, options(2));
  EXPECT_GT(max_change_outside(base.data, moved.data, 2), 1e-9);
}

TEST(LocalRnnLayer, MatchesPerChunkOracle) {
  Pcg32 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_block(rng, 4);
    const auto q = random_chunks(rng, 4, 3, 6);
    EXPECT_LT(oracle::max_abs_diff(values(local_rnn_layer(q, p, options(2)).data), local_oracle(q.data, p)), 1e-12);
  }
}

TEST(GlobalSanLayer, MatchesPerPositionOracle) {
  Pcg32 rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_block(rng, 4);
    const auto q = random_chunks(rng, 4, 3, 6);
    EXPECT_LT(oracle::max_abs_diff(values(global_san_layer(q, p, options(2)).data), global_oracle(q.data, p, 2)),
              1e-12);
  }
}

TEST(GlobalSanLayer, SingleChunk) {
  Pcg32 rng(7);
  const auto p = random_block(rng, 4);
  const auto q = random_chunks(rng, 4, 1, 4);
  EXPECT_LT(oracle::max_abs_diff(values(global_san_layer(q, p, options(2)).data), global_oracle(q.data, p, 2)), 1e-12);
}

TEST(GlobalSanLayer, FewerChunksThanFactorIsInvalidArgument) {
  Pcg32 rng(8);
  const auto p = random_block(rng, 4, 3);
  const auto q = random_chunks(rng, 4, 2, 4);
  EXPECT_EQ(error_code_of([&] { global_san_layer(q, p, options(2, 3)); }), ErrorCode::kInvalidArgument);
}

TEST(GalrBlock, ShapeLaw) {
  Pcg32 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.next() % 6, s = 1 + rng.next() % 6, k = 2 * (1 + rng.next() % 4);
    const std::size_t factor = s >= 2 && trial % 3 == 0 ? 2 : 1;
    const auto kind = trial % 2 ? RnnKind::kLstm : RnnKind::kGru;
    const auto p = random_block(rng, d, factor, kind);
    auto opt = options(1, factor, kind);
    opt.positional_encoding = trial % 5 == 0;
    const auto out = galr_block_forward(random_chunks(rng, d, s, k), p, opt);
    ASSERT_EQ(out.data.shape(), (Shape{d, s, k})) << "trial " << trial;
  }
}

TEST(GalrBlock, FiniteDifferenceGradient) {
  Pcg32 rng(10);
  auto p = random_block(rng, 4);
  auto q = random_chunks(rng, 4, 3, 4);
  auto leaves = block_leaves(p);
  leaves.emplace_back("input", q.data);
  const auto weights = random_tensor(rng, {4, 3, 4});
  const auto report = check_gradients<double>(
      [&] { return weighted_sum(galr_block_forward(q, p, options(2)).data, weights); }, leaves, 1e-5);
  EXPECT_LT(report.worst(), 1e-5);
}

TEST(GalrBlock, FiniteDifferenceGradientWithResamplingAndLstm) {
  Pcg32 rng(11);
  auto p = random_block(rng, 4, 2, RnnKind::kLstm);
  auto q = random_chunks(rng, 4, 5, 4);
  auto leaves = block_leaves(p);
  leaves.emplace_back("input", q.data);
  const auto weights = random_tensor(rng, {4, 5, 4});
  auto opt = options(2, 2, RnnKind::kLstm);
  opt.positional_encoding = true;
  const auto report = check_gradients<double>(
      [&] { return weighted_sum(galr_block_forward(q, p, opt).data, weights); }, leaves, 1e-5);
  EXPECT_LT(report.worst(), 1e-5);
}
