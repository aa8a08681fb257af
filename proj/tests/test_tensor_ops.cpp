#include "test_util.hpp"

using namespace galr;
using namespace testutil;

TEST(Conv1d, IdentityKernel) {
  const auto y = conv1d(tensor({1, 3}, {1, 2, 3}), tensor({1, 1, 1}, {1}), 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 3}));
  EXPECT_EQ(values(y), (std::vector<double>{1, 2, 3}));
}

TEST(Conv1d, StrideTwoPairSums) {
  const auto y = conv1d(tensor({1, 4}, {1, 2, 3, 4}), tensor({1, 1, 2}, {1, 1}), 2, 0);
  EXPECT_EQ(values(y), (std::vector<double>{3, 7}));
}

TEST(Conv1d, MatchesNestedLoops) {
  Pcg32 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t in = 1 + trial % 3, out = 1 + trial % 4, len = 5 + trial, k = 1 + trial % 4;
    const std::size_t stride = 1 + trial % 3, pad = trial % 3;
    const auto x = random_tensor(rng, {in, len});
    const auto w = random_tensor(rng, {out, in, k});
    const auto b = random_tensor(rng, {out});
    const auto y = conv1d(x, w, stride, pad, b);
    const auto ref = oracle::conv1d(values(x), in, len, values(w), out, k, stride, pad, values(b));
    EXPECT_LT(oracle::max_abs_diff(values(y), ref), 1e-12);
  }
}

TEST(Conv1d, BatchedEqualsPerItem) {
  Pcg32 rng(3);
  const auto x = random_tensor(rng, {2, 2, 8});
  const auto w = random_tensor(rng, {3, 2, 2});
  const auto y = conv1d(x, w, 1, 1);
  for (std::size_t b = 0; b < 2; ++b) {
    const auto item = reshape(slice(x, 0, b, b + 1), {2, 8});
    EXPECT_EQ(values(reshape(slice(y, 0, b, b + 1), {3, 9})), values(conv1d(item, w, 1, 1)));
  }
}

TEST(Conv1d, ChannelMismatchIsInvalidArgument) {
  EXPECT_EQ(error_code_of([] { conv1d(TD::zeros({2, 4}), TD::zeros({1, 3, 2}), 1, 0); }), ErrorCode::kInvalidArgument);
}

TEST(LayerNorm, ZeroInputGivesBeta) {
  const auto y = layer_norm(tensor({2}, {0, 0}), tensor({2}, {1, 1}), tensor({2}, {0, 0}), 1e-5);
  EXPECT_EQ(values(y), (std::vector<double>{0, 0}));
}

TEST(LayerNorm, PopulationVariance) {
  const auto y = layer_norm(tensor({2}, {1, 3}), tensor({2}, {1, 1}), tensor({2}, {0, 0}), 0.0);
  EXPECT_EQ(values(y), (std::vector<double>{-1, 1}));
}

TEST(LayerNorm, MomentsOfRandomVector) {
  Pcg32 rng(5);
  const auto x = random_tensor(rng, {16}, -3, 5);
  const auto y = values(layer_norm(x, TD::full({16}, 1), TD::zeros({16})));
  double mean = 0, var = 0;
  for (double v : y) mean += v;
  mean /= 16;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= 16;
  EXPECT_LT(std::abs(mean), 1e-6);
  EXPECT_NEAR(var, 1.0, 1e-4);
}

TEST(LayerNorm, AxisZeroMatchesRowOracle) {
  Pcg32 rng(8);
  const auto x = random_tensor(rng, {4, 6});
  const auto g = random_tensor(rng, {4}), b = random_tensor(rng, {4});
  const auto y = layer_norm(x, g, b, 1e-5, 0);
  const auto ref = oracle::layer_norm_rows(values(transpose(x)), 6, 4, values(g), values(b));
  EXPECT_LT(oracle::max_abs_diff(values(transpose(y)), ref), 1e-12);
}

TEST(Elementwise, Relu) { EXPECT_EQ(values(relu(tensor({3}, {-1, 0, 2}))), (std::vector<double>{0, 0, 2})); }

TEST(Elementwise, Swish) {
  const auto y = values(swish(tensor({2}, {0, 40})));
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 40.0, 1e-12);
}

TEST(Elementwise, SigmoidTanhAdd) {
  const auto x = tensor({2}, {0, 1});
  EXPECT_EQ(values(sigmoid(x))[0], 0.5);
  EXPECT_DOUBLE_EQ(values(galr::tanh(x))[1], std::tanh(1.0));
  EXPECT_EQ(values(add(x, x)), (std::vector<double>{0, 2}));
}

TEST(AdaptivePool, BinMeans) {
  const auto y = adaptive_avg_pool1d(tensor({1, 4}, {1, 2, 3, 4}), 2);
  EXPECT_EQ(values(y), (std::vector<double>{1.5, 3.5}));
}

TEST(AdaptivePool, UnevenBinsMatchFloorBoundaries) {
  Pcg32 rng(4);
  const auto x = random_tensor(rng, {2, 7});
  const auto y = adaptive_avg_pool1d(x, 3);
  const auto xv = values(x);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 3; ++i) {
      const std::size_t lo = i * 7 / 3, hi = (i + 1) * 7 / 3;
      double m = 0;
      for (std::size_t j = lo; j < hi; ++j) m += xv[c * 7 + j];
      EXPECT_NEAR(y(c, i), m / double(hi - lo), 1e-15);
    }
}

TEST(AdaptivePool, UpsamplingIsInvalidArgument) {
  EXPECT_EQ(error_code_of([] { adaptive_avg_pool1d(TD::zeros({1, 2}), 3); }), ErrorCode::kInvalidArgument);
}

TEST(Shape, ConcatThenSliceRecoversOperands) {
  Pcg32 rng(2);
  const auto a = random_tensor(rng, {2, 3}), b = random_tensor(rng, {4, 3});
  const auto c = concat(std::vector<TD>{a, b}, 0);
  EXPECT_EQ(values(slice(c, 0, 0, 2)), values(a));
  EXPECT_EQ(values(slice(c, 0, 2, 6)), values(b));
  const auto d = concat(std::vector<TD>{a, a}, 1);
  EXPECT_EQ(values(slice(d, 1, 3, 6)), values(a));
}

TEST(Shape, TransposeAndPermute) {
  const auto x = tensor({2, 3}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(values(transpose(x)), (std::vector<double>{1, 4, 2, 5, 3, 6}));
  const auto p = permute(reshape(x, {1, 2, 3}), {2, 0, 1});
  EXPECT_EQ(p.shape(), (Shape{3, 1, 2}));
  EXPECT_EQ(p(2, 0, 1), 6.0);
}

TEST(Shape, RepeatInterleaveAndPadTail) {
  const auto x = tensor({1, 2}, {1, 2});
  EXPECT_EQ(values(repeat_interleave(x, 1, 2)), (std::vector<double>{1, 1, 2, 2}));
  EXPECT_EQ(values(pad_tail(x, 1, 4)), (std::vector<double>{1, 2, 0, 0}));
}

TEST(Softmax, RowsSumToOne) {
  Pcg32 rng(9);
  const auto y = softmax(random_tensor(rng, {5, 7}, -20, 20));
  for (std::size_t r = 0; r < 5; ++r) {
    double s = 0;
    for (std::size_t c = 0; c < 7; ++c) s += y(r, c);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Determinism, RepeatedCallsAreBitIdentical) {
  Pcg32 rng(1);
  const auto x = random_tensor(rng, {3, 40}), w = random_tensor(rng, {5, 3, 4});
  EXPECT_EQ(values(conv1d(x, w, 2, 1)), values(conv1d(x, w, 2, 1)));
}

TEST(Determinism, ThreadCountDoesNotChangeConvOrLinear) {
  Pcg32 rng(1);
  const auto x = random_tensor(rng, {16, 300}).cast<float>();
  const auto w = random_tensor(rng, {32, 16, 6}).cast<float>();
  const auto lw = random_tensor(rng, {20, 300}).cast<float>();
  std::vector<float> conv_ref, lin_ref;
  {
    ThreadScope one(1);
    conv_ref = conv1d(x, w, 3, 3).to_vector();
    lin_ref = linear(x, lw).to_vector();
  }
  for (int threads : {2, 3, 8}) {
    ThreadScope scope(threads);
    EXPECT_EQ(conv1d(x, w, 3, 3).to_vector(), conv_ref);
    EXPECT_EQ(linear(x, lw).to_vector(), lin_ref);
  }
}
