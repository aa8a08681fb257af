// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "block_fixtures.hpp"
#include "cli.hpp"

using namespace galr;
using namespace testutil;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool ok = false;
  std::string detail;
};

EncoderConfig narrow_default(std::size_t d) {
  auto c = EncoderConfig::aishell2();
  c.feature_dim = d;
  c.heads = 1;
  return c;
}

// 1. Whole-model finite-difference check on the tiny config.
Outcome gradient_integrity() {
  const auto start = Clock::now();
  const auto report = check_encoder_gradients(tiny_config(), 42, 1e-4);
  const double elapsed = seconds_since(start);
  double weakest = INFINITY;
  for (const auto& e : report.entries)
    if (!e.name.ends_with("/attn/bk")) weakest = std::min(weakest, e.max_abs_gradient);
  std::ostringstream s;
  s << report.entries.size() << " groups, worst rel err " << report.worst() << " ("
    << (report.worst_entry() ? report.worst_entry()->name : "?") << "), smallest max|grad| (key bias excluded) " << weakest << ", "
    << elapsed << " s";
  return {report.passed(1e-4) && weakest > 0.0 && elapsed < 60.0, s.str()};
}

// 2. Plan algebra over random lengths plus realized shapes on a narrow model.
Outcome length_algebra() {
  const auto specs = EncoderConfig::aishell2().scales;
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<std::size_t> dist(400, 1600000);
  std::vector<std::size_t> gammas(10000);
  for (auto& g : gammas) g = dist(gen);

  const auto start = Clock::now();
  std::size_t bad = 0, max_trim = 0;
  for (auto gamma : gammas) {
    const auto plan = plan_scales(gamma, specs);
    std::size_t lo = SIZE_MAX;
    for (std::size_t n = 0; n < specs.size(); ++n) {
      const auto& s = plan.scales[n];
      const std::size_t l = (2 * gamma + specs[n].window - 1) / specs[n].window;
      const std::size_t chunks = (2 * l + specs[n].chunk - 1) / specs[n].chunk;
      const std::size_t down = (l + specs[n].stride - 1) / specs[n].stride;
      lo = std::min(lo, down);
      if (s.windows != l || s.chunks != chunks || s.downsampled != down) ++bad;
      max_trim = std::max(max_trim, s.trimmed);
    }
    if (plan.frames != lo) ++bad;
  }
  const double plan_seconds = seconds_since(start);

  const auto config = narrow_default(2);
  const MultiScaleEncoder<float> encoder(config, init_parameters<float>(config, 1));
  std::size_t shape_bad = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const std::size_t gamma = i == 0 ? 400 : gammas[i * 37] % 60000 + 400;
    const auto plan = plan_scales(gamma, specs);
    const auto x = uniform_noise<float>(gamma, i, 0.5);
    std::vector<float> signal(plan.effective_gamma, 0.0f);
    std::copy(x.begin(), x.end(), signal.begin());
    for (std::size_t n = 0; n < specs.size(); ++n)
      if (encoder.encode_scale(signal, n).dim(1) != plan.scales[n].windows) ++shape_bad;
    if (encoder.forward(x).shape() != Shape{config.output_dim(), plan.frames}) ++shape_bad;
  }
  std::ostringstream s;
  s << "10000 plans in " << plan_seconds << " s, " << bad << " law violations, max trim " << max_trim << "; 20 encodes, "
    << shape_bad << " shape mismatches";
  return {bad == 0 && max_trim <= 1 && plan_seconds < 10.0 && shape_bad == 0, s.str()};
}

// 3. Default configuration on ten seconds of audio.
Outcome default_shape() {
  const auto config = EncoderConfig::aishell2();
  const MultiScaleEncoder<float> encoder(config, init_parameters<float>(config));
  const auto y = encoder.encode(uniform_noise<float>(160000, 3, 0.5));
  const double stride_ms = 1000.0 * double(y.frame_stride_samples) / double(config.sample_rate);
  std::ostringstream s;
  s << y.rows() << " x " << y.cols() << ", frame stride " << stride_ms << " ms";
  return {y.rows() == 384 && y.cols() == 400 && stride_ms == 25.0, s.str()};
}

// 4. chunk -> overlap_add -> coverage normalization.
Outcome overlap_add_oracle() {
  Pcg32 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 1 + rng.next() % 5, l = 1 + rng.next() % 200, k = 2 * (1 + rng.next() % 30);
    const auto f = random_tensor(rng, {d, l});
    const auto back = overlap_add(chunk(f, k), l).to_vector();
    const auto cover = oracle::coverage(l, k);
    const auto fv = f.to_vector();
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t t = 0; t < l; ++t)
        worst = std::max(worst, cover[t] ? std::abs(back[c * l + t] / double(cover[t]) - fv[c * l + t]) : INFINITY);
  }
  std::ostringstream s;
  s << "1000 inputs, max abs error " << worst;
  return {worst < 1e-6, s.str()};
}

// 5. Zeroed sublayer outputs with zero LN offsets leave the input untouched.
Outcome zero_init_identity() {
  Pcg32 rng(5);
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 2 * (1 + trial % 4), s = 1 + rng.next() % 6, k = 2 * (1 + rng.next() % 5);
    auto p = random_block(rng, d, 1, trial % 2 ? RnnKind::kLstm : RnnKind::kGru);
    zero_sublayer_outputs(p);
    GalrBlockOptions opt;
    opt.rnn = trial % 2 ? RnnKind::kLstm : RnnKind::kGru;
    opt.heads = 2;
    const auto q = random_chunks(rng, d, s, k);
    const auto out = galr_block_forward(q, p, opt).data.to_vector();
    const auto in = q.data.to_vector();
    if (std::memcmp(out.data(), in.data(), in.size() * sizeof(double)) == 0) ++exact;
  }
  return {exact == 100, std::to_string(exact) + "/100 bitwise identical"};
}

// 6. RNN sublayer is chunk-local, attention sublayer is not.
Outcome locality_globality() {
  Pcg32 rng(6);
  const std::size_t d = 4, s = 5, k = 6;
  const auto p = random_block(rng, d);
  const auto q = random_chunks(rng, d, s, k);
  GalrBlockOptions opt;
  opt.heads = 2;
  auto perturbed = q.data.to_vector();
  const std::size_t target = 2;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t t = 0; t < k; ++t) perturbed[(i * s + target) * k + t] += 0.5;
  const ChunkTensor<double> q2{TD(q.data.shape(), perturbed), 0, 0};

  auto outside = [&](const TD& a, const TD& b, bool exact) {
    double m = 0.0;
    bool equal = true;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t c = 0; c < s; ++c)
        for (std::size_t t = 0; t < k; ++t) {
          if (c == target) continue;
          m = std::max(m, std::abs(a(i, c, t) - b(i, c, t)));
          if (std::memcmp(&a.data()[(i * s + c) * k + t], &b.data()[(i * s + c) * k + t], sizeof(double))) equal = false;
        }
    return exact ? (equal ? 0.0 : 1.0) : m;
  };
  const double local = outside(local_rnn_layer(q, p, opt).data, local_rnn_layer(q2, p, opt).data, true);
  const double global = outside(global_san_layer(q, p, opt).data, global_san_layer(q2, p, opt).data, false);
  std::ostringstream s_;
  s_ << "rnn sublayer other chunks " << (local == 0.0 ? "bitwise unchanged" : "CHANGED") << ", attention max change "
     << global;
  return {local == 0.0 && global > 1e-9, s_.str()};
}

// 7. conv1d, GRU and attention against nested-loop references.
Outcome oracle_equivalence() {
  Pcg32 rng(7);
  double conv_err = 0, gru_err = 0, attn_err = 0;
  const int trials = 60;
  for (int trial = 0; trial < trials; ++trial) {
    {
      const std::size_t in = 1 + rng.next() % 4, out = 1 + rng.next() % 4, k = 1 + rng.next() % 5;
      const std::size_t len = k + rng.next() % 12, stride = 1 + rng.next() % 3, pad = rng.next() % 3;
      const auto x = random_tensor(rng, {in, len}), w = random_tensor(rng, {out, in, k}), b = random_tensor(rng, {out});
      conv_err = std::max(conv_err, oracle::max_abs_diff(conv1d(x, w, stride, pad, b).to_vector(),
                                                         oracle::conv1d(x.to_vector(), in, len, w.to_vector(), out, k,
                                                                        stride, pad, b.to_vector())));
    }
    {
      const std::size_t steps = 1 + rng.next() % 6, in = 1 + rng.next() % 4, h = 1 + rng.next() % 4;
      const RecurrentWeights<double> w{random_tensor(rng, {3 * h, in}), random_tensor(rng, {3 * h, h}),
                                       random_tensor(rng, {3 * h}), random_tensor(rng, {3 * h})};
      const auto seq = random_tensor(rng, {steps, in});
      gru_err = std::max(gru_err, oracle::max_abs_diff(gru(seq, w).to_vector(),
                                                       oracle::gru(seq.to_vector(), steps, in, h, w.w_ih.to_vector(),
                                                                   w.w_hh.to_vector(), w.b_ih.to_vector(),
                                                                   w.b_hh.to_vector())));
    }
    {
      const std::size_t heads = 1 + rng.next() % 3, d = heads * (1 + rng.next() % 3), s = 1 + rng.next() % 6;
      auto m = [&] { return random_tensor(rng, {d, d}); };
      auto v = [&] { return random_tensor(rng, {d}); };
      const AttentionWeights<double> w{m(), v(), m(), v(), m(), v(), m(), v()};
      const oracle::Attention a{w.wq.to_vector(), w.bq.to_vector(), w.wk.to_vector(), w.bk.to_vector(),
                                w.wv.to_vector(), w.bv.to_vector(), w.wo.to_vector(), w.bo.to_vector()};
      const auto x = random_tensor(rng, {s, d});
      attn_err = std::max(attn_err, oracle::max_abs_diff(multi_head_attention(x, w, heads).to_vector(),
                                                         oracle::attention(x.to_vector(), s, d, heads, a)));
    }
  }
  std::ostringstream s;
  s << trials << " instances each: conv1d " << conv_err << ", gru " << gru_err << ", attention " << attn_err;
  return {conv_err < 1e-6 && gru_err < 1e-6 && attn_err < 1e-6, s.str()};
}

// 8. Bitwise determinism of encode, serialization and seeded init.
Outcome determinism_serialization() {
  const auto config = narrow_default(8);
  const auto store = init_parameters<float>(config, 11);
  const MultiScaleEncoder<float> encoder(config, store);
  const auto x = uniform_noise<float>(32000, 8, 0.5);
  auto encode_bytes = [&](int threads) {
    ThreadScope scope(threads);
    return serialize_features(to_feature_file(encoder.encode(x), config.sample_rate));
  };
  const auto reference = encode_bytes(1);
  bool encode_ok = reference == encode_bytes(1);
  for (int t : {2, 3, 8}) encode_ok = encode_ok && reference == encode_bytes(t);

  const auto weights = serialize_weights(store);
  const bool weights_ok = serialize_weights(deserialize_weights(weights)) == weights;
  const bool features_ok = serialize_features(deserialize_features(reference)) == reference;
  const auto base = EncoderConfig::aishell2();
  const bool init_ok = serialize_weights(init_parameters<float>(base, 5)) == serialize_weights(init_parameters<float>(base, 5)) &&
                       serialize_weights(init_parameters<float>(base, 5)) != serialize_weights(init_parameters<float>(base, 6));
  std::ostringstream s;
  s << "encode across runs/threads " << (encode_ok ? "identical" : "DIFFERENT") << ", weights round trip "
    << (weights_ok ? "exact" : "INEXACT") << ", features round trip " << (features_ok ? "exact" : "INEXACT")
    << ", seeded init " << (init_ok ? "reproducible" : "NOT REPRODUCIBLE");
  return {encode_ok && weights_ok && features_ok && init_ok, s.str()};
}

// 9. Single-thread throughput on the default configuration.
Outcome performance() {
  const auto config = EncoderConfig::aishell2();
  const MultiScaleEncoder<float> encoder(config, init_parameters<float>(config));
  const auto result = cli::run_bench(encoder, 10.0, 3, 1);
  std::ostringstream s;
  s << "median " << result.median_seconds << " s for 10 s of audio, realtime factor " << result.realtime_factor
    << " (1 thread)";
  return {result.realtime_factor >= 0.2, s.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient integrity", gradient_integrity},
      {"length algebra fuzz", length_algebra},
      {"default config shape", default_shape},
      {"overlap-add oracle", overlap_add_oracle},
      {"zero-init identity", zero_init_identity},
      {"locality / globality", locality_globality},
      {"oracle equivalence", oracle_equivalence},
      {"determinism & serialization", determinism_serialization},
      {"performance smoke", performance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.ok) ++failures;
    std::printf("[%s] %zu: %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures ? 1 : 0;
}
