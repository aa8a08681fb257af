#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "galr/config.hpp"
#include "galr/random.hpp"
#include "galr/tensor.hpp"

namespace galr {

enum class InitKind { kUniformFanIn, kZeros, kOnes };

struct ParameterSpec {
  std::string name;
  Shape shape;
  InitKind init = InitKind::kZeros;
  std::size_t fan_in = 1;
};

inline std::string scale_prefix(std::size_t scale) { return "scale" + std::to_string(scale + 1); }

inline std::string block_prefix(std::size_t scale, std::size_t block) {
  return scale_prefix(scale) + "/block" + std::to_string(block);
}

// Every learnable tensor the config implies, in canonical order. Scales are
// numbered from 1 and blocks from 0 (e.g. scale2/block0/attn/wq).
inline std::vector<ParameterSpec> parameter_layout(const EncoderConfig& config) {
  config.validate();
  const std::size_t d = config.feature_dim;
  const std::size_t gates = gate_count(config.rnn);
  std::vector<ParameterSpec> layout;
  auto weight = [&](std::string name, Shape shape, std::size_t fan_in) {
    layout.push_back({std::move(name), std::move(shape), InitKind::kUniformFanIn, fan_in});
  };
  auto zeros = [&](std::string name, Shape shape) {
    layout.push_back({std::move(name), std::move(shape), InitKind::kZeros, 1});
  };
  auto norm = [&](const std::string& prefix) {
    layout.push_back({prefix + "/gamma", {d}, InitKind::kOnes, 1});
    zeros(prefix + "/beta", {d});
  };

  for (std::size_t n = 0; n < config.scales.size(); ++n) {
    const auto& spec = config.scales[n];
    const std::string sp = scale_prefix(n);
    weight(sp + "/encoder/basis", {d, spec.window}, spec.window);
    norm(sp + "/encoder/ln");
    for (std::size_t b = 0; b < config.blocks_per_scale; ++b) {
      const std::string bp = block_prefix(n, b);
      weight(bp + "/rnn/w_ih", {gates * d, d}, d);
      weight(bp + "/rnn/w_hh", {gates * d, d}, d);
      zeros(bp + "/rnn/b_ih", {gates * d});
      zeros(bp + "/rnn/b_hh", {gates * d});
      weight(bp + "/rnn_proj/weight", {d, d}, d);
      zeros(bp + "/rnn_proj/bias", {d});
      norm(bp + "/rnn_ln");
      for (const char* p : {"q", "k", "v", "o"}) {
        weight(bp + "/attn/w" + p, {d, d}, d);
        zeros(bp + "/attn/b" + p, {d});
      }
      if (config.san_sampling_factor > 1) {
        const std::size_t f = config.san_sampling_factor;
        weight(bp + "/san_down/weight", {d, d, f}, d * f);
        zeros(bp + "/san_down/bias", {d});
        weight(bp + "/san_up/weight", {d, d}, d);
        zeros(bp + "/san_up/bias", {d});
      }
      norm(bp + "/san_ln");
    }
    weight(sp + "/merge/weight", {d, d}, d);
    zeros(sp + "/merge/bias", {d});
    weight(sp + "/downsample/weight", {d, d, 2 * spec.stride}, 2 * spec.stride * d);
    zeros(sp + "/downsample/bias", {d});
    norm(sp + "/downsample/ln");
  }
  return layout;
}

// Closed-form scalar count, kept independent of parameter_layout so each can
// check the other.
inline std::size_t count_parameters(const EncoderConfig& config) {
  config.validate();
  const std::size_t d = config.feature_dim;
  const std::size_t g = gate_count(config.rnn);
  const std::size_t linear = d * d + d;
  const std::size_t norm = 2 * d;
  std::size_t block = 2 * g * d * d + 2 * g * d  // recurrent weights and biases
                      + linear + norm              // projection after the RNN, its LN
                      + 4 * linear + norm;         // attention projections, SAN LN
  if (config.san_sampling_factor > 1) block += d * d * config.san_sampling_factor + d + linear;
  std::size_t total = 0;
  for (const auto& s : config.scales) {
    total += d * s.window + norm;                  // basis, encoder LN
    total += config.blocks_per_scale * block;
    total += linear;                               // merge conv
    total += d * d * 2 * s.stride + d + norm;      // downsample conv, its LN
  }
  return total;
}

// Named tensors in insertion order.
template <typename T>
class ParameterStore {
 public:
  using Entry = std::pair<std::string, Tensor<T>>;

  void add(std::string name, Tensor<T> tensor) {
    if (index_.contains(name)) fail(ErrorCode::kDuplicateTensor, "duplicate tensor '" + name + "'");
    index_.emplace(name, entries_.size());
    entries_.emplace_back(std::move(name), std::move(tensor));
  }

  bool contains(const std::string& name) const { return index_.contains(name); }

  const Tensor<T>& get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(ErrorCode::kMissingTensor, "missing tensor '" + name + "'");
    return entries_[it->second].second;
  }

  Tensor<T>& get(const std::string& name) {
    return const_cast<Tensor<T>&>(static_cast<const ParameterStore&>(*this).get(name));
  }

  std::size_t size() const { return entries_.size(); }

  std::size_t total_scalars() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += t.numel();
    return n;
  }

  const std::vector<Entry>& entries() const { return entries_; }

  void set_requires_grad(bool on) {
    for (auto& [name, t] : entries_) t.set_requires_grad(on);
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
  }

  // Deep copy into another scalar type.
  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& [name, t] : entries_) out.add(name, t.template cast<U>());
    return out;
  }

  ParameterStore clone() const { return cast<T>(); }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Draws from one PCG32 stream in layout order: weights uniform in
// +-sqrt(1 / fan_in), biases and LN betas zero, LN gammas one.
template <typename T>
ParameterStore<T> init_parameters(const EncoderConfig& config, std::optional<std::uint64_t> seed = std::nullopt) {
  Pcg32 rng(seed.value_or(config.seed));
  ParameterStore<T> store;
  for (const auto& spec : parameter_layout(config)) {
    const std::size_t n = shape_numel(spec.shape);
    std::vector<T> values(n);
    switch (spec.init) {
      case InitKind::kZeros: std::fill(values.begin(), values.end(), T(0)); break;
      case InitKind::kOnes: std::fill(values.begin(), values.end(), T(1)); break;
      case InitKind::kUniformFanIn: {
        const double bound = std::sqrt(1.0 / static_cast<double>(spec.fan_in));
        for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
        break;
      }
    }
    store.add(spec.name, Tensor<T>(spec.shape, std::move(values)));
  }
  return store;
}

// Rejects stores that do not hold exactly the tensors the config implies.
template <typename T>
void validate_parameters(const ParameterStore<T>& store, const EncoderConfig& config) {
  const auto layout = parameter_layout(config);
  std::unordered_map<std::string, const ParameterSpec*> expected;
  for (const auto& spec : layout) expected.emplace(spec.name, &spec);
  for (const auto& spec : layout) {
    if (!store.contains(spec.name)) fail(ErrorCode::kMissingTensor, "missing tensor '" + spec.name + "'");
    const auto& t = store.get(spec.name);
    if (t.shape() != spec.shape)
      fail(ErrorCode::kShapeMismatch, "tensor '" + spec.name + "' has shape " + shape_str(t.shape()) +
                                          ", config expects " + shape_str(spec.shape));
  }
  for (const auto& [name, t] : store.entries())
    if (!expected.contains(name)) fail(ErrorCode::kUnexpectedTensor, "unexpected tensor '" + name + "'");
}

}  // namespace galr
