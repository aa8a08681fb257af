#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "galr/encoder.hpp"
#include "galr/gradcheck.hpp"
#include "galr/parameters.hpp"
#include "galr/random.hpp"

namespace galr {

// Fixed tiny shapes for whole-model gradient checks: two scales with
// M = {4, 8}, K = {4, 4}, C = {4, 2}, D = 3, one head and a 32-sample input.
// Cell type, positional encoding and resampling follow `base`.
inline EncoderConfig tiny_config(const EncoderConfig& base = EncoderConfig::aishell2()) {
  EncoderConfig c = base;
  c.scales = {{4, 4, 4}, {8, 4, 2}};
  c.feature_dim = 3;
  c.heads = 1;
  c.blocks_per_scale = std::clamp<std::size_t>(base.blocks_per_scale, 1, 2);
  c.san_sampling_factor = std::min<std::size_t>(base.san_sampling_factor, 2);
  return c;
}

inline constexpr std::size_t kTinyWaveformSamples = 32;

template <typename T>
std::vector<T> uniform_noise(std::size_t count, std::uint64_t seed, double amplitude = 1.0) {
  Pcg32 rng(seed, 0xda3e39cb94b95bdbULL);
  std::vector<T> out(count);
  for (auto& v : out) v = static_cast<T>(rng.uniform(-amplitude, amplitude));
  return out;
}

// Replaces the unit LN gains and zero biases of a fresh init with random
// values. With gamma = 1 every LN output sums to beta over D, which would make
// sum(Y) blind to everything upstream of the last LN.
template <typename T>
void randomize_affine(ParameterStore<T>& params, std::uint64_t seed) {
  Pcg32 rng(seed, 0x5851f42d4c957f2dULL);
  auto ends_with = [](const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (auto& [name, tensor] : params.entries()) {
    const bool gain = ends_with(name, "/gamma");
    const bool offset = ends_with(name, "/beta") || ends_with(name, "bias") || ends_with(name, "/b_ih") ||
                        ends_with(name, "/b_hh") || ends_with(name, "/bq") || ends_with(name, "/bk") ||
                        ends_with(name, "/bv") || ends_with(name, "/bo");
    if (!gain && !offset) continue;
    auto values = params.get(name).mutable_data();
    for (auto& v : values) v = static_cast<T>(gain ? rng.uniform(0.5, 1.5) : rng.uniform(-0.5, 0.5));
  }
}

// Central-difference check of sum(encode(x)) with respect to every parameter
// tensor, in double precision.
inline GradCheckReport check_encoder_gradients(const EncoderConfig& config, std::uint64_t seed, double step = 1e-4,
                                               const BackwardOptions& options = {},
                                               std::size_t samples = kTinyWaveformSamples) {
  auto params = init_parameters<double>(config, seed);
  randomize_affine(params, seed);
  params.set_requires_grad(true);
  const MultiScaleEncoder<double> encoder(config, params);
  const auto waveform = uniform_noise<double>(samples, seed);
  NamedLeaves<double> leaves(params.entries().begin(), params.entries().end());
  return check_gradients<double>([&] { return sum(encoder.forward(waveform)); }, leaves, step, options);
}

}  // namespace galr
