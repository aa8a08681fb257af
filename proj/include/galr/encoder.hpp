#pragma once

#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "galr/config.hpp"
#include "galr/framing.hpp"
#include "galr/galr_block.hpp"
#include "galr/ops_elementwise.hpp"
#include "galr/ops_linalg.hpp"
#include "galr/ops_norm.hpp"
#include "galr/ops_shape.hpp"
#include "galr/parameters.hpp"

namespace galr {

// Feature rows x frames, plus the hop between frames in input samples.
template <typename T>
struct FeatureMatrix {
  Tensor<T> data;
  std::size_t frame_stride_samples = 0;

  std::size_t rows() const { return data.dim(0); }
  std::size_t cols() const { return data.dim(1); }
};

template <typename T>
struct ScaleParams {
  Tensor<T> basis;  // [D x M]
  Tensor<T> enc_gamma, enc_beta;
  std::vector<GalrBlockParams<T>> blocks;
  Tensor<T> merge_weight, merge_bias;  // pointwise [D x D]
  Tensor<T> down_weight, down_bias;    // [D x D x 2C]
  Tensor<T> down_gamma, down_beta;
};

// F~_n = F_n + AvgPool(E_{n-1}) pooled to L_n; an undefined E_prev stands for
// the all-zero E_0 of the finest scale.
template <typename T>
Tensor<T> cross_scale_connect(const Tensor<T>& frames, const Tensor<T>& previous) {
  if (!previous.defined()) return frames;
  require(frames.rank() == 2 && previous.rank() == 2 && previous.dim(0) == frames.dim(0),
          "cross_scale_connect: expects [D x L] operands with equal D");
  if (previous.dim(1) < frames.dim(1))
    fail(ErrorCode::kInvalidArgument, "cross_scale_connect: coarser input (" + std::to_string(previous.dim(1)) +
                                          " frames) cannot be pooled up to " + std::to_string(frames.dim(1)));
  return add(frames, adaptive_avg_pool1d(previous, frames.dim(1)));
}

template <typename T>
class MultiScaleEncoder {
 public:
  MultiScaleEncoder(EncoderConfig config, ParameterStore<T> params)
      : config_(std::move(config)), params_(std::move(params)) {
    config_.validate();
    validate_parameters(params_, config_);
    const bool resampling = config_.san_sampling_factor > 1;
    for (std::size_t n = 0; n < config_.num_scales(); ++n) {
      const std::string sp = scale_prefix(n);
      ScaleParams<T> s;
      s.basis = params_.get(sp + "/encoder/basis");
      s.enc_gamma = params_.get(sp + "/encoder/ln/gamma");
      s.enc_beta = params_.get(sp + "/encoder/ln/beta");
      for (std::size_t b = 0; b < config_.blocks_per_scale; ++b)
        s.blocks.push_back(GalrBlockParams<T>::from_store(params_, block_prefix(n, b), resampling));
      s.merge_weight = params_.get(sp + "/merge/weight");
      s.merge_bias = params_.get(sp + "/merge/bias");
      s.down_weight = params_.get(sp + "/downsample/weight");
      s.down_bias = params_.get(sp + "/downsample/bias");
      s.down_gamma = params_.get(sp + "/downsample/ln/gamma");
      s.down_beta = params_.get(sp + "/downsample/ln/beta");
      scales_.push_back(std::move(s));
    }
  }

  const EncoderConfig& config() const { return config_; }
  const ParameterStore<T>& parameters() const { return params_; }
  ParameterStore<T>& parameters() { return params_; }

  ScalePlan plan(std::size_t gamma) const { return plan_scales(gamma, config_.scales); }

  // F_n = LN(ReLU(U_n * windows)) as [D x L_n]. The basis conv has kernel M_n,
  // stride M_n / 2 and no bias over the tail-padded waveform.
  Tensor<T> encode_scale(std::span<const T> waveform, std::size_t n) const {
    const auto& spec = config_.scales.at(n);
    const auto& p = scales_[n];
    auto padded = pad_for_windows(waveform, spec.window);
    const std::size_t len = padded.size();
    const Tensor<T> signal({1, len}, std::move(padded));
    const auto kernel = reshape(p.basis, {config_.feature_dim, 1, spec.window});
    auto frames = conv1d(signal, kernel, spec.window / 2, 0);
    return layer_norm(relu(frames), p.enc_gamma, p.enc_beta, kLayerNormEps, 0);
  }

  ChunkTensor<T> run_blocks(ChunkTensor<T> q, std::size_t n) const {
    const auto opt = GalrBlockOptions::from_config(config_);
    for (const auto& block : scales_[n].blocks) q = galr_block_forward(q, block, opt);
    return q;
  }

  // E_n = OverlapAdd(Conv2D_1x1(Swish(Q_{n,B}))) as [D x L_n].
  Tensor<T> merge_chunks(const ChunkTensor<T>& q, std::size_t n, std::size_t frames) const {
    const auto& p = scales_[n];
    const std::size_t d = q.channels();
    const auto gated = reshape(swish(q.data), {d, q.chunks() * q.chunk_len()});
    const auto mixed = conv1d(gated, reshape(p.merge_weight, {d, d, 1}), 1, 0, p.merge_bias);
    return overlap_add(reshape(mixed, {d, q.chunks(), q.chunk_len()}), frames);
  }

  // Y_n = LN(ReLU(Conv1D_{C_n}(E_n))): kernel 2C, stride C, padding C on both
  // sides. The raw conv yields floor(L/C) + 1 columns; the tail is cut to
  // ceil(L/C).
  Tensor<T> downsample_features(const Tensor<T>& merged, std::size_t n) const {
    const auto& spec = config_.scales.at(n);
    const auto& p = scales_[n];
    auto y = conv1d(merged, p.down_weight, spec.stride, spec.stride, p.down_bias);
    const std::size_t keep = ceil_div(merged.dim(1), spec.stride);
    if (y.dim(1) > keep) y = slice(y, 1, 0, keep);
    return layer_norm(relu(y), p.down_gamma, p.down_beta, kLayerNormEps, 0);
  }

  // Differentiable [N*D x T] features. Scales run fine to coarse because
  // each consumes the merged output of the previous one.
  Tensor<T> forward(std::span<const T> waveform) const {
    require(!waveform.empty(), "encode: waveform must contain at least one sample");
    const auto layout = plan(waveform.size());
    std::vector<T> signal(layout.effective_gamma, T(0));
    std::copy(waveform.begin(), waveform.end(), signal.begin());

    std::vector<Tensor<T>> features;
    Tensor<T> merged;
    for (std::size_t n = 0; n < config_.num_scales(); ++n) {
      const auto& lengths = layout.scales[n];
      auto frames = cross_scale_connect(encode_scale(std::span<const T>(signal), n), merged);
      auto q = run_blocks(chunk(frames, lengths.spec.chunk, n), n);
      merged = merge_chunks(q, n, lengths.windows);
      auto y = downsample_features(merged, n);
      if (y.dim(1) > layout.frames) y = slice(y, 1, 0, layout.frames);
      features.push_back(std::move(y));
    }
    return features.size() == 1 ? features.front() : concat(features, 0);
  }

  FeatureMatrix<T> encode(std::span<const T> waveform) const {
    const auto layout = plan(waveform.size());
    for (const auto& message : layout.diagnostics) std::cerr << "warning: " << message << "\n";
    return {forward(waveform), config_.frame_stride_samples()};
  }

 private:
  EncoderConfig config_;
  ParameterStore<T> params_;
  std::vector<ScaleParams<T>> scales_;
};

}  // namespace galr
