#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "galr/ops_shape.hpp"
#include "galr/tensor.hpp"

namespace galr {

// One encoder branch: window length M (samples), chunk length K (frames) and
// downsampling stride C (frames).
struct ScaleSpec {
  std::size_t window = 0;
  std::size_t chunk = 0;
  std::size_t stride = 0;

  bool operator==(const ScaleSpec&) const = default;
};

constexpr std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// ceil(2 * gamma / M); inputs shorter than one window count as one window.
constexpr std::size_t window_count(std::size_t gamma, std::size_t window) {
  return ceil_div(2 * std::max(gamma, window), window);
}

// ceil(2 * L / K)
constexpr std::size_t chunk_count(std::size_t frames, std::size_t chunk) { return ceil_div(2 * frames, chunk); }

struct ScaleLengths {
  ScaleSpec spec;
  std::size_t windows = 0;          // L_n
  std::size_t chunks = 0;           // S_n
  std::size_t padded_samples = 0;   // (L_n + 1) * M_n / 2
  std::size_t padded_frames = 0;    // (S_n + 1) * K_n / 2
  std::size_t downsampled = 0;      // ceil(L_n / C_n), before trimming
  std::size_t trimmed = 0;          // edge frames discarded to reach T
  std::size_t frame_stride_samples = 0;

  bool operator==(const ScaleLengths&) const = default;
};

struct ScalePlan {
  std::size_t gamma = 0;            // input samples
  std::size_t effective_gamma = 0;  // after padding short inputs to M_N
  std::vector<ScaleLengths> scales;
  std::size_t frames = 0;           // T
  std::vector<std::string> diagnostics;

  bool operator==(const ScalePlan&) const = default;
};

inline void require_even(std::size_t value, const std::string& what) {
  if (value == 0 || value % 2 != 0)
    fail(ErrorCode::kInvalidArgument, what + " must be a positive even number, got " + std::to_string(value));
}

// Checks ordering and the M_n * C_n = M_{n+1} * C_{n+1} relation.
inline void validate_scales(std::span<const ScaleSpec> specs) {
  if (specs.empty()) fail(ErrorCode::kConstraintViolation, "at least one scale is required");
  for (std::size_t n = 0; n < specs.size(); ++n) {
    const auto& s = specs[n];
    const std::string label = "scale " + std::to_string(n + 1);
    if (s.window == 0 || s.window % 2 != 0)
      fail(ErrorCode::kConstraintViolation, "window length must be even: " + label);
    if (s.chunk == 0 || s.chunk % 2 != 0)
      fail(ErrorCode::kConstraintViolation, "chunk length must be even: " + label);
    if (s.stride == 0) fail(ErrorCode::kConstraintViolation, "downsampling stride must be positive: " + label);
    if (n == 0) continue;
    const auto& prev = specs[n - 1];
    if (s.window <= prev.window)
      fail(ErrorCode::kConstraintViolation, "window lengths not strictly increasing: " + label);
    if (s.window * s.stride != prev.window * prev.stride)
      fail(ErrorCode::kConstraintViolation,
           "M·C not constant: " + label + " (" + std::to_string(prev.window) + "·" + std::to_string(prev.stride) +
               " = " + std::to_string(prev.window * prev.stride) + " vs " + std::to_string(s.window) + "·" +
               std::to_string(s.stride) + " = " + std::to_string(s.window * s.stride) + ")");
  }
}

inline ScalePlan plan_scales(std::size_t gamma, std::span<const ScaleSpec> specs) {
  require(gamma >= 1, "plan_scales: waveform must contain at least one sample");
  validate_scales(specs);
  ScalePlan plan;
  plan.gamma = gamma;
  plan.effective_gamma = std::max(gamma, specs.back().window);
  std::size_t lo = 0, hi = 0;
  for (const auto& spec : specs) {
    ScaleLengths s;
    s.spec = spec;
    s.windows = window_count(plan.effective_gamma, spec.window);
    s.chunks = chunk_count(s.windows, spec.chunk);
    s.padded_samples = (s.windows + 1) * spec.window / 2;
    s.padded_frames = (s.chunks + 1) * spec.chunk / 2;
    s.downsampled = ceil_div(s.windows, spec.stride);
    s.frame_stride_samples = spec.window * spec.stride / 2;
    lo = plan.scales.empty() ? s.downsampled : std::min(lo, s.downsampled);
    hi = std::max(hi, s.downsampled);
    plan.scales.push_back(s);
  }
  plan.frames = lo;
  for (auto& s : plan.scales) s.trimmed = s.downsampled - plan.frames;
  if (hi - lo > 1)
    plan.diagnostics.push_back("per-scale frame counts differ by " + std::to_string(hi - lo) +
                               " (expected at most 1); trimming all scales to " + std::to_string(lo));
  return plan;
}

// Zero-pads the waveform at the tail to (L + 1) * M / 2 samples, where
// L = ceil(2 * max(gamma, M) / M).
template <typename T>
std::vector<T> pad_for_windows(std::span<const T> x, std::size_t window) {
  require_even(window, "window length");
  require(!x.empty(), "split_windows: empty waveform");
  const std::size_t windows = window_count(x.size(), window);
  std::vector<T> padded((windows + 1) * window / 2, T(0));
  std::copy(x.begin(), x.end(), padded.begin());
  return padded;
}

// [M x L] matrix whose column i holds samples [i * M/2, i * M/2 + M) of the
// tail-padded waveform.
template <typename T>
Tensor<T> split_windows(std::span<const T> x, std::size_t window) {
  const auto padded = pad_for_windows(x, window);
  const std::size_t windows = window_count(x.size(), window);
  const std::size_t hop = window / 2;
  std::vector<T> frames(window * windows);
  for (std::size_t i = 0; i < windows; ++i)
    for (std::size_t m = 0; m < window; ++m) frames[m * windows + i] = padded[i * hop + m];
  return Tensor<T>({window, windows}, std::move(frames));
}

inline FrameGeometry chunk_geometry(std::size_t frames, std::size_t chunk) {
  require_even(chunk, "chunk length");
  require(frames >= 1, "chunk: frame count must be positive");
  return FrameGeometry{chunk, chunk / 2, chunk / 2, chunk_count(frames, chunk), frames};
}

// D x S x K chunk representation threaded through the GALR blocks.
template <typename T>
struct ChunkTensor {
  Tensor<T> data;
  std::size_t scale = 0;
  std::size_t block = 0;

  std::size_t channels() const { return data.dim(0); }
  std::size_t chunks() const { return data.dim(1); }
  std::size_t chunk_len() const { return data.dim(2); }
};

// [D x L] -> [D x S x K], S = ceil(2L / K). The frame axis gets K/2 leading
// zeros and tail zeros up to (S + 1) * K / 2; chunk s starts at s * K/2.
template <typename T>
ChunkTensor<T> chunk(const Tensor<T>& frames, std::size_t chunk_len, std::size_t scale = 0) {
  require(frames.rank() == 2, "chunk: expects [D x L], got " + shape_str(frames.shape()));
  return ChunkTensor<T>{unfold(frames, chunk_geometry(frames.dim(1), chunk_len)), scale, 0};
}

// Plain overlap-add of half-overlapping chunks back to [D x L]: chunks are
// summed at their padded offsets, the leading K/2 positions are dropped and
// the result is cut to L. No normalization by coverage.
template <typename T>
Tensor<T> overlap_add(const Tensor<T>& chunks, std::size_t frames) {
  require(chunks.rank() == 3, "overlap_add: expects [D x S x K], got " + shape_str(chunks.shape()));
  const std::size_t count = chunks.dim(1);
  const std::size_t len = chunks.dim(2);
  require_even(len, "chunk length");
  require(frames >= 1, "overlap_add: target length must be positive");
  const std::size_t span = count * len / 2;
  if (frames > span)
    fail(ErrorCode::kInvalidArgument, "overlap_add: length " + std::to_string(frames) +
                                          " exceeds reconstructable span " + std::to_string(span));
  return fold(chunks, FrameGeometry{len, len / 2, len / 2, count, frames});
}

template <typename T>
Tensor<T> overlap_add(const ChunkTensor<T>& chunks, std::size_t frames) {
  return overlap_add(chunks.data, frames);
}

}  // namespace galr
