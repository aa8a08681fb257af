#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "galr/error.hpp"
#include "galr/framing.hpp"
#include "galr/recurrent.hpp"

namespace galr {

struct EncoderConfig {
  std::size_t sample_rate = 16000;
  std::vector<ScaleSpec> scales;
  std::size_t feature_dim = 128;       // D
  std::size_t blocks_per_scale = 1;    // B
  std::size_t heads = 8;
  RnnKind rnn = RnnKind::kGru;
  std::size_t san_sampling_factor = 1;  // 1 disables down/up-sampling around attention
  bool positional_encoding = false;
  std::uint64_t seed = 0;

  // Three scales of 6.25/12.5/25 ms at 16 kHz, one block each, D = 128.
  static EncoderConfig aishell2() {
    EncoderConfig c;
    c.scales = {{100, 48, 8}, {200, 24, 4}, {400, 12, 2}};
    return c;
  }

  std::size_t num_scales() const { return scales.size(); }
  std::size_t output_dim() const { return scales.size() * feature_dim; }

  // Identical for every scale once validated.
  std::size_t frame_stride_samples() const { return scales.front().window * scales.front().stride / 2; }

  void validate() const {
    if (sample_rate == 0) fail(ErrorCode::kConstraintViolation, "sample_rate must be positive");
    validate_scales(scales);
    if (feature_dim == 0) fail(ErrorCode::kConstraintViolation, "feature_dim must be positive");
    if (heads == 0) fail(ErrorCode::kConstraintViolation, "heads must be positive");
    if (feature_dim % heads != 0)
      fail(ErrorCode::kConstraintViolation, "D not divisible by heads: " + std::to_string(feature_dim) + " % " +
                                                std::to_string(heads) + " != 0");
    if (san_sampling_factor == 0) fail(ErrorCode::kConstraintViolation, "san_sampling_factor must be >= 1");
  }

  bool operator==(const EncoderConfig&) const = default;
};

}  // namespace galr
