#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "galr/error.hpp"
#include "galr/model_io.hpp"

namespace galr {

// Mono samples in [-1, 1] decoded from 16-bit PCM (value / 32768).
struct WaveformBuffer {
  std::vector<float> samples;
  std::uint32_t sample_rate = 0;
};

inline WaveformBuffer decode_wav(std::string_view data) {
  auto le16 = [&](std::size_t at) {
    return static_cast<std::uint16_t>(static_cast<unsigned char>(data[at]) |
                                      (static_cast<unsigned char>(data[at + 1]) << 8));
  };
  auto le32 = [&](std::size_t at) {
    return static_cast<std::uint32_t>(le16(at)) | (static_cast<std::uint32_t>(le16(at + 2)) << 16);
  };
  if (data.size() < 12 || data.substr(0, 4) != "RIFF" || data.substr(8, 4) != "WAVE")
    fail(ErrorCode::kWavFormat, "not a RIFF/WAVE file");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const auto id = data.substr(pos, 4);
    const std::uint32_t size = le32(pos + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, data.size() - body);
    if (id == "fmt ") {
      if (available < 16) fail(ErrorCode::kWavFormat, "fmt chunk too short");
      format = le16(body);
      channels = le16(body + 2);
      rate = le32(body + 4);
      bits = le16(body + 14);
      // WAVE_FORMAT_EXTENSIBLE carries the real format code in its sub-format GUID.
      if (format == 0xFFFE && available >= 26) format = le16(body + 24);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) fail(ErrorCode::kWavFormat, "data chunk precedes fmt chunk");
      if (format != 1 || bits != 16)
        fail(ErrorCode::kWavNotPcm16, "only 16-bit PCM is supported (format " + std::to_string(format) + ", " +
                                          std::to_string(bits) + " bits)");
      if (channels != 1) fail(ErrorCode::kWavNotMono, "expected mono audio, got " + std::to_string(channels) + " channels");
      const std::size_t count = available / 2;
      if (count == 0) fail(ErrorCode::kWavEmpty, "audio contains no samples");
      WaveformBuffer out;
      out.sample_rate = rate;
      out.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i)
        out.samples[i] = static_cast<float>(static_cast<std::int16_t>(le16(body + 2 * i))) / 32768.0f;
      return out;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(ErrorCode::kWavFormat, "missing fmt chunk");
  fail(ErrorCode::kWavFormat, "missing data chunk");
}

inline WaveformBuffer read_wav(const std::string& path) { return decode_wav(read_file(path)); }

inline std::string encode_wav(std::span<const float> samples, std::uint32_t sample_rate) {
  detail::ByteWriter w;
  const auto data_bytes = static_cast<std::uint32_t>(2 * samples.size());
  w.bytes("RIFF");
  w.u32(36 + data_bytes);
  w.bytes("WAVE");
  w.bytes("fmt ");
  w.u32(16);
  w.u32(1u | (1u << 16));  // PCM, mono
  w.u32(sample_rate);
  w.u32(sample_rate * 2);
  w.u32(2u | (16u << 16));  // block align, bits per sample
  w.bytes("data");
  w.u32(data_bytes);
  std::string payload;
  payload.reserve(data_bytes);
  for (float s : samples) {
    const long q = std::lround(std::clamp(static_cast<double>(s) * 32768.0, -32768.0, 32767.0));
    const auto u = static_cast<std::uint16_t>(static_cast<std::int16_t>(q));
    payload.push_back(static_cast<char>(u & 0xffu));
    payload.push_back(static_cast<char>(u >> 8));
  }
  w.bytes(payload);
  return w.take();
}

inline void write_wav(const std::string& path, std::span<const float> samples, std::uint32_t sample_rate) {
  write_file(path, encode_wav(samples, sample_rate));
}

}  // namespace galr
