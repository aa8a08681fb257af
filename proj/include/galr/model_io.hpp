#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "galr/config.hpp"
#include "galr/encoder.hpp"
#include "galr/parameters.hpp"

namespace galr {

inline constexpr std::uint32_t kWeightsVersion = 1;
inline constexpr std::uint32_t kFeaturesVersion = 1;
inline constexpr std::uint32_t kDtypeFloat32 = 1;

// ---------------------------------------------------------------------------
// Config

inline std::string rnn_key(RnnKind kind) { return std::string(rnn_name(kind)); }

inline EncoderConfig parse_config(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfig, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::kConfig, "config must be a JSON object");

  static const std::set<std::string> kTopKeys = {"sample_rate", "scales", "feature_dim", "blocks_per_scale",
                                                  "heads", "rnn", "san_sampling_factor",
                                                  "positional_encoding", "seed"};
  static const std::set<std::string> kScaleKeys = {"window", "chunk", "stride"};
  for (const auto& [key, value] : doc.items())
    if (!kTopKeys.contains(key)) fail(ErrorCode::kConfig, "unknown key '" + key + "'");

  auto unsigned_field = [](const json& obj, const std::string& key, const std::string& where) -> std::uint64_t {
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(ErrorCode::kConfig, where + key + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  };

  EncoderConfig c = EncoderConfig::aishell2();
  if (!doc.contains("scales")) fail(ErrorCode::kConfig, "missing key 'scales'");
  const auto& scales = doc.at("scales");
  if (!scales.is_array()) fail(ErrorCode::kConfig, "scales must be an array");
  c.scales.clear();
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const auto& s = scales[i];
    const std::string where = "scales[" + std::to_string(i) + "].";
    if (!s.is_object()) fail(ErrorCode::kConfig, where + " must be an object");
    for (const auto& [key, value] : s.items())
      if (!kScaleKeys.contains(key)) fail(ErrorCode::kConfig, "unknown key '" + where + key + "'");
    for (const auto& key : kScaleKeys)
      if (!s.contains(key)) fail(ErrorCode::kConfig, "missing key '" + where + key + "'");
    c.scales.push_back({unsigned_field(s, "window", where), unsigned_field(s, "chunk", where),
                        unsigned_field(s, "stride", where)});
  }
  if (doc.contains("sample_rate")) c.sample_rate = unsigned_field(doc, "sample_rate", "");
  if (doc.contains("feature_dim")) c.feature_dim = unsigned_field(doc, "feature_dim", "");
  if (doc.contains("blocks_per_scale")) c.blocks_per_scale = unsigned_field(doc, "blocks_per_scale", "");
  if (doc.contains("heads")) c.heads = unsigned_field(doc, "heads", "");
  if (doc.contains("san_sampling_factor")) c.san_sampling_factor = unsigned_field(doc, "san_sampling_factor", "");
  if (doc.contains("seed")) c.seed = unsigned_field(doc, "seed", "");
  if (doc.contains("positional_encoding")) {
    if (!doc["positional_encoding"].is_boolean()) fail(ErrorCode::kConfig, "positional_encoding must be a boolean");
    c.positional_encoding = doc["positional_encoding"].get<bool>();
  }
  if (doc.contains("rnn")) {
    const auto& r = doc["rnn"];
    if (r == "gru") {
      c.rnn = RnnKind::kGru;
    } else if (r == "lstm") {
      c.rnn = RnnKind::kLstm;
    } else {
      fail(ErrorCode::kConfig, "rnn must be \"gru\" or \"lstm\"");
    }
  }
  c.validate();
  return c;
}

inline std::string config_to_json(const EncoderConfig& c) {
  nlohmann::ordered_json doc;
  doc["sample_rate"] = c.sample_rate;
  doc["feature_dim"] = c.feature_dim;
  doc["blocks_per_scale"] = c.blocks_per_scale;
  doc["heads"] = c.heads;
  doc["rnn"] = rnn_key(c.rnn);
  doc["san_sampling_factor"] = c.san_sampling_factor;
  doc["positional_encoding"] = c.positional_encoding;
  doc["seed"] = c.seed;
  auto& scales = doc["scales"] = nlohmann::ordered_json::array();
  for (const auto& s : c.scales) scales.push_back({{"window", s.window}, {"chunk", s.chunk}, {"stride", s.stride}});
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Byte helpers (little-endian regardless of host)

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "failed writing '" + path + "'");
}

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }
  std::size_t size() const { return buf_.size(); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, const char* what) : data_(data), what_(what) {}

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n)
      fail(ErrorCode::kTruncated, std::string(what_) + ": unexpected end of data at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void seek(std::size_t pos) { pos_ = pos; }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  const char* what_;
};

inline void check_magic(std::string_view data, std::string_view magic, const char* what) {
  if (data.size() < magic.size()) fail(ErrorCode::kTruncated, std::string(what) + ": file shorter than its magic");
  if (data.substr(0, magic.size()) != magic)
    fail(ErrorCode::kBadMagic, std::string(what) + ": expected magic '" + std::string(magic) + "'");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Weights container
//
//   "GALR" | u32 version | u32 count | count x entry | payload
//   entry = u32 name_len | name | u32 dtype (1 = f32) | u32 rank | rank x u64 dim | u64 offset
// Offsets are absolute; payload is row-major little-endian f32.

template <typename T>
std::string serialize_weights(const ParameterStore<T>& store) {
  std::size_t header = 12;
  for (const auto& [name, t] : store.entries()) header += 4 + name.size() + 4 + 4 + 8 * t.rank() + 8;
  detail::ByteWriter w;
  w.bytes("GALR");
  w.u32(kWeightsVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  std::uint64_t offset = header;
  for (const auto& [name, t] : store.entries()) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    w.u32(kDtypeFloat32);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    w.u64(offset);
    offset += 4 * t.numel();
  }
  for (const auto& [name, t] : store.entries())
    for (T v : t.data()) w.f32(static_cast<float>(v));
  return w.take();
}

inline ParameterStore<float> deserialize_weights(std::string_view data) {
  detail::check_magic(data, "GALR", "weights");
  detail::ByteReader r(data, "weights");
  r.bytes(4);
  const auto version = r.u32();
  if (version != kWeightsVersion)
    fail(ErrorCode::kVersionMismatch, "weights: version " + std::to_string(version) + " is not supported (expected " +
                                          std::to_string(kWeightsVersion) + ")");
  const auto count = r.u32();
  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> entries;
  std::set<std::string> names;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    e.name = std::string(r.bytes(r.u32()));
    if (!names.insert(e.name).second) fail(ErrorCode::kDuplicateTensor, "weights: duplicate tensor '" + e.name + "'");
    const auto dtype = r.u32();
    if (dtype != kDtypeFloat32)
      fail(ErrorCode::kUnsupportedDtype, "weights: tensor '" + e.name + "' has dtype code " + std::to_string(dtype));
    const auto rank = r.u32();
    if (rank == 0 || rank > 8) fail(ErrorCode::kCorrupt, "weights: tensor '" + e.name + "' has rank " + std::to_string(rank));
    for (std::uint32_t k = 0; k < rank; ++k) {
      const auto d = r.u64();
      if (d == 0 || d > (std::uint64_t{1} << 32))
        fail(ErrorCode::kCorrupt, "weights: tensor '" + e.name + "' has an invalid dimension");
      e.shape.push_back(static_cast<std::size_t>(d));
    }
    e.offset = r.u64();
    entries.push_back(std::move(e));
  }
  const std::size_t directory_end = r.pos();

  // Payload ranges must sit after the directory, inside the file, disjoint.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  for (const auto& e : entries) {
    const std::uint64_t bytes = 4 * static_cast<std::uint64_t>(shape_numel(e.shape));
    if (e.offset < directory_end) fail(ErrorCode::kCorrupt, "weights: payload of '" + e.name + "' overlaps the directory");
    if (e.offset > data.size() || bytes > data.size() - e.offset)
      fail(ErrorCode::kTruncated, "weights: payload of '" + e.name + "' extends past the end of the file");
    ranges.emplace_back(e.offset, e.offset + bytes);
  }
  std::sort(ranges.begin(), ranges.end());
  for (std::size_t i = 1; i < ranges.size(); ++i)
    if (ranges[i].first < ranges[i - 1].second) fail(ErrorCode::kCorrupt, "weights: tensor payloads overlap");

  ParameterStore<float> store;
  for (auto& e : entries) {
    r.seek(static_cast<std::size_t>(e.offset));
    std::vector<float> values(shape_numel(e.shape));
    for (auto& v : values) v = r.f32();
    store.add(e.name, Tensor<float>(e.shape, std::move(values)));
  }
  return store;
}

template <typename T>
void save_weights(const ParameterStore<T>& store, const std::string& path) {
  write_file(path, serialize_weights(store));
}

inline ParameterStore<float> load_weights(const std::string& path) { return deserialize_weights(read_file(path)); }

// Loads and checks the directory against what `config` implies.
template <typename T = float>
ParameterStore<T> load_weights(const std::string& path, const EncoderConfig& config) {
  auto store = load_weights(path);
  validate_parameters(store, config);
  if constexpr (std::is_same_v<T, float>) {
    return store;
  } else {
    return store.template cast<T>();
  }
}

// ---------------------------------------------------------------------------
// Feature container
//
//   "GFEA" | u32 version | u32 rows | u32 cols | u32 frame_stride_samples |
//   u32 sample_rate | rows * cols little-endian f32, row-major

struct FeatureFile {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::uint32_t frame_stride_samples = 0;
  std::uint32_t sample_rate = 0;
  std::vector<float> values;

  bool operator==(const FeatureFile&) const = default;
};

template <typename T>
FeatureFile to_feature_file(const FeatureMatrix<T>& m, std::size_t sample_rate) {
  FeatureFile f;
  f.rows = static_cast<std::uint32_t>(m.rows());
  f.cols = static_cast<std::uint32_t>(m.cols());
  f.frame_stride_samples = static_cast<std::uint32_t>(m.frame_stride_samples);
  f.sample_rate = static_cast<std::uint32_t>(sample_rate);
  f.values.reserve(m.data.numel());
  for (T v : m.data.data()) f.values.push_back(static_cast<float>(v));
  return f;
}

inline std::string serialize_features(const FeatureFile& f) {
  require(f.values.size() == std::size_t{f.rows} * f.cols, "features: value count does not match rows x cols");
  detail::ByteWriter w;
  w.bytes("GFEA");
  w.u32(kFeaturesVersion);
  w.u32(f.rows);
  w.u32(f.cols);
  w.u32(f.frame_stride_samples);
  w.u32(f.sample_rate);
  for (float v : f.values) w.f32(v);
  return w.take();
}

inline FeatureFile deserialize_features(std::string_view data) {
  detail::check_magic(data, "GFEA", "features");
  detail::ByteReader r(data, "features");
  r.bytes(4);
  const auto version = r.u32();
  if (version != kFeaturesVersion)
    fail(ErrorCode::kVersionMismatch, "features: version " + std::to_string(version) + " is not supported");
  FeatureFile f;
  f.rows = r.u32();
  f.cols = r.u32();
  f.frame_stride_samples = r.u32();
  f.sample_rate = r.u32();
  const std::uint64_t count = std::uint64_t{f.rows} * f.cols;
  if (r.remaining() < 4 * count)
    fail(ErrorCode::kTruncated, "features: payload holds " + std::to_string(r.remaining() / 4) + " of " +
                                    std::to_string(count) + " values");
  if (r.remaining() > 4 * count) fail(ErrorCode::kTrailingData, "features: unexpected bytes after payload");
  f.values.resize(static_cast<std::size_t>(count));
  for (auto& v : f.values) v = r.f32();
  return f;
}

inline void save_features(const FeatureFile& f, const std::string& path) { write_file(path, serialize_features(f)); }

inline FeatureFile load_features(const std::string& path) { return deserialize_features(read_file(path)); }

// One line per feature row, one column per frame, 9 significant digits.
inline std::string features_to_csv(const FeatureFile& f) {
  std::string out;
  out.reserve(std::size_t{f.rows} * f.cols * 12);
  char buf[32];
  for (std::uint32_t r = 0; r < f.rows; ++r) {
    for (std::uint32_t c = 0; c < f.cols; ++c) {
      if (c) out += ',';
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(f.values[std::size_t{r} * f.cols + c]));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace galr
