#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "galr/galr.hpp"

namespace galr::cli {

inline EncoderConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

inline int cmd_init(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_path,
                    std::ostream& out) {
  const auto config = load_config(config_path);
  const auto store = init_parameters<float>(config, seed);
  save_weights(store, out_path);
  out << "wrote " << store.size() << " tensors (" << store.total_scalars() << " parameters) to " << out_path << "\n";
  return 0;
}

inline int cmd_encode(const std::string& config_path, const std::string& weights_path, const std::string& in_path,
                      const std::string& out_path, const std::string& csv_path, int threads, std::ostream& out) {
  const auto config = load_config(config_path);
  const auto wav = read_wav(in_path);
  if (wav.sample_rate != config.sample_rate)
    fail(ErrorCode::kWavRateMismatch, "audio is " + std::to_string(wav.sample_rate) + " Hz, config expects " +
                                          std::to_string(config.sample_rate) + " Hz");
  const MultiScaleEncoder<float> encoder(config, load_weights<float>(weights_path, config));
  ThreadScope scope(threads);
  const auto features = to_feature_file(encoder.encode(wav.samples), config.sample_rate);
  save_features(features, out_path);
  if (!csv_path.empty()) write_file(csv_path, features_to_csv(features));
  out << "encoded " << wav.samples.size() << " samples into " << features.rows << " x " << features.cols
      << " features (frame stride " << features.frame_stride_samples << " samples)\n";
  return 0;
}

inline int cmd_gradcheck(const std::string& config_path, std::uint64_t seed, double tol, double step,
                         const std::string& corrupt_op, std::ostream& out) {
  const auto base = config_path.empty() ? EncoderConfig::aishell2() : load_config(config_path);
  const auto tiny = tiny_config(base);
  BackwardOptions options;
  options.corrupt_op = corrupt_op;
  const auto start = std::chrono::steady_clock::now();
  const auto report = check_encoder_gradients(tiny, seed, step, options);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  out << "tiny config: N=" << tiny.num_scales() << " D=" << tiny.feature_dim << " B=" << tiny.blocks_per_scale
      << " rnn=" << rnn_name(tiny.rnn) << " samples=" << kTinyWaveformSamples << " step=" << step << "\n";
  for (const auto& e : report.entries)
    out << std::left << std::setw(36) << e.name << " n=" << std::setw(4) << e.elements
        << " max_rel_err=" << std::scientific << std::setprecision(3) << e.max_rel_error << std::defaultfloat << "\n";
  out << "worst relative error " << std::scientific << std::setprecision(3) << report.worst() << std::defaultfloat
      << " (tol " << tol << ", " << std::fixed << std::setprecision(2) << elapsed << " s)" << std::defaultfloat << "\n";
  if (!report.passed(tol)) {
    const auto* worst = report.worst_entry();
    std::ostringstream msg;
    msg << "parameter '" << (worst ? worst->name : std::string("?")) << "' relative error " << std::scientific
        << std::setprecision(3) << (worst ? worst->max_rel_error : 0.0) << " >= tol " << tol;
    if (!corrupt_op.empty()) msg << " (adjoint of op '" << corrupt_op << "' corrupted)";
    fail(ErrorCode::kGradcheckFailed, msg.str());
  }
  out << "gradcheck passed\n";
  return 0;
}

inline void print_plan(const EncoderConfig& config, const ScalePlan& plan, std::ostream& out) {
  const double rate = static_cast<double>(config.sample_rate);
  out << "input " << plan.gamma << " samples (" << std::fixed << std::setprecision(4) << plan.gamma / rate
      << " s), padded to " << plan.effective_gamma << "\n"
      << std::defaultfloat;
  out << std::left << std::setw(6) << "scale" << std::right << std::setw(10) << "M" << std::setw(10) << "M_ms"
      << std::setw(6) << "K" << std::setw(6) << "C" << std::setw(10) << "L_n" << std::setw(8) << "S_n"
      << std::setw(10) << "ceil(L/C)" << std::setw(6) << "trim" << "\n";
  for (std::size_t n = 0; n < plan.scales.size(); ++n) {
    const auto& s = plan.scales[n];
    std::ostringstream ms;
    ms << std::setprecision(6) << 1000.0 * static_cast<double>(s.spec.window) / rate;
    out << std::left << std::setw(6) << (n + 1) << std::right << std::setw(10) << s.spec.window << std::setw(10)
        << ms.str() << std::setw(6) << s.spec.chunk << std::setw(6) << s.spec.stride << std::setw(10) << s.windows
        << std::setw(8) << s.chunks << std::setw(10) << s.downsampled << std::setw(6) << s.trimmed << "\n";
  }
  const auto stride = plan.scales.front().frame_stride_samples;
  out << "T = " << plan.frames << " frames, frame stride " << stride << " samples ("
      << std::setprecision(6) << 1000.0 * static_cast<double>(stride) / rate << " ms)\n";
  for (const auto& d : plan.diagnostics) out << "warning: " << d << "\n";
}

inline int cmd_plan(const std::string& config_path, double seconds, std::ostream& out) {
  const auto config = load_config(config_path);
  require(std::isfinite(seconds) && seconds > 0.0, "duration must be positive");
  const auto gamma = static_cast<std::size_t>(std::llround(seconds * static_cast<double>(config.sample_rate)));
  require(gamma >= 1, "duration is shorter than one sample");
  print_plan(config, plan_scales(gamma, config.scales), out);
  return 0;
}

struct BenchResult {
  std::vector<double> wall_seconds;
  double median_seconds = 0.0;
  double realtime_factor = 0.0;  // audio seconds per wall second
};

inline BenchResult run_bench(const MultiScaleEncoder<float>& encoder, double seconds, int repeat, int threads) {
  require(seconds > 0.0 && repeat >= 1, "bench: seconds and repeat must be positive");
  const auto& config = encoder.config();
  const auto samples = static_cast<std::size_t>(std::llround(seconds * static_cast<double>(config.sample_rate)));
  const auto noise = uniform_noise<float>(std::max<std::size_t>(samples, 1), 7, 0.5);
  ThreadScope scope(threads);
  BenchResult result;
  for (int r = 0; r < repeat; ++r) {
    const auto start = std::chrono::steady_clock::now();
    const auto features = encoder.encode(noise);
    result.wall_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (features.cols() == 0) fail(ErrorCode::kInvalidArgument, "bench: empty output");
  }
  auto sorted = result.wall_seconds;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  result.median_seconds = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  result.realtime_factor = seconds / result.median_seconds;
  return result;
}

inline int cmd_bench(const std::string& config_path, const std::string& weights_path, double seconds, int repeat,
                     int threads, std::ostream& out) {
  const auto config = load_config(config_path);
  auto store = weights_path.empty() ? init_parameters<float>(config) : load_weights<float>(weights_path, config);
  const MultiScaleEncoder<float> encoder(config, std::move(store));
  const auto result = run_bench(encoder, seconds, repeat, threads);
  out << "audio " << seconds << " s, " << repeat << " repeats, " << threads << " thread(s)\n";
  for (std::size_t i = 0; i < result.wall_seconds.size(); ++i)
    out << "run " << (i + 1) << ": " << std::fixed << std::setprecision(3) << result.wall_seconds[i] << " s\n"
        << std::defaultfloat;
  out << "median_seconds=" << std::fixed << std::setprecision(4) << result.median_seconds
      << " realtime_factor=" << std::setprecision(3) << result.realtime_factor << "\n"
      << std::defaultfloat;
  return 0;
}

// Entry point shared by the executable and the tests. Failures print a single
// `error: <code>: <message>` line and return 1.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-scale GALR raw-waveform feature encoder", "galr"};
  app.require_subcommand(1);

  std::string config_path, weights_path, in_path, out_path, csv_path, corrupt_op;
  std::optional<std::uint64_t> seed;
  std::uint64_t check_seed = 42;
  double tol = 1e-4, step = 1e-4, seconds = 10.0, duration = 0.0;
  int repeat = 3, threads = 1;

  auto* init = app.add_subcommand("init", "Create a seeded weights file");
  init->add_option("--config", config_path, "Encoder config (JSON)")->required();
  init->add_option("--seed", seed, "PRNG seed (defaults to the config seed)");
  init->add_option("--out", out_path, "Output weights file")->required();

  auto* encode = app.add_subcommand("encode", "Encode a PCM16 mono WAV file into features");
  encode->add_option("--config", config_path, "Encoder config (JSON)")->required();
  encode->add_option("--weights", weights_path, "Weights file")->required();
  encode->add_option("--in", in_path, "Input WAV")->required();
  encode->add_option("--out", out_path, "Output feature file")->required();
  encode->add_option("--csv", csv_path, "Optional CSV mirror of the features");
  encode->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all parameter gradients");
  gradcheck->add_option("--config", config_path, "Encoder config supplying cell type and flags");
  gradcheck->add_option("--seed", check_seed, "Seed for parameters and input");
  gradcheck->add_option("--tol", tol, "Maximum relative error");
  gradcheck->add_option("--step", step, "Central-difference step");
  gradcheck->add_option("--corrupt-adjoint", corrupt_op, "Test hook: scale the adjoint of this op");

  auto* plan = app.add_subcommand("plan", "Print the per-scale length plan");
  plan->add_option("--config", config_path, "Encoder config (JSON)")->required();
  plan->add_option("--duration-seconds", duration, "Input duration in seconds")->required();

  auto* bench = app.add_subcommand("bench", "Measure encoding throughput on synthetic noise");
  bench->add_option("--config", config_path, "Encoder config (JSON)")->required();
  bench->add_option("--weights", weights_path, "Weights file (seeded init when omitted)");
  bench->add_option("--seconds", seconds, "Audio duration per run")->check(CLI::PositiveNumber);
  bench->add_option("--repeat", repeat, "Number of runs")->check(CLI::PositiveNumber);
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*init) return cmd_init(config_path, seed, out_path, out);
    if (*encode) return cmd_encode(config_path, weights_path, in_path, out_path, csv_path, threads, out);
    if (*gradcheck) return cmd_gradcheck(config_path, check_seed, tol, step, corrupt_op, out);
    if (*plan) return cmd_plan(config_path, duration, out);
    if (*bench) return cmd_bench(config_path, weights_path, seconds, repeat, threads, out);
  } catch (const Error& e) {
    err << "error: " << code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"galr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace galr::cli
