#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace galr {

enum class ErrorCode {
  kInvalidArgument,
  kConstraintViolation,
  kConfig,
  kIo,
  kBadMagic,
  kVersionMismatch,
  kTruncated,
  kTrailingData,
  kCorrupt,
  kShapeMismatch,
  kMissingTensor,
  kUnexpectedTensor,
  kDuplicateTensor,
  kUnsupportedDtype,
  kWavFormat,
  kWavNotPcm16,
  kWavNotMono,
  kWavRateMismatch,
  kWavEmpty,
  kGradcheckFailed,
};

// Stable machine-readable names, printed by the CLI as `error: <code>: ...`.
constexpr std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kConstraintViolation: return "constraint-violation";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kTrailingData: return "trailing-data";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kMissingTensor: return "missing-tensor";
    case ErrorCode::kUnexpectedTensor: return "unexpected-tensor";
    case ErrorCode::kDuplicateTensor: return "duplicate-tensor";
    case ErrorCode::kUnsupportedDtype: return "unsupported-dtype";
    case ErrorCode::kWavFormat: return "wav-format";
    case ErrorCode::kWavNotPcm16: return "wav-not-pcm16";
    case ErrorCode::kWavNotMono: return "wav-not-mono";
    case ErrorCode::kWavRateMismatch: return "wav-rate-mismatch";
    case ErrorCode::kWavEmpty: return "wav-empty";
    case ErrorCode::kGradcheckFailed: return "gradcheck-failed";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace galr
