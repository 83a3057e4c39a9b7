#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cerfuse {

// Every failure the engine reports. Names follow the error vocabulary of the
// individual modules so callers can branch on them without string matching.
enum class ErrorCode {
  // core
  kAllZero,
  kNegativeEntry,
  kNonFinite,
  kSimplexViolation,
  kUnknownLabel,
  kUnmappableLabel,
  kInvalidSpace,
  kInvalidScheme,
  kDimensionMismatch,
  // ingest
  kNonPositiveDuration,
  kBadHop,
  kMalformed,
  kDuplicateKey,
  kInconsistentBounds,
  kGridMismatch,
  // mhpf
  kBadDimensions,
  kModalityMismatch,
  kAllZeroFused,
  kEmptyBatch,
  kEmptySplit,
  kBadConfig,
  kVersionMismatch,
  kCorrupt,
  // compound / zeroshot
  kMissingClass,
  kZeroNorm,
  kZeroFeature,
  kBadTemperature,
  // temporal
  kUncoveredFrame,
  kEmptyInput,
  // metrics
  kLengthMismatch,
  kEmptyMatrix,
  // io
  kIo,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const { return code_; }
  // 1-based line number within the offending file, when the error came from
  // line-delimited input.
  std::optional<std::size_t> line() const { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace cerfuse
