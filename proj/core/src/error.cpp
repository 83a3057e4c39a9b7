#include "cerfuse/error.hpp"

namespace cerfuse {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAllZero: return "AllZero";
    case ErrorCode::kNegativeEntry: return "NegativeEntry";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kSimplexViolation: return "SimplexViolation";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kUnmappableLabel: return "UnmappableLabel";
    case ErrorCode::kInvalidSpace: return "InvalidSpace";
    case ErrorCode::kInvalidScheme: return "InvalidScheme";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonPositiveDuration: return "NonPositiveDuration";
    case ErrorCode::kBadHop: return "BadHop";
    case ErrorCode::kMalformed: return "Malformed";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kInconsistentBounds: return "InconsistentBounds";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kBadDimensions: return "BadDimensions";
    case ErrorCode::kModalityMismatch: return "ModalityMismatch";
    case ErrorCode::kAllZeroFused: return "AllZeroFused";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorrupt: return "Corrupt";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kZeroNorm: return "ZeroNorm";
    case ErrorCode::kZeroFeature: return "ZeroFeature";
    case ErrorCode::kBadTemperature: return "BadTemperature";
    case ErrorCode::kUncoveredFrame: return "UncoveredFrame";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, message, line)),
      code_(code),
      line_(line) {}

}  // namespace cerfuse
