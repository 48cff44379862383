#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace avsz {

enum class Errc {
  kParseError,
  kDuplicateId,
  kMissingFile,
  kDecodeError,
  kUnsupportedFormat,
  kIoError,
  kInvalidArgument,
  kDimensionMismatch,
  kEmptyGT,
  kInvalidK,
  kInvalidThreshold,
  kEmptyInput,
  kZeroVector,
  kEncoderFailure,
  kNonFiniteGradient,
  kUnsupportedCapability,
  kTimeout,
  kTransportError,
  kSchemaViolation,
  kUnmatchedFixture,
  kRangeViolation,
  kBackendError,
  kEmptyLabel,
  kEmptyCaption,
  kConfigError,
  kMissingGT,
  kNoValidSamples,
};

inline constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kParseError: return "ParseError";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kDecodeError: return "DecodeError";
    case Errc::kUnsupportedFormat: return "UnsupportedFormat";
    case Errc::kIoError: return "IoError";
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kEmptyGT: return "EmptyGT";
    case Errc::kInvalidK: return "InvalidK";
    case Errc::kInvalidThreshold: return "InvalidThreshold";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kEncoderFailure: return "EncoderFailure";
    case Errc::kNonFiniteGradient: return "NonFiniteGradient";
    case Errc::kUnsupportedCapability: return "UnsupportedCapability";
    case Errc::kTimeout: return "Timeout";
    case Errc::kTransportError: return "TransportError";
    case Errc::kSchemaViolation: return "SchemaViolation";
    case Errc::kUnmatchedFixture: return "UnmatchedFixture";
    case Errc::kRangeViolation: return "RangeViolation";
    case Errc::kBackendError: return "BackendError";
    case Errc::kEmptyLabel: return "EmptyLabel";
    case Errc::kEmptyCaption: return "EmptyCaption";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kMissingGT: return "MissingGT";
    case Errc::kNoValidSamples: return "NoValidSamples";
  }
  return "Unknown";
}

// Every failure raised by the library. The code identifies the failure
// class; the message carries context (file, line, backend stage).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace avsz
