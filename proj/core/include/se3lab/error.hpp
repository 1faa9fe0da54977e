#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace se3lab {

enum class ErrorKind {
  kCoincidentPoints,
  kCollinearTriple,
  kConcentrationTooSmall,
  kDimensionMismatch,
  kStaleCache,
  kTimeTooSmall,
  kAngleOutOfRange,
  kSizeMismatch,
  kCostOverflow,
  kTooLarge,
  kUnknownTarget,
  kInvalidRotation,
  kConfig,
  kIO,
  kParse,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (the CLI in
// particular) can map it to an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCoincidentPoints: return "CoincidentPoints";
    case ErrorKind::kCollinearTriple: return "CollinearTriple";
    case ErrorKind::kConcentrationTooSmall: return "ConcentrationTooSmall";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kStaleCache: return "StaleCache";
    case ErrorKind::kTimeTooSmall: return "TimeTooSmall";
    case ErrorKind::kAngleOutOfRange: return "AngleOutOfRange";
    case ErrorKind::kSizeMismatch: return "SizeMismatch";
    case ErrorKind::kCostOverflow: return "CostOverflow";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kUnknownTarget: return "UnknownTarget";
    case ErrorKind::kInvalidRotation: return "InvalidRotation";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIO: return "IOFailure";
    case ErrorKind::kParse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace se3lab
