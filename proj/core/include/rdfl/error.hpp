#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdfl {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kDimensionMismatch,
  kSingularMatrix,
  kSingularKkt,
  kInfeasible,
  kInfeasibleSpec,
  kMaxIterations,
  kNotConverged,
  kUnstableEquilibrium,
  kWorldModelDiverges,
  kParseError,
  kIoError,
  kConfigError,
  kTooManySkipped,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library. The code is stable and is what the
/// CLI reports in its error JSON; the message carries context.
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

inline void require(bool condition, ErrorCode code, const char* message) {
  if (!condition) throw Error(code, message);
}

}  // namespace rdfl
