#include "rdfl/error.hpp"

namespace rdfl {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kSingularKkt: return "SingularKKT";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kUnstableEquilibrium: return "UnstableEquilibrium";
    case ErrorCode::kWorldModelDiverges: return "WorldModelDiverges";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kTooManySkipped: return "TooManySkipped";
  }
  return "Unknown";
}

}  // namespace rdfl
