#include "platewaste/error.hpp"

namespace platewaste {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kAreaMismatch: return "AreaMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptySplit: return "EmptySplit";
    case ErrorCode::kZeroBenchmark: return "ZeroBenchmark";
    case ErrorCode::kNoDefinedClasses: return "NoDefinedClasses";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kTooFewEntries: return "TooFewEntries";
    case ErrorCode::kInfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace platewaste
