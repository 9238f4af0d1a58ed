#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace platewaste {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kShapeMismatch,
  kAreaMismatch,
  kEmptyInput,
  kEmptySplit,
  kZeroBenchmark,
  kNoDefinedClasses,
  kInvalidConfig,
  kParseError,
  kMissingFile,
  kFormatError,
  kLabelOutOfRange,
  kTooFewEntries,
  kInfeasibleSpec,
  kDivergence,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

// Single exception type for the library; the code says which contract broke.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix, for re-wrapping with more context.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace platewaste
