#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fishline {

enum class ErrorCode {
  kOutOfValidRange,
  kNonMonotonic,
  kInvalidModel,
  kOutOfBounds,
  kDimensionMismatch,
  kNonPositiveUncertainty,
  kEmptyMask,
  kDegenerateInput,
  kDivergedModel,
  kSamplingExhausted,
  kParse,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Whether a failure stems from the distortion model itself (as opposed to
// malformed or insufficient data). The CLI maps this onto its exit codes.
bool IsModelError(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fishline
