#include "fishline/error.h"

namespace fishline {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfValidRange:
      return "OutOfValidRange";
    case ErrorCode::kNonMonotonic:
      return "NonMonotonic";
    case ErrorCode::kInvalidModel:
      return "InvalidModel";
    case ErrorCode::kOutOfBounds:
      return "OutOfBounds";
    case ErrorCode::kDimensionMismatch:
      return "DimensionMismatch";
    case ErrorCode::kNonPositiveUncertainty:
      return "NonPositiveUncertainty";
    case ErrorCode::kEmptyMask:
      return "EmptyMask";
    case ErrorCode::kDegenerateInput:
      return "DegenerateInput";
    case ErrorCode::kDivergedModel:
      return "DivergedModel";
    case ErrorCode::kSamplingExhausted:
      return "SamplingExhausted";
    case ErrorCode::kParse:
      return "ParseError";
    case ErrorCode::kIo:
      return "IoError";
  }
  return "Unknown";
}

bool IsModelError(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOutOfValidRange:
    case ErrorCode::kNonMonotonic:
    case ErrorCode::kInvalidModel:
    case ErrorCode::kDivergedModel:
    case ErrorCode::kSamplingExhausted:
      return true;
    default:
      return false;
  }
}

}  // namespace fishline
