#include "gbcos/error.hpp"

namespace gbcos {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::Uninitialized: return "Uninitialized";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
    case ErrorCode::SeparationFailure: return "SeparationFailure";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyPairs: return "EmptyPairs";
  }
  return "Unknown";
}

}  // namespace gbcos
