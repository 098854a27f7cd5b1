#include "holder/error.hpp"

namespace holder {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::BaseNotEven: return "BaseNotEven";
    case ErrorCode::GapConditionViolated: return "GapConditionViolated";
    case ErrorCode::TolTooSmall: return "TolTooSmall";
    case ErrorCode::InexactBase: return "InexactBase";
    case ErrorCode::RangeTooLarge: return "RangeTooLarge";
    case ErrorCode::NotUnitVector: return "NotUnitVector";
    case ErrorCode::DegenerateSpeed: return "DegenerateSpeed";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
    case ErrorCode::DuplicateExponents: return "DuplicateExponents";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyA: return "EmptyA";
    case ErrorCode::GammaMismatch: return "GammaMismatch";
    case ErrorCode::InsufficientScales: return "InsufficientScales";
    case ErrorCode::EvaluationFailed: return "EvaluationFailed";
    case ErrorCode::CurveTooShort: return "CurveTooShort";
    case ErrorCode::EmptyMargin: return "EmptyMargin";
    case ErrorCode::RetryExhausted: return "RetryExhausted";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace holder
