#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace holder {

enum class ErrorCode {
  NonFinite,
  InvalidArgument,
  AlphaOutOfRange,
  BaseNotEven,
  GapConditionViolated,
  TolTooSmall,
  InexactBase,
  RangeTooLarge,
  NotUnitVector,
  DegenerateSpeed,
  OutOfDomain,
  ExponentOutOfRange,
  DuplicateExponents,
  DimensionMismatch,
  EmptyA,
  GammaMismatch,
  InsufficientScales,
  EvaluationFailed,
  CurveTooShort,
  EmptyMargin,
  RetryExhausted,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace holder
