#pragma once

#include <stdexcept>
#include <string>

namespace cqcovert {

enum class ErrorKind {
  NotHermitian,
  NotPSD,
  TraceNotOne,
  NotSquare,
  DimensionMismatch,
  DimensionCapExceeded,
  SupportViolation,
  SupportViolationClassical,
  InvalidPovm,
  ParseError,
  ValidationError,
  AlphaOutOfRange,
  IndexMismatch,
  WrongRegime,
  ZeroChiSquared,
  DegenerateChannel,
  AlphaOutOfRadius,
  NoLeakage,
  InvalidArgument,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can map it onto its exit-code contract.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cqcovert
