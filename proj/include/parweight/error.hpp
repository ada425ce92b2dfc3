#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parweight {

/// Failure categories raised by the numerical core. The C API folds these
/// into status codes (see parweight.h); the CLI folds them into exit codes.
enum class ErrorKind {
  InvalidArgument,
  InvalidSpace,
  InvariantViolation,
  CoverageFailure,
  CoverageMismatch,
  InadmissibleBox,
  EmptyRegion,
  EmptyFamily,
  NonpositiveWeight,
  SubsetNotContained,
  ShiftOutOfGrid,
  NoChain,
  Divergence,
  DegenerateMeasure,
  Config,
};

std::string_view to_string(ErrorKind kind);

/// True for failures that come from the numerics rather than from the input.
bool is_numeric_failure(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace parweight
