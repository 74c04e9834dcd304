#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmq {

enum class Errc {
  NotSquare,
  NegativeOffDiagonal,
  RowSumNonzero,
  Reducible,
  SingularBeyondNullspace,
  RhsNotOrthogonal,
  SolveFailed,
  InvalidArgument,
  WeightsNotNormalized,
  Unstable,
  EmptyProbInconsistent,
  NotCritical,
  MissingEstimate,
  TooFewSamples,
  Config,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace mmq
