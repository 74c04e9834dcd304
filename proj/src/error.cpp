#include "mmq/error.hpp"

namespace mmq {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case Errc::RowSumNonzero: return "RowSumNonzero";
    case Errc::Reducible: return "Reducible";
    case Errc::SingularBeyondNullspace: return "SingularBeyondNullspace";
    case Errc::RhsNotOrthogonal: return "RhsNotOrthogonal";
    case Errc::SolveFailed: return "SolveFailed";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::WeightsNotNormalized: return "WeightsNotNormalized";
    case Errc::Unstable: return "Unstable";
    case Errc::EmptyProbInconsistent: return "EmptyProbInconsistent";
    case Errc::NotCritical: return "NotCritical";
    case Errc::MissingEstimate: return "MissingEstimate";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

}  // namespace mmq
