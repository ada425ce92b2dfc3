#include "parweight/error.hpp"

namespace parweight {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidSpace: return "InvalidSpace";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::CoverageFailure: return "CoverageFailure";
    case ErrorKind::CoverageMismatch: return "CoverageMismatch";
    case ErrorKind::InadmissibleBox: return "InadmissibleBox";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::EmptyFamily: return "EmptyFamily";
    case ErrorKind::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorKind::SubsetNotContained: return "SubsetNotContained";
    case ErrorKind::ShiftOutOfGrid: return "ShiftOutOfGrid";
    case ErrorKind::NoChain: return "NoChain";
    case ErrorKind::Divergence: return "Divergence";
    case ErrorKind::DegenerateMeasure: return "DegenerateMeasure";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

bool is_numeric_failure(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CoverageFailure:
    case ErrorKind::CoverageMismatch:
    case ErrorKind::InvariantViolation:
    case ErrorKind::NoChain:
    case ErrorKind::Divergence:
    case ErrorKind::DegenerateMeasure:
      return true;
    default:
      return false;
  }
}

}  // namespace parweight
