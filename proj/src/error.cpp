#include "lsmidx/error.hpp"

namespace lsmidx {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::WindowMismatch: return "WindowMismatch";
    case Errc::WindowCapExceeded: return "WindowCapExceeded";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NotUnitary: return "NotUnitary";
    case Errc::OverlappingGates: return "OverlappingGates";
    case Errc::NonSquareRatio: return "NonSquareRatio";
    case Errc::IndexMismatch: return "IndexMismatch";
    case Errc::NonZeroIndex: return "NonZeroIndex";
    case Errc::UnpairableShifts: return "UnpairableShifts";
    case Errc::ShiftsPresent: return "ShiftsPresent";
    case Errc::DegreeCap: return "DegreeCap";
    case Errc::MatrixCap: return "MatrixCap";
    case Errc::NotACocycle: return "NotACocycle";
    case Errc::EvaluatorDomain: return "EvaluatorDomain";
    case Errc::NotAHomomorphism: return "NotAHomomorphism";
    case Errc::NotInner: return "NotInner";
    case Errc::NotIdentityOutside: return "NotIdentityOutside";
    case Errc::NotScalar: return "NotScalar";
    case Errc::SnapFailure: return "SnapFailure";
    case Errc::CocycleViolation: return "CocycleViolation";
    case Errc::NotProjective: return "NotProjective";
    case Errc::SizeCap: return "SizeCap";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

Severity severity(Errc code) noexcept {
  switch (code) {
    case Errc::ParseError:
    case Errc::ValidationError:
    case Errc::InvalidArgument:
    case Errc::NotUnitary:
    case Errc::OverlappingGates:
    case Errc::NotProjective:
    case Errc::NotAHomomorphism:
      return Severity::Validation;
    case Errc::CocycleViolation:
    case Errc::IndexMismatch:
      return Severity::Internal;
    default:
      return Severity::Pipeline;
  }
}

void fail(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace lsmidx
