#pragma once

#include <stdexcept>
#include <string>

namespace lsmidx {

/// Every failure the library reports carries one of these codes.
enum class Errc {
  // operator windows
  WindowMismatch,
  WindowCapExceeded,
  InvalidArgument,
  NotUnitary,
  OverlappingGates,
  // qca
  NonSquareRatio,
  IndexMismatch,
  NonZeroIndex,
  UnpairableShifts,
  ShiftsPresent,
  // grpcoh
  DegreeCap,
  MatrixCap,
  NotACocycle,
  EvaluatorDomain,
  // anomaly
  NotAHomomorphism,
  NotInner,
  NotIdentityOutside,
  NotScalar,
  SnapFailure,
  CocycleViolation,
  NotProjective,
  // spectra
  SizeCap,
  NoConvergence,
  // cli
  ParseError,
  ValidationError,
  IoError,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Failure classes used for CLI exit codes.
enum class Severity {
  Validation,  // bad input: exit 1
  Pipeline,    // computation could not complete: exit 2
  Internal,    // an invariant that should always hold did not: exit 3
};

Severity severity(Errc code) noexcept;

[[noreturn]] void fail(Errc code, const std::string& message);

}  // namespace lsmidx
