#pragma once

// Anomaly index of a finite group acting on a chain by automata.
//
// Pipeline: verify the action, neutralize the index by stacking with the
// inverse translations, restrict each element to a half-chain by gate
// truncation, extract the unitaries V(g,h) implementing the failure of the
// restriction to be a homomorphism, and read off the phase-valued 3-cocycle
//   w(g1,g2,g3) = V(g1,g2) V(g1g2,g3) V(g1,g2g3)^-1 [b(g1)(V(g2,g3))]^-1.

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lsmidx/grpcoh.hpp"
#include "lsmidx/opwin.hpp"
#include "lsmidx/qca.hpp"

namespace lsmidx {

struct ActionSpec {
  std::shared_ptr<const FiniteGroup> group;
  SiteSpec sites;
  /// Automaton of each group element, indexed by element label.
  std::vector<QcaExpr> map;
};

struct ActionCheck {
  double max_residual = 0.0;
  int worst_g = 0;
  int worst_h = 0;
  Window probe;
};

/// Checks map(g) o map(h) == map(gh) on single-site matrix units of a probe
/// window of width 2 * radius + 2. Throws NotAHomomorphism.
ActionCheck verify_action(const ActionSpec& spec, double tolerance = tol::automorphism);

/// Embeds an automaton on `sites` as the first (or second) factor of the
/// stacked site space sites.stacked(other) (or other.stacked(sites)).
QcaExpr lift_to_stack(const QcaExpr& expr, const SiteSpec& other, bool first);

/// Tensor product g -> a(g) (x) b(g) of two actions of the same group.
ActionSpec stack_actions(const ActionSpec& a, const ActionSpec& b);

/// a (x) t^-1 with t the net register shifts of a, with shifts replaced by swap circuits.
QcaExpr stack_neutralize_expr(const QcaExpr& expr);

struct Neutralized {
  ActionSpec spec;
  bool stacked = false;
};

/// Unchanged (shifts balanced) when every index vanishes, otherwise the
/// elementwise stacked action.
Neutralized stack_neutralize(const ActionSpec& spec);

/// Keeps only gate copies inside [0, inf). Throws ShiftsPresent.
QcaExpr restrict_right(const QcaExpr& expr);
/// Keeps only gate copies inside (-inf, -1]. Throws ShiftsPresent.
QcaExpr restrict_left(const QcaExpr& expr);

/// Unitary V with Ad_V == expr, supported in `hint`, gauge fixed so that the
/// first entry of modulus above 0.5/sqrt(dim) in row-major order is positive.
/// The result is trimmed. Throws NotIdentityOutside or NotInner.
LocalOperator extract_implementing_unitary(const QcaExpr& expr, Window hint, double tolerance = tol::automorphism);

struct AnomalyOptions {
  double tolerance = tol::automorphism;
  /// Largest denominator accepted when snapping phases; 0 selects 12 |G|^2.
  long den_cap = 0;
  bool left_restriction = false;
};

struct SnappedPhase {
  Phase phase;
  /// |measured - snapped| in radians.
  double error = 0.0;
};

/// Smallest-denominator rational within 1e-6 turns of `turns`. Throws SnapFailure.
SnappedPhase snap_phase(double turns, long den_cap);

struct VTable {
  int order = 0;
  /// Entry g * order + h.
  std::vector<LocalOperator> gates;
  std::vector<double> residuals;

  const LocalOperator& operator()(int g, int h) const { return gates.at(static_cast<std::size_t>(g * order + h)); }
  LocalOperator& operator()(int g, int h) { return gates.at(static_cast<std::size_t>(g * order + h)); }
};

struct OmegaResult {
  PhaseCochain omega;
  /// Radians, indexed like omega.
  std::vector<double> snap_errors;
  VTable v;
  double max_scalar_deviation = 0.0;
  double max_v_residual = 0.0;
  long max_v_window = 0;
  /// True when V was rephased by the group average because the raw phases were not rational.
  bool gauge_averaged = false;
};

/// Restriction of every element (right half-chain unless options say otherwise).
std::vector<QcaExpr> restrict_action(const ActionSpec& spec, const AnomalyOptions& options = {});

/// Cocycle from explicit restrictions; V is extracted numerically.
OmegaResult omega_from_restriction(std::shared_ptr<const FiniteGroup> group, const std::vector<QcaExpr>& beta,
                                   const AnomalyOptions& options = {});

/// Cocycle from explicit restrictions and a fixed V table.
OmegaResult omega_from_vtable(std::shared_ptr<const FiniteGroup> group, const std::vector<QcaExpr>& beta,
                              const VTable& v, const AnomalyOptions& options = {});

/// Requires every index to vanish already.
OmegaResult omega_cocycle(const ActionSpec& spec, const AnomalyOptions& options = {});

enum class Verdict { Anomalous, NonAnomalous };

const char* verdict_name(Verdict v);

struct AnomalyReport {
  std::vector<PrimeLog> gnvw;
  bool stacked = false;
  ActionCheck action;
  OmegaResult omega;
  CohomologyGroup cohomology;
  ClassCoords cls;
  Verdict verdict = Verdict::NonAnomalous;

  /// One-line consequence of the verdict.
  std::string statement() const;
};

AnomalyReport anomaly_class(const ActionSpec& spec, const AnomalyOptions& options = {});

struct ProjectiveRep {
  std::shared_ptr<const FiniteGroup> group;
  std::vector<Matrix> matrices;

  int dim() const { return matrices.empty() ? 0 : static_cast<int>(matrices.front().rows()); }
  /// Checks shapes, unitarity and pi(e) == I. Projectivity is checked by projective_cocycle.
  void validate() const;
};

/// rho(g,h) with pi(gh) = e^{2 pi i rho(g,h)} pi(g) pi(h). Throws NotProjective.
PhaseCochain projective_cocycle(const ProjectiveRep& rep, long den_cap = 0);

struct OmegaSample {
  ProductElement args[3];
  SnappedPhase value;
};

struct LsmReport {
  PhaseCochain rho;
  ClassCoords rho_class;
  PhaseCochain slant;
  ClassCoords slant_class;
  CohomologyGroup h2;
  bool classes_equal = false;
  bool mixed_anomaly = false;
  std::vector<OmegaSample> samples;
  double max_action_residual = 0.0;
  double max_scalar_deviation = 0.0;
  double max_v_residual = 0.0;
  double max_snap_error = 0.0;
  long max_v_window = 0;
};

/// Unstacked action (g, n) -> t^n o prod_j Ad_{pi_j(g)} of G0 x Z.
QcaExpr lsm_element(const ProjectiveRep& rep, int g, long n);

/// Mixed anomaly of the translation-invariant chain carrying `rep` on every site.
LsmReport lsm_pipeline(const ProjectiveRep& rep, const AnomalyOptions& options = {});

namespace presets {

/// Z/2 = {1, -1} with -1 acting by prod e^{i pi/4 Z_j Z_{j+1}} prod Z_j prod X_j.
ActionSpec levin_gu_z2();
/// On-site action of a linear representation.
ActionSpec onsite(std::shared_ptr<const FiniteGroup> group, const std::vector<Matrix>& rep);
/// Z/2 acting by prod X_j.
ActionSpec onsite_z2_flip();

/// Z/2 x Z/2 with pi(a, b) = X^a Z^b.
ProjectiveRep pauli_z2xz2();
/// Z/n x Z/n clock and shift matrices with rho((a,b),(a',b')) = a' b / n.
ProjectiveRep weyl(int n);
/// Z/2 with pi(1) = X.
ProjectiveRep z2_flip();

}  // namespace presets

}  // namespace lsmidx
