#pragma once

// Quantum cellular automata presented as ordered lists of translation-invariant
// gate layers and register shifts.
//
// Steps are applied to observables in list order: apply(e, A) = s_n(... s_1(A)).
// A right shift (positive displacement) of a register of dimension m carries
// index +log m.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lsmidx/opwin.hpp"

namespace lsmidx {

/// One gate of a layer, repeated at anchor + k * period for every integer k.
struct GateTemplate {
  long anchor = 0;
  int span = 1;
  Matrix unitary;
};

struct BlockLayer {
  int period = 1;
  std::vector<GateTemplate> templates;
  /// Optional bounds: a gate copy is kept only when its whole window lies inside.
  std::optional<long> min_site;
  std::optional<long> max_site;

  int radius() const;
};

struct ShiftPrimitive {
  int register_index = 0;
  long displacement = 0;
};

using QcaStep = std::variant<BlockLayer, ShiftPrimitive>;

struct QcaExpr {
  explicit QcaExpr(SiteSpec s) : sites(std::move(s)) {}
  QcaExpr(SiteSpec s, std::vector<QcaStep> st) : sites(std::move(s)), steps(std::move(st)) {}

  SiteSpec sites;
  std::vector<QcaStep> steps;

  int radius() const;
  bool has_shifts() const;
};

/// prime -> exponent; zero exponents are never stored.
using PrimeLog = std::map<int, long>;

PrimeLog prime_factors(long n);
PrimeLog operator+(const PrimeLog& a, const PrimeLog& b);
PrimeLog operator-(const PrimeLog& a);
bool is_zero(const PrimeLog& p);
std::string to_string(const PrimeLog& p);

/// Window of the gate copy `copy` of template `t`.
Window gate_window(const BlockLayer& layer, std::size_t t, long copy);

/// Checks unitarity, shapes, and that overlapping gate copies touch disjoint
/// (site, register) factors.
void validate_layer(const BlockLayer& layer, const SiteSpec& sites);
void validate_expr(const QcaExpr& expr);

/// Treats each site as a single register.
LocalOperator apply_layer(const BlockLayer& layer, const LocalOperator& op);
/// Skips gates that stick out of the operator window without touching a factor it acts on.
LocalOperator apply_layer(const BlockLayer& layer, const SiteSpec& sites, const LocalOperator& op);
LocalOperator apply_shift(const ShiftPrimitive& shift, const SiteSpec& sites, const LocalOperator& op);
LocalOperator apply(const QcaExpr& expr, const LocalOperator& op);

/// apply(compose(a, b), A) == apply(a, apply(b, A)).
QcaExpr compose(const QcaExpr& a, const QcaExpr& b);
QcaExpr compose(const QcaExpr& a, const QcaExpr& b, const QcaExpr& c);
QcaExpr invert(const QcaExpr& e);
QcaExpr identity_expr(const SiteSpec& sites);

/// Largest Frobenius distance between apply(a, E) and apply(b, E) over
/// register matrix units E on the sites of `window`. These generate each
/// site algebra, so a zero residual means a == b there.
double probe_residual(const QcaExpr& a, const QcaExpr& b, Window window);

PrimeLog gnvw_symbolic(const QcaExpr& expr);

struct GnvwNumeric {
  PrimeLog index;
  Index dim_right = 0;
  Index dim_left = 0;
  int radius = 0;
};

/// Dimension of the algebra generated by the coefficient operators of `gens`
/// on the sites of `part`.
Index support_algebra_dim(const std::vector<LocalOperator>& gens, Window part);

/// Numeric index from support algebras across the cut between sites -1 and 0.
/// Throws IndexMismatch when it disagrees with gnvw_symbolic.
GnvwNumeric gnvw_numeric(const QcaExpr& expr);

/// Replaces all shifts of a zero-index expression by swap circuits.
QcaExpr balance_shifts(const QcaExpr& expr);

// Layer builders.

/// Matrix acting as `m` on register `reg` and as the identity on the other registers.
Matrix lift_to_site(const SiteSpec& sites, int reg, const Matrix& m);
/// Same gate on every site.
BlockLayer onsite_layer(const Matrix& site_gate);
/// On-site swap of two registers of equal dimension.
Matrix register_swap(const SiteSpec& sites, int a, int b);
/// Two-site gate on (j-1, j) swapping register `b` at j-1 with register `a` at j.
Matrix staggered_swap(const SiteSpec& sites, int a, int b);

}  // namespace lsmidx
