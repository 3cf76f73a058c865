#include "lsmidx/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>

namespace lsmidx {

namespace {

using Key = std::pair<int, long>;

Matrix shift_matrix(int d) {
  Matrix s = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) s((k + 1) % d, k) = 1.0;
  return s;
}

Matrix clock_matrix(int d, int sign = 1) {
  Matrix c = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) c(k, k) = std::polar(1.0, sign * 2.0 * std::numbers::pi * k / d);
  return c;
}

/// Shift and clock matrices of every register; together they generate the algebra of a site.
std::vector<Matrix> site_generators(const SiteSpec& sites) {
  std::vector<Matrix> out;
  for (int q = 0; q < sites.num_registers(); ++q) {
    const int m = sites.register_dim(q);
    out.push_back(lift_to_site(sites, q, shift_matrix(m)));
    out.push_back(lift_to_site(sites, q, clock_matrix(m)));
  }
  return out;
}

bool acts_trivially_at(const QcaExpr& expr, long site, double tolerance) {
  const int d = expr.sites.dim();
  for (const Matrix& g : site_generators(expr.sites)) {
    const auto probe = LocalOperator::on_site(d, site, g);
    if (max_entry_distance(apply(expr, probe), probe) > tolerance) return false;
  }
  return true;
}

/// Sites near which gate truncations can make the automaton act nontrivially.
Window scan_range(const QcaExpr& expr) {
  const long r = std::max(expr.radius(), 1);
  long lo = 0, hi = 0;
  bool any = false;
  for (const auto& s : expr.steps) {
    const auto* l = std::get_if<BlockLayer>(&s);
    if (!l) continue;
    for (const auto& b : {l->min_site, l->max_site ? std::optional<long>(*l->max_site + 1) : std::nullopt}) {
      if (!b) continue;
      lo = any ? std::min(lo, *b) : *b;
      hi = any ? std::max(hi, *b) : *b;
      any = true;
    }
  }
  return Window{lo - r - 1, hi + r};
}

std::string key_str(const Key& k) {
  return k.second == 0 ? std::to_string(k.first) : "(" + std::to_string(k.first) + "," + std::to_string(k.second) + ")";
}

struct VEntry {
  LocalOperator gate;
  double residual = 0.0;
  long window_sites = 0;
};

/// V on exactly the window W, assuming expr acts trivially outside W.
///
/// Images of the register matrix units |x><0| determine V: the image of the
/// window unit |a><0| is their product over all factors, which equals
/// v_a v_0^dagger, so v_a is that product applied to v_0.
VEntry extract_on(const QcaExpr& expr, Window w, double tolerance) {
  const SiteSpec& sites = expr.sites;
  const int d = sites.dim();
  if (w.is_empty()) return {LocalOperator::scalar(d, 1.0), 0.0, 0};
  const Index dim = checked_dim(d, w.length());
  const int nr = sites.num_registers();

  std::vector<std::vector<Matrix>> images;  // [factor][x]
  std::vector<std::vector<Matrix>> units;   // same units embedded in the window
  for (long j = w.lo; j <= w.hi; ++j)
    for (int q = 0; q < nr; ++q) {
      const int m = sites.register_dim(q);
      images.emplace_back();
      units.emplace_back();
      for (int x = 0; x < m; ++x) {
        Matrix e = Matrix::Zero(m, m);
        e(x, 0) = 1.0;
        const auto unit = LocalOperator::on_site(d, j, lift_to_site(sites, q, e));
        const auto img = apply(expr, unit);
        if (!w.contains(img.window()))
          fail(Errc::NotInner, "image of a register matrix unit leaves the window " + w.str());
        images.back().push_back(embed(img, w).matrix());
        units.back().push_back(embed(unit, w).matrix());
      }
    }

  Matrix p0 = images.front().front();
  for (std::size_t f = 1; f < images.size(); ++f) p0 = p0 * images[f].front();
  Index col = 0;
  const double nrm = p0.colwise().norm().maxCoeff(&col);
  if (nrm < 0.5 / std::sqrt(static_cast<double>(dim))) fail(Errc::NotInner, "image of a rank-one projection is not a projection");
  const Vector v0 = p0.col(col) / nrm;
  double residual = (p0 - v0 * v0.adjoint()).cwiseAbs().maxCoeff();
  if (residual > 1e-7) fail(Errc::NotInner, "image of a rank-one projection has rank above one on " + w.str());

  Matrix v(dim, dim);
  std::vector<int> digit(images.size(), 0);
  for (Index a = 0; a < dim; ++a) {
    Vector col_a = v0;
    for (std::size_t f = images.size(); f-- > 0;)
      if (digit[f] != 0) col_a = images[f][static_cast<std::size_t>(digit[f])] * col_a;
    v.col(a) = col_a;
    for (std::size_t f = images.size(); f-- > 0;) {
      if (++digit[f] < static_cast<int>(images[f].size())) break;
      digit[f] = 0;
    }
  }
  Matrix u = polar_unitary(v);
  residual = std::max(residual, (u - v).cwiseAbs().maxCoeff());
  for (std::size_t f = 0; f < images.size(); ++f)
    for (std::size_t x = 0; x < images[f].size(); ++x)
      residual = std::max(residual, (u * units[f][x] * u.adjoint() - images[f][x]).cwiseAbs().maxCoeff());
  if (residual > tolerance) fail(Errc::NotInner, "automaton is not inner on " + w.str());

  const double threshold = 0.5 / std::sqrt(static_cast<double>(dim));
  for (Index i = 0, done = 0; i < dim && !done; ++i)
    for (Index j = 0; j < dim; ++j)
      if (std::abs(u(i, j)) > threshold) {
        u *= std::conj(u(i, j)) / std::abs(u(i, j));
        done = 1;
        break;
      }
  return {trim(LocalOperator(d, w, std::move(u))), residual, w.length()};
}

/// Scans for the support of an inner automaton and extracts V, growing the window on failure.
VEntry find_implementing_unitary(const QcaExpr& expr, double tolerance) {
  const Window range = scan_range(expr);
  const long r = std::max(expr.radius(), 1);
  if (!acts_trivially_at(expr, range.lo, tolerance) || !acts_trivially_at(expr, range.hi, tolerance))
    fail(Errc::NotIdentityOutside, "automaton acts nontrivially at the edge of " + range.str());
  Window support = Window::empty();
  for (long j = range.lo + 1; j < range.hi; ++j)
    if (!acts_trivially_at(expr, j, tolerance)) support = support.hull(Window::site(j));

  for (Window w = support;; w = w.fattened(r)) {
    try {
      return extract_on(expr, w, tolerance);
    } catch (const Error& e) {
      if (e.code() != Errc::NotInner || w.is_empty()) throw;
    }
  }
}

class OmegaEngine {
 public:
  OmegaEngine(std::function<Key(const Key&, const Key&)> mul, std::function<QcaExpr(const Key&)> make_beta,
              double tolerance, long den_cap)
      : mul_(std::move(mul)), make_beta_(std::move(make_beta)), tolerance_(tolerance), den_cap_(den_cap) {}

  const QcaExpr& beta(const Key& k) {
    auto it = betas_.find(k);
    if (it == betas_.end()) it = betas_.emplace(k, make_beta_(k)).first;
    return it->second;
  }

  void preset_v(const Key& a, const Key& b, LocalOperator gate) { vs_.insert_or_assign({a, b}, VEntry{std::move(gate), 0.0, 0}); }

  const VEntry& v(const Key& a, const Key& b) {
    auto it = vs_.find({a, b});
    if (it != vs_.end()) return it->second;
    const QcaExpr e = compose(beta(a), beta(b), invert(beta(mul_(a, b))));
    std::optional<VEntry> found;
    try {
      found = find_implementing_unitary(e, tolerance_);
    } catch (const Error& err) {
      fail(err.code(), "V(" + key_str(a) + ", " + key_str(b) + "): " + err.what());
    }
    VEntry& entry = *found;
    max_v_residual = std::max(max_v_residual, entry.residual);
    max_v_window = std::max(max_v_window, entry.window_sites);
    return vs_.emplace(std::make_pair(a, b), std::move(entry)).first->second;
  }

  SnappedPhase omega(const Key& a, const Key& b, const Key& c) {
    const SnappedPhase s = snap_phase(omega_turns(a, b, c), den_cap_);
    max_snap_error = std::max(max_snap_error, s.error);
    return s;
  }

  /// Unsnapped value in turns.
  double omega_turns(const Key& a, const Key& b, const Key& c) {
    const Key ab = mul_(a, b), bc = mul_(b, c);
    const LocalOperator& v_ab = v(a, b).gate;
    const LocalOperator& v_ab_c = v(ab, c).gate;
    const LocalOperator& v_a_bc = v(a, bc).gate;
    const LocalOperator moved = apply(beta(a), v(b, c).gate);
    const LocalOperator p = v_ab * v_ab_c * adjoint(v_a_bc) * adjoint(moved);
    const cplx lambda = normalized_trace(p);
    Matrix diff = p.matrix();
    diff.diagonal().array() -= lambda;
    const double dev = std::max(op_norm(LocalOperator(p.site_dim(), p.window(), std::move(diff))),
                                std::abs(std::abs(lambda) - 1.0));
    max_scalar_deviation = std::max(max_scalar_deviation, dev);
    if (dev > tol::phase) {
      std::ostringstream os;
      os << "cocycle product at (" << key_str(a) << ", " << key_str(b) << ", " << key_str(c)
         << ") is not a scalar, deviation " << dev;
      fail(Errc::NotScalar, os.str());
    }
    return std::arg(lambda) / (2.0 * std::numbers::pi);
  }

  long den_cap() const { return den_cap_; }

  double max_v_residual = 0.0;
  double max_scalar_deviation = 0.0;
  double max_snap_error = 0.0;
  long max_v_window = 0;

 private:
  std::function<Key(const Key&, const Key&)> mul_;
  std::function<QcaExpr(const Key&)> make_beta_;
  double tolerance_;
  long den_cap_;
  std::map<Key, QcaExpr> betas_;
  std::map<std::pair<Key, Key>, VEntry> vs_;
};

long default_den_cap(long den_cap, int order) { return den_cap > 0 ? den_cap : 12L * order * order; }

OmegaResult run_engine(OmegaEngine& engine, const std::shared_ptr<const FiniteGroup>& group) {
  const int n = group->order();
  OmegaResult res;
  res.omega = PhaseCochain(group, 3);
  res.snap_errors.assign(res.omega.size(), 0.0);
  std::vector<double> turns(res.omega.size());
  for (std::size_t i = 0; i < res.omega.size(); ++i) {
    const auto a = res.omega.args(i);
    turns[i] = engine.omega_turns({a[0], 0}, {a[1], 0}, {a[2], 0});
  }
  res.v.order = n;
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h) {
      const VEntry& e = engine.v({g, 0}, {h, 0});
      res.v.gates.push_back(e.gate);
      res.v.residuals.push_back(e.residual);
    }

  auto snap_all = [&] {
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const SnappedPhase s = snap_phase(turns[i], engine.den_cap());
      res.omega.at(i) = s.phase;
      res.snap_errors[i] = s.error;
    }
  };
  try {
    snap_all();
  } catch (const Error& e) {
    if (e.code() != Errc::SnapFailure) throw;
    // Rephase V by t = h(w) with h(w)(g,k) = -(1/|G|) sum_x w(g,k,x). Since dh + hd = id on real
    // cochains, w - dt = h(dw) and dw is integral, so the new values have denominators dividing |G|.
    std::vector<double> t(static_cast<std::size_t>(n * n), 0.0);
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto a = res.omega.args(i);
      t[static_cast<std::size_t>(a[0] * n + a[1])] -= (turns[i] - std::floor(turns[i])) / n;
    }
    auto at = [&](int g, int k) { return t[static_cast<std::size_t>(g * n + k)]; };
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto a = res.omega.args(i);
      const double dt = at(a[1], a[2]) - at(group->mul(a[0], a[1]), a[2]) + at(a[0], group->mul(a[1], a[2])) -
                        at(a[0], a[1]);
      turns[i] = turns[i] - std::floor(turns[i]) - dt;
    }
    for (int g = 0; g < n; ++g)
      for (int k = 0; k < n; ++k) res.v(g, k) = scaled(res.v(g, k), std::polar(1.0, 2.0 * std::numbers::pi * at(g, k)));
    res.gauge_averaged = true;
    snap_all();
  }
  if (!is_cocycle(res.omega)) fail(Errc::CocycleViolation, "snapped cocycle fails the pentagon identity");
  res.max_scalar_deviation = engine.max_scalar_deviation;
  res.max_v_residual = engine.max_v_residual;
  res.max_v_window = engine.max_v_window;
  return res;
}

OmegaEngine finite_engine(const std::shared_ptr<const FiniteGroup>& group, const std::vector<QcaExpr>& beta,
                          const AnomalyOptions& options) {
  if (static_cast<int>(beta.size()) != group->order())
    fail(Errc::InvalidArgument, "need one restricted automaton per group element");
  for (const auto& b : beta)
    if (b.has_shifts()) fail(Errc::ShiftsPresent, "restricted automata must be circuits");
  return OmegaEngine([group](const Key& a, const Key& b) { return Key{group->mul(a.first, b.first), 0}; },
                     [beta](const Key& k) { return beta.at(static_cast<std::size_t>(k.first)); }, options.tolerance,
                     default_den_cap(options.den_cap, group->order()));
}

QcaExpr restrict_with(const QcaExpr& expr, bool right) {
  if (expr.has_shifts()) fail(Errc::ShiftsPresent, "restriction needs a circuit; balance the shifts first");
  QcaExpr out = expr;
  for (auto& s : out.steps) {
    auto& l = std::get<BlockLayer>(s);
    if (right)
      l.min_site = std::max(l.min_site.value_or(0L), 0L);
    else
      l.max_site = std::min(l.max_site.value_or(-1L), -1L);
  }
  return out;
}

Matrix zz_quarter_phase() {
  Matrix u = Matrix::Zero(4, 4);
  const cplx p = std::polar(1.0, std::numbers::pi / 4), m = std::conj(p);
  u(0, 0) = p;
  u(1, 1) = m;
  u(2, 2) = m;
  u(3, 3) = p;
  return u;
}

}  // namespace

ActionCheck verify_action(const ActionSpec& spec, double tolerance) {
  const int n = spec.group->order();
  if (static_cast<int>(spec.map.size()) != n) fail(Errc::InvalidArgument, "action must list one automaton per element");
  int r = 0;
  for (const auto& e : spec.map) {
    if (!(e.sites == spec.sites)) fail(Errc::InvalidArgument, "automaton site space differs from the action's");
    validate_expr(e);
    r = std::max(r, e.radius());
  }
  ActionCheck out;
  out.probe = Window{-r - 1, r};
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h) {
      const double res =
          probe_residual(compose(spec.map[static_cast<std::size_t>(g)], spec.map[static_cast<std::size_t>(h)]),
                         spec.map[static_cast<std::size_t>(spec.group->mul(g, h))], out.probe);
      if (res > out.max_residual) out = {res, g, h, out.probe};
      if (res > tolerance) {
        std::ostringstream os;
        os << "map(" << g << ") o map(" << h << ") differs from map(" << spec.group->mul(g, h) << ") by " << res;
        fail(Errc::NotAHomomorphism, os.str());
      }
    }
  return out;
}

QcaExpr lift_to_stack(const QcaExpr& expr, const SiteSpec& other, bool first) {
  const SiteSpec& own = expr.sites;
  QcaExpr out(first ? own.stacked(other) : other.stacked(own));
  const int da = first ? own.dim() : other.dim();
  const int db = first ? other.dim() : own.dim();
  for (const auto& s : expr.steps) {
    if (const auto* l = std::get_if<BlockLayer>(&s)) {
      BlockLayer lifted = *l;
      for (auto& t : lifted.templates) {
        const Index pa = checked_dim(da, t.span), pb = checked_dim(db, t.span);
        const Matrix wide =
            first ? kron(t.unitary, Matrix::Identity(pb, pb)) : kron(Matrix::Identity(pa, pa), t.unitary);
        std::vector<int> dims(static_cast<std::size_t>(2 * t.span));
        std::vector<int> perm(dims.size());
        for (int k = 0; k < t.span; ++k) {
          dims[static_cast<std::size_t>(k)] = da;
          dims[static_cast<std::size_t>(t.span + k)] = db;
          perm[static_cast<std::size_t>(2 * k)] = k;
          perm[static_cast<std::size_t>(2 * k + 1)] = t.span + k;
        }
        t.unitary = permute_factors(wide, dims, perm);
      }
      out.steps.emplace_back(std::move(lifted));
    } else {
      ShiftPrimitive sh = std::get<ShiftPrimitive>(s);
      if (!first) sh.register_index += other.num_registers();
      out.steps.emplace_back(sh);
    }
  }
  return out;
}

ActionSpec stack_actions(const ActionSpec& a, const ActionSpec& b) {
  if (a.group->order() != b.group->order() || a.group->table() != b.group->table())
    fail(Errc::InvalidArgument, "stacked actions must share the group");
  ActionSpec out{a.group, a.sites.stacked(b.sites), {}};
  for (std::size_t g = 0; g < a.map.size(); ++g)
    out.map.push_back(compose(lift_to_stack(a.map[g], b.sites, true), lift_to_stack(b.map.at(g), a.sites, false)));
  return out;
}

QcaExpr stack_neutralize_expr(const QcaExpr& expr) {
  const int nr = expr.sites.num_registers();
  std::vector<long> net(static_cast<std::size_t>(nr), 0);
  for (const auto& s : expr.steps)
    if (const auto* sh = std::get_if<ShiftPrimitive>(&s)) net[static_cast<std::size_t>(sh->register_index)] += sh->displacement;
  QcaExpr out = lift_to_stack(expr, expr.sites, true);
  for (int q = 0; q < nr; ++q)
    if (net[static_cast<std::size_t>(q)] != 0) out.steps.emplace_back(ShiftPrimitive{nr + q, -net[static_cast<std::size_t>(q)]});
  return balance_shifts(out);
}

Neutralized stack_neutralize(const ActionSpec& spec) {
  const bool all_zero =
      std::all_of(spec.map.begin(), spec.map.end(), [](const QcaExpr& e) { return is_zero(gnvw_symbolic(e)); });
  Neutralized out{spec, !all_zero};
  if (all_zero) {
    for (auto& e : out.spec.map)
      if (e.has_shifts()) e = balance_shifts(e);
    return out;
  }
  out.spec.sites = spec.sites.stacked(spec.sites);
  out.spec.map.clear();
  for (const auto& e : spec.map) out.spec.map.push_back(stack_neutralize_expr(e));
  return out;
}

QcaExpr restrict_right(const QcaExpr& expr) { return restrict_with(expr, true); }
QcaExpr restrict_left(const QcaExpr& expr) { return restrict_with(expr, false); }

LocalOperator extract_implementing_unitary(const QcaExpr& expr, Window hint, double tolerance) {
  const long r = std::max(expr.radius(), 1);
  const Window outer = hint.is_empty() ? Window{-r, r} : hint.fattened(r);
  for (long j = outer.lo; j <= outer.hi; ++j)
    if (!hint.contains(j) && !acts_trivially_at(expr, j, tolerance))
      fail(Errc::NotIdentityOutside, "automaton acts nontrivially at site " + std::to_string(j) + " outside " + hint.str());
  return extract_on(expr, hint, tolerance).gate;
}

SnappedPhase snap_phase(double turns, long den_cap) {
  if (!std::isfinite(turns)) fail(Errc::SnapFailure, "phase is not finite");
  turns -= std::floor(turns);
  for (long q = 1; q <= den_cap; ++q) {
    const double p = std::round(turns * static_cast<double>(q));
    const double err = std::abs(turns - p / static_cast<double>(q));
    if (err <= tol::phase) return {Phase(static_cast<std::int64_t>(p), q), 2.0 * std::numbers::pi * err};
  }
  std::ostringstream os;
  os.precision(12);
  os << "no rational with denominator at most " << den_cap << " within tolerance of " << turns;
  fail(Errc::SnapFailure, os.str());
}

std::vector<QcaExpr> restrict_action(const ActionSpec& spec, const AnomalyOptions& options) {
  std::vector<QcaExpr> out;
  for (const auto& e : spec.map) out.push_back(restrict_with(e, !options.left_restriction));
  return out;
}

OmegaResult omega_from_restriction(std::shared_ptr<const FiniteGroup> group, const std::vector<QcaExpr>& beta,
                                   const AnomalyOptions& options) {
  OmegaEngine engine = finite_engine(group, beta, options);
  return run_engine(engine, group);
}

OmegaResult omega_from_vtable(std::shared_ptr<const FiniteGroup> group, const std::vector<QcaExpr>& beta,
                              const VTable& v, const AnomalyOptions& options) {
  OmegaEngine engine = finite_engine(group, beta, options);
  const int n = group->order();
  if (v.order != n || static_cast<int>(v.gates.size()) != n * n) fail(Errc::InvalidArgument, "V table size mismatch");
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h) engine.preset_v({g, 0}, {h, 0}, v(g, h));
  return run_engine(engine, group);
}

OmegaResult omega_cocycle(const ActionSpec& spec, const AnomalyOptions& options) {
  for (const auto& e : spec.map)
    if (!is_zero(gnvw_symbolic(e))) fail(Errc::NonZeroIndex, "neutralize the index before computing the cocycle");
  return omega_from_restriction(spec.group, restrict_action(spec, options), options);
}

const char* verdict_name(Verdict v) { return v == Verdict::Anomalous ? "Anomalous" : "NonAnomalous"; }

std::string AnomalyReport::statement() const {
  if (verdict == Verdict::Anomalous) return "no G-invariant gapped ground state possible";
  return "anomaly index vanishes; no obstruction to G-invariant gapped ground states";
}

AnomalyReport anomaly_class(const ActionSpec& spec, const AnomalyOptions& options) {
  AnomalyReport rep;
  rep.action = verify_action(spec, options.tolerance);
  for (const auto& e : spec.map) rep.gnvw.push_back(gnvw_numeric(e).index);
  const Neutralized neutral = stack_neutralize(spec);
  rep.stacked = neutral.stacked;
  rep.omega = omega_cocycle(neutral.spec, options);
  rep.cohomology = cohomology(spec.group, 3);
  rep.cls = class_of(rep.omega.omega, rep.cohomology);
  rep.verdict = rep.cls.is_zero() ? Verdict::NonAnomalous : Verdict::Anomalous;
  return rep;
}

void ProjectiveRep::validate() const {
  if (!group) fail(Errc::InvalidArgument, "representation has no group");
  if (static_cast<int>(matrices.size()) != group->order())
    fail(Errc::InvalidArgument, "representation needs one matrix per group element");
  const Index m = matrices.front().rows();
  if (m < 1) fail(Errc::InvalidArgument, "representation matrices must be nonempty");
  for (std::size_t g = 0; g < matrices.size(); ++g) {
    if (matrices[g].rows() != m || matrices[g].cols() != m)
      fail(Errc::InvalidArgument, "representation matrix " + std::to_string(g) + " has the wrong shape");
    if (!is_unitary(matrices[g])) fail(Errc::NotUnitary, "representation matrix " + std::to_string(g) + " is not unitary");
  }
  if ((matrices.front() - Matrix::Identity(m, m)).cwiseAbs().maxCoeff() > tol::automorphism)
    fail(Errc::NotProjective, "identity element is not represented by the identity matrix");
}

PhaseCochain projective_cocycle(const ProjectiveRep& rep, long den_cap) {
  rep.validate();
  const int n = rep.group->order();
  den_cap = default_den_cap(den_cap, n);
  PhaseCochain rho(rep.group, 2);
  for (int g = 0; g < n; ++g)
    for (int h = 0; h < n; ++h) {
      const Matrix p = rep.matrices[static_cast<std::size_t>(rep.group->mul(g, h))] *
                       (rep.matrices[static_cast<std::size_t>(g)] * rep.matrices[static_cast<std::size_t>(h)]).adjoint();
      const cplx lambda = p.trace() / static_cast<double>(p.rows());
      Matrix diff = p;
      diff.diagonal().array() -= lambda;
      if (diff.cwiseAbs().maxCoeff() > tol::automorphism || std::abs(std::abs(lambda) - 1.0) > tol::automorphism)
        fail(Errc::NotProjective,
             "pi(" + std::to_string(g) + ") pi(" + std::to_string(h) + ") is not proportional to pi(gh)");
      rho({g, h}) = snap_phase(std::arg(lambda) / (2.0 * std::numbers::pi), den_cap).phase;
    }
  if (!is_cocycle(rho)) fail(Errc::CocycleViolation, "snapped projective phases are not a 2-cocycle");
  return rho;
}

QcaExpr lsm_element(const ProjectiveRep& rep, int g, long n) {
  QcaExpr e(SiteSpec({rep.dim()}));
  e.steps.emplace_back(onsite_layer(rep.matrices.at(static_cast<std::size_t>(g))));
  if (n != 0) e.steps.emplace_back(ShiftPrimitive{0, n});
  return e;
}

LsmReport lsm_pipeline(const ProjectiveRep& rep, const AnomalyOptions& options) {
  LsmReport out;
  out.rho = projective_cocycle(rep, options.den_cap);
  const auto g0 = rep.group;
  const int order = g0->order();
  out.h2 = cohomology(g0, 2);
  out.rho_class = class_of(out.rho, out.h2);

  for (int g = 0; g < order; ++g)
    for (long n = 0; n <= 1; ++n)
      for (int h = 0; h < order; ++h)
        for (long m = 0; m <= 1; ++m) {
          const QcaExpr lhs = compose(lsm_element(rep, g, n), lsm_element(rep, h, m));
          const QcaExpr rhs = lsm_element(rep, g0->mul(g, h), n + m);
          const long r = std::max(lhs.radius(), rhs.radius());
          const double res = probe_residual(lhs, rhs, Window{-r - 1, r});
          out.max_action_residual = std::max(out.max_action_residual, res);
          if (res > options.tolerance)
            fail(Errc::NotAHomomorphism, "translation-invariant action fails the group law by " + std::to_string(res));
        }

  const bool right = !options.left_restriction;
  OmegaEngine engine(
      [g0](const Key& a, const Key& b) { return Key{g0->mul(a.first, b.first), a.second + b.second}; },
      [&rep, right](const Key& k) { return restrict_with(stack_neutralize_expr(lsm_element(rep, k.first, k.second)), right); },
      options.tolerance, default_den_cap(options.den_cap, order));

  out.slant = slant_z(
      [&](const ProductElement& a, const ProductElement& b, const ProductElement& c) -> std::optional<Phase> {
        if (a.n < 0 || b.n < 0 || c.n < 0) return std::nullopt;
        const SnappedPhase s = engine.omega({a.g, a.n}, {b.g, b.n}, {c.g, c.n});
        out.samples.push_back({{a, b, c}, s});
        return s.phase;
      },
      g0);
  if (!is_cocycle(out.slant)) fail(Errc::CocycleViolation, "slant product is not a 2-cocycle");
  out.slant_class = class_of(out.slant, out.h2);
  out.classes_equal = out.slant_class == out.rho_class;
  out.mixed_anomaly = !out.slant_class.is_zero();
  out.max_scalar_deviation = engine.max_scalar_deviation;
  out.max_v_residual = engine.max_v_residual;
  out.max_snap_error = engine.max_snap_error;
  out.max_v_window = engine.max_v_window;
  return out;
}

namespace presets {

ActionSpec levin_gu_z2() {
  const SiteSpec sites({2});
  QcaExpr gamma(sites);
  gamma.steps.emplace_back(onsite_layer(pauli::X()));
  gamma.steps.emplace_back(onsite_layer(pauli::Z()));
  for (long anchor : {0L, 1L}) {
    BlockLayer l;
    l.period = 2;
    l.templates.push_back({anchor, 2, zz_quarter_phase()});
    gamma.steps.emplace_back(std::move(l));
  }
  auto group = std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2));
  return ActionSpec{group, sites, {identity_expr(sites), gamma}};
}

ActionSpec onsite(std::shared_ptr<const FiniteGroup> group, const std::vector<Matrix>& rep) {
  if (rep.empty()) fail(Errc::InvalidArgument, "empty representation");
  const SiteSpec sites({static_cast<int>(rep.front().rows())});
  ActionSpec spec{std::move(group), sites, {}};
  for (const auto& m : rep) {
    QcaExpr e(sites);
    if (!m.isIdentity(tol::algebraic)) e.steps.emplace_back(onsite_layer(m));
    spec.map.push_back(std::move(e));
  }
  return spec;
}

ActionSpec onsite_z2_flip() {
  return onsite(std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2)), {pauli::I(), pauli::X()});
}

ProjectiveRep pauli_z2xz2() {
  ProjectiveRep rep;
  rep.group = std::make_shared<const FiniteGroup>(FiniteGroup::product(FiniteGroup::cyclic(2), FiniteGroup::cyclic(2)));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Matrix m = pauli::I();
      if (a) m = m * pauli::X();
      if (b) m = m * pauli::Z();
      rep.matrices.push_back(m);
    }
  return rep;
}

ProjectiveRep weyl(int n) {
  if (n < 2) fail(Errc::InvalidArgument, "clock and shift matrices need n >= 2");
  ProjectiveRep rep;
  rep.group = std::make_shared<const FiniteGroup>(FiniteGroup::product(FiniteGroup::cyclic(n), FiniteGroup::cyclic(n)));
  const Matrix x = shift_matrix(n), z = clock_matrix(n, -1);
  Matrix xa = Matrix::Identity(n, n);
  for (int a = 0; a < n; ++a, xa = xa * x) {
    Matrix zb = Matrix::Identity(n, n);
    for (int b = 0; b < n; ++b, zb = zb * z) rep.matrices.push_back(xa * zb);
  }
  return rep;
}

ProjectiveRep z2_flip() {
  return ProjectiveRep{std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2)), {pauli::I(), pauli::X()}};
}

}  // namespace presets

}  // namespace lsmidx
