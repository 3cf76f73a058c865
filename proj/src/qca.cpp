#include "lsmidx/qca.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <sstream>

namespace lsmidx {

namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long ceil_div(long a, long b) { return -floor_div(-a, b); }

Index ipow(int base, long exp) {
  Index r = 1;
  for (long i = 0; i < exp; ++i) r *= base;
  return r;
}

/// Factor dimensions of a window: sites left to right, registers in order.
std::vector<int> factor_dims(const SiteSpec& sites, long length) {
  std::vector<int> dims;
  dims.reserve(static_cast<std::size_t>(length * sites.num_registers()));
  for (long s = 0; s < length; ++s)
    for (int r : sites.registers()) dims.push_back(r);
  return dims;
}

/// Permutation unitary P with P|x> = |y>, y_i = x_perm[i].
Matrix permutation_unitary(const std::vector<int>& dims, const std::vector<int>& perm) {
  const std::size_t f = dims.size();
  Index n = 1;
  for (int d : dims) n *= d;
  std::vector<Index> out_stride(f, 1);
  for (std::size_t i = f; i-- > 1;) out_stride[i - 1] = out_stride[i] * dims[i];
  Matrix p = Matrix::Zero(n, n);
  std::vector<int> digit(f, 0);
  for (Index x = 0; x < n; ++x) {
    Index y = 0;
    for (std::size_t i = 0; i < f; ++i) y += digit[static_cast<std::size_t>(perm[i])] * out_stride[i];
    p(y, x) = 1.0;
    for (std::size_t k = f; k-- > 0;) {
      if (++digit[k] < dims[k]) break;
      digit[k] = 0;
    }
  }
  return p;
}

bool acts_trivially_on_factor(const Matrix& u, const std::vector<int>& dims, std::size_t f) {
  Index left = 1, right = 1;
  for (std::size_t i = 0; i < f; ++i) left *= dims[i];
  for (std::size_t i = f + 1; i < dims.size(); ++i) right *= dims[i];
  const Index mid = dims[f];
  auto at = [&](Index l, Index m, Index r, Index l2, Index m2, Index r2) {
    return u((l * mid + m) * right + r, (l2 * mid + m2) * right + r2);
  };
  for (Index l = 0; l < left; ++l)
    for (Index l2 = 0; l2 < left; ++l2)
      for (Index r = 0; r < right; ++r)
        for (Index r2 = 0; r2 < right; ++r2) {
          cplx avg = 0.0;
          for (Index m = 0; m < mid; ++m) avg += at(l, m, r, l2, m, r2);
          avg /= static_cast<double>(mid);
          for (Index m = 0; m < mid; ++m)
            for (Index m2 = 0; m2 < mid; ++m2) {
              const cplx expect = m == m2 ? avg : cplx(0.0);
              if (std::abs(at(l, m, r, l2, m2, r2) - expect) > tol::automorphism) return false;
            }
        }
  return true;
}

/// (relative site, register) factors on which the gate acts nontrivially.
std::vector<std::pair<long, int>> footprint(const GateTemplate& t, const SiteSpec& sites) {
  const auto dims = factor_dims(sites, t.span);
  std::vector<std::pair<long, int>> out;
  const int nr = sites.num_registers();
  for (std::size_t f = 0; f < dims.size(); ++f)
    if (!acts_trivially_on_factor(t.unitary, dims, f))
      out.emplace_back(static_cast<long>(f) / nr, static_cast<int>(static_cast<long>(f) % nr));
  return out;
}

bool copy_in_bounds(const BlockLayer& layer, const Window& w) {
  if (layer.min_site && w.lo < *layer.min_site) return false;
  if (layer.max_site && w.hi > *layer.max_site) return false;
  return true;
}

}  // namespace

int BlockLayer::radius() const {
  int r = 0;
  for (const auto& t : templates) r = std::max(r, t.span - 1);
  return r;
}

int QcaExpr::radius() const {
  long r = 0;
  for (const auto& s : steps) {
    if (const auto* l = std::get_if<BlockLayer>(&s))
      r += l->radius();
    else
      r += std::labs(std::get<ShiftPrimitive>(s).displacement);
  }
  return static_cast<int>(r);
}

bool QcaExpr::has_shifts() const {
  return std::any_of(steps.begin(), steps.end(),
                     [](const QcaStep& s) { return std::holds_alternative<ShiftPrimitive>(s); });
}

PrimeLog prime_factors(long n) {
  if (n < 1) fail(Errc::InvalidArgument, "prime factorization needs a positive integer");
  PrimeLog out;
  for (long p = 2; p * p <= n; ++p)
    while (n % p == 0) {
      ++out[static_cast<int>(p)];
      n /= p;
    }
  if (n > 1) ++out[static_cast<int>(n)];
  return out;
}

PrimeLog operator+(const PrimeLog& a, const PrimeLog& b) {
  PrimeLog out = a;
  for (const auto& [p, e] : b) {
    out[p] += e;
    if (out[p] == 0) out.erase(p);
  }
  return out;
}

PrimeLog operator-(const PrimeLog& a) {
  PrimeLog out;
  for (const auto& [p, e] : a) out[p] = -e;
  return out;
}

bool is_zero(const PrimeLog& p) {
  return std::all_of(p.begin(), p.end(), [](const auto& kv) { return kv.second == 0; });
}

std::string to_string(const PrimeLog& p) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  for (const auto& [prime, e] : p) {
    if (e == 0) continue;
    os << (first ? "" : ", ") << prime << ": " << e;
    first = false;
  }
  os << "}";
  return os.str();
}

Window gate_window(const BlockLayer& layer, std::size_t t, long copy) {
  const auto& g = layer.templates.at(t);
  const long lo = g.anchor + copy * layer.period;
  return {lo, lo + g.span - 1};
}

void validate_layer(const BlockLayer& layer, const SiteSpec& sites) {
  if (layer.period < 1) fail(Errc::InvalidArgument, "layer period must be positive");
  const int d = sites.dim();
  std::vector<std::vector<std::pair<long, int>>> prints;
  for (std::size_t t = 0; t < layer.templates.size(); ++t) {
    const auto& g = layer.templates[t];
    if (g.span < 1) fail(Errc::InvalidArgument, "gate span must be positive");
    const Index n = checked_dim(d, g.span);
    if (g.unitary.rows() != n || g.unitary.cols() != n)
      fail(Errc::InvalidArgument, "gate " + std::to_string(t) + " has the wrong dimension for span " +
                                      std::to_string(g.span));
    if (!is_unitary(g.unitary)) fail(Errc::NotUnitary, "gate " + std::to_string(t) + " is not unitary");
    prints.push_back(footprint(g, sites));
  }
  const long p = layer.period;
  for (std::size_t t1 = 0; t1 < layer.templates.size(); ++t1)
    for (std::size_t t2 = 0; t2 < layer.templates.size(); ++t2) {
      const Window w1 = gate_window(layer, t1, 0);
      const auto& g2 = layer.templates[t2];
      const long kmin = ceil_div(w1.lo - g2.span + 1 - g2.anchor, p);
      const long kmax = floor_div(w1.hi - g2.anchor, p);
      for (long k = kmin; k <= kmax; ++k) {
        if (t1 == t2 && k == 0) continue;
        const Window w2 = gate_window(layer, t2, k);
        for (const auto& [s1, r1] : prints[t1])
          for (const auto& [s2, r2] : prints[t2])
            if (w1.lo + s1 == w2.lo + s2 && r1 == r2)
              fail(Errc::OverlappingGates, "gate copies " + w1.str() + " and " + w2.str() +
                                               " both act on register " + std::to_string(r1) + " of site " +
                                               std::to_string(w1.lo + s1));
      }
    }
}

void validate_expr(const QcaExpr& expr) {
  for (const auto& s : expr.steps) {
    if (const auto* l = std::get_if<BlockLayer>(&s)) {
      validate_layer(*l, expr.sites);
    } else {
      const auto& sh = std::get<ShiftPrimitive>(s);
      if (sh.register_index < 0 || sh.register_index >= expr.sites.num_registers())
        fail(Errc::InvalidArgument, "shift register index out of range");
    }
  }
}

LocalOperator apply_layer(const BlockLayer& layer, const LocalOperator& op) {
  return apply_layer(layer, SiteSpec({op.site_dim()}), op);
}

LocalOperator apply_layer(const BlockLayer& layer, const SiteSpec& sites, const LocalOperator& op) {
  const Window w = op.window();
  if (w.is_empty()) return op;
  const int nr = sites.num_registers();
  std::vector<std::vector<std::pair<long, int>>> prints(nr > 1 ? layer.templates.size() : 0);
  for (std::size_t t = 0; t < prints.size(); ++t) prints[t] = footprint(layer.templates[t], sites);
  // Lazily computed: 0 unknown, 1 trivial, 2 nontrivial.
  std::vector<char> trivial;
  std::vector<int> dims;
  auto op_touches = [&](std::size_t t, const Window& gw) {
    if (dims.empty()) {
      dims = factor_dims(sites, w.length());
      trivial.assign(dims.size(), 0);
    }
    for (const auto& [rel, reg] : prints[t]) {
      const long site = gw.lo + rel;
      if (!w.contains(site)) continue;
      const auto f = static_cast<std::size_t>((site - w.lo) * nr + reg);
      if (trivial[f] == 0) trivial[f] = acts_trivially_on_factor(op.matrix(), dims, f) ? 1 : 2;
      if (trivial[f] == 2) return true;
    }
    return false;
  };

  std::vector<std::pair<std::size_t, Window>> gates;
  Window hull = w;
  for (std::size_t t = 0; t < layer.templates.size(); ++t) {
    const auto& g = layer.templates[t];
    const long kmin = ceil_div(w.lo - g.span + 1 - g.anchor, layer.period);
    const long kmax = floor_div(w.hi - g.anchor, layer.period);
    for (long k = kmin; k <= kmax; ++k) {
      const Window gw = gate_window(layer, t, k);
      if (!copy_in_bounds(layer, gw)) continue;
      // A gate sticking out of the window commutes with the operator when its footprint misses it.
      if (nr > 1 && !w.contains(gw) && !op_touches(t, gw)) continue;
      gates.emplace_back(t, gw);
      hull = hull.hull(gw);
    }
  }
  if (gates.empty()) return op;
  Matrix m = embed(op, hull).matrix();
  for (const auto& [t, gw] : gates) conjugate_in_place(m, op.site_dim(), hull, layer.templates[t].unitary, gw);
  return trim(LocalOperator(op.site_dim(), hull, std::move(m)));
}

LocalOperator apply_shift(const ShiftPrimitive& shift, const SiteSpec& sites, const LocalOperator& op) {
  const Window w = op.window();
  const long k = shift.displacement;
  if (w.is_empty() || k == 0) return op;
  const Window target = k > 0 ? Window{w.lo, w.hi + k} : Window{w.lo + k, w.hi};
  const LocalOperator big = embed(op, target);
  const long n = target.length();
  const int nr = sites.num_registers();
  const auto dims = factor_dims(sites, n);
  std::vector<int> perm(dims.size());
  for (long s = 0; s < n; ++s)
    for (int q = 0; q < nr; ++q) {
      long src = s;
      if (q == shift.register_index) src = ((s - k) % n + n) % n;
      perm[static_cast<std::size_t>(s * nr + q)] = static_cast<int>(src * nr + q);
    }
  return trim(LocalOperator(op.site_dim(), target, permute_factors(big.matrix(), dims, perm)));
}

LocalOperator apply(const QcaExpr& expr, const LocalOperator& op) {
  if (op.site_dim() != expr.sites.dim())
    fail(Errc::InvalidArgument, "operator site dimension does not match the automaton");
  LocalOperator cur = op;
  for (const auto& s : expr.steps) {
    if (const auto* l = std::get_if<BlockLayer>(&s))
      cur = apply_layer(*l, expr.sites, cur);
    else
      cur = apply_shift(std::get<ShiftPrimitive>(s), expr.sites, cur);
  }
  return cur;
}

QcaExpr compose(const QcaExpr& a, const QcaExpr& b) {
  if (!(a.sites == b.sites)) fail(Errc::InvalidArgument, "cannot compose automata on different site spaces");
  QcaExpr out(a.sites, b.steps);
  out.steps.insert(out.steps.end(), a.steps.begin(), a.steps.end());
  return out;
}

QcaExpr compose(const QcaExpr& a, const QcaExpr& b, const QcaExpr& c) { return compose(a, compose(b, c)); }

QcaExpr invert(const QcaExpr& e) {
  QcaExpr out(e.sites);
  for (auto it = e.steps.rbegin(); it != e.steps.rend(); ++it) {
    if (const auto* l = std::get_if<BlockLayer>(&*it)) {
      BlockLayer inv = *l;
      for (auto& t : inv.templates) t.unitary.adjointInPlace();
      out.steps.emplace_back(std::move(inv));
    } else {
      ShiftPrimitive s = std::get<ShiftPrimitive>(*it);
      s.displacement = -s.displacement;
      out.steps.emplace_back(s);
    }
  }
  return out;
}

QcaExpr identity_expr(const SiteSpec& sites) { return QcaExpr(sites); }

double probe_residual(const QcaExpr& a, const QcaExpr& b, Window window) {
  const SiteSpec& sites = a.sites;
  const int d = sites.dim();
  double worst = 0.0;
  for (long j = window.lo; j <= window.hi; ++j)
    for (int q = 0; q < sites.num_registers(); ++q) {
      const int m = sites.register_dim(q);
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y) {
          Matrix unit = Matrix::Zero(m, m);
          unit(x, y) = 1.0;
          const auto e = LocalOperator::on_site(d, j, lift_to_site(sites, q, unit));
          const auto diff = difference(apply(a, e), apply(b, e));
          worst = std::max(worst, diff.matrix().norm());
        }
    }
  return worst;
}

PrimeLog gnvw_symbolic(const QcaExpr& expr) {
  PrimeLog out;
  for (const auto& s : expr.steps) {
    const auto* sh = std::get_if<ShiftPrimitive>(&s);
    if (!sh) continue;
    for (const auto& [p, e] : prime_factors(expr.sites.register_dim(sh->register_index))) {
      out[p] += e * sh->displacement;
      if (out[p] == 0) out.erase(p);
    }
  }
  return out;
}

namespace {

/// Incrementally maintained orthonormal basis of a space of square matrices.
class OperatorBasis {
 public:
  explicit OperatorBasis(Index n) : n_(n) {}

  /// Adds the component of m orthogonal to the span; returns whether it was new.
  bool add(const Matrix& m) {
    const double scale = m.norm();
    if (scale <= 1e-14) return false;
    Matrix r = m;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis_) r -= b * inner(b, r);
    const double res = r.norm();
    if (res <= 1e-9 * scale) return false;
    basis_.push_back(r / res);
    return true;
  }

  std::size_t size() const { return basis_.size(); }
  const Matrix& operator[](std::size_t i) const { return basis_[i]; }
  bool full() const { return static_cast<Index>(basis_.size()) == n_ * n_; }

 private:
  static cplx inner(const Matrix& a, const Matrix& b) { return (a.conjugate().cwiseProduct(b)).sum(); }

  Index n_;
  std::vector<Matrix> basis_;
};

}  // namespace

Index support_algebra_dim(const std::vector<LocalOperator>& gens, Window part) {
  if (gens.empty()) return 1;
  const int d = gens.front().site_dim();
  std::vector<LocalOperator> trimmed;
  Window hull = Window::empty();
  for (const auto& g : gens) {
    if (g.site_dim() != d) fail(Errc::InvalidArgument, "generators on different chains");
    LocalOperator t = trim(g);
    hull = hull.hull(t.window().intersect(part));
    trimmed.push_back(std::move(t));
  }
  if (hull.is_empty()) return 1;
  const Index mc = checked_dim(d, hull.length());

  OperatorBasis coeffs(mc);
  for (const auto& g : trimmed) {
    const Window gw = g.window();
    const Window pg = gw.intersect(part);
    if (pg.is_empty()) continue;
    const Index left = ipow(d, pg.lo - gw.lo);
    const Index right = ipow(d, gw.hi - pg.hi);
    const Index mid = ipow(d, pg.length());
    const Matrix& m = g.matrix();
    Matrix a(mid, mid);
    for (Index l = 0; l < left; ++l)
      for (Index l2 = 0; l2 < left; ++l2)
        for (Index r = 0; r < right; ++r)
          for (Index r2 = 0; r2 < right; ++r2) {
            for (Index i = 0; i < mid; ++i)
              for (Index j = 0; j < mid; ++j) a(i, j) = m((l * mid + i) * right + r, (l2 * mid + j) * right + r2);
            coeffs.add(embed(LocalOperator(d, pg, a), hull).matrix());
            if (coeffs.full()) return mc * mc;
          }
  }

  OperatorBasis alg(mc);
  alg.add(Matrix::Identity(mc, mc));
  for (std::size_t next = 0; next < alg.size(); ++next) {
    const Matrix x = alg[next];
    for (std::size_t s = 0; s < coeffs.size(); ++s) {
      alg.add(x * coeffs[s]);
      if (alg.full()) return mc * mc;
    }
  }
  return static_cast<Index>(alg.size());
}

GnvwNumeric gnvw_numeric(const QcaExpr& expr) {
  const int d = expr.sites.dim();
  const int r = std::max(expr.radius(), 1);
  auto images = [&](long lo, long hi) {
    std::vector<LocalOperator> out;
    for (long j = lo; j <= hi; ++j) {
      for (Index a = 0; a < d; ++a) out.push_back(apply(expr, LocalOperator::matrix_unit(d, Window::site(j), a, 0)));
      for (Index b = 1; b < d; ++b) out.push_back(apply(expr, LocalOperator::matrix_unit(d, Window::site(j), 0, b)));
    }
    return out;
  };
  GnvwNumeric res;
  res.radius = r;
  res.dim_right = support_algebra_dim(images(-2L * r, -1), Window{0, 3L * r});
  res.dim_left = support_algebra_dim(images(0, 2L * r - 1), Window{-3L * r, -1});

  const PrimeLog fr = prime_factors(static_cast<long>(res.dim_right));
  const PrimeLog fl = prime_factors(static_cast<long>(res.dim_left));
  const PrimeLog diff = fr + (-fl);
  for (const auto& [p, e] : diff) {
    if (e % 2 != 0)
      fail(Errc::NonSquareRatio, "support algebra dimensions " + std::to_string(res.dim_right) + " / " +
                                     std::to_string(res.dim_left) + " are not a rational square");
    res.index[p] = e / 2;
  }
  const PrimeLog sym = gnvw_symbolic(expr);
  if (res.index != sym)
    fail(Errc::IndexMismatch, "numeric index " + to_string(res.index) + " differs from symbolic " + to_string(sym));
  return res;
}

Matrix lift_to_site(const SiteSpec& sites, int reg, const Matrix& m) {
  if (m.rows() != sites.register_dim(reg) || m.cols() != m.rows())
    fail(Errc::InvalidArgument, "matrix does not match register " + std::to_string(reg));
  Index before = 1, after = 1;
  for (int q = 0; q < reg; ++q) before *= sites.register_dim(q);
  for (int q = reg + 1; q < sites.num_registers(); ++q) after *= sites.register_dim(q);
  return kron(kron(Matrix::Identity(before, before), m), Matrix::Identity(after, after));
}

BlockLayer onsite_layer(const Matrix& site_gate) {
  BlockLayer l;
  l.period = 1;
  l.templates.push_back({0, 1, site_gate});
  return l;
}

Matrix register_swap(const SiteSpec& sites, int a, int b) {
  if (sites.register_dim(a) != sites.register_dim(b))
    fail(Errc::InvalidArgument, "swapped registers must have equal dimension");
  const auto dims = factor_dims(sites, 1);
  std::vector<int> perm(dims.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  return permutation_unitary(dims, perm);
}

Matrix staggered_swap(const SiteSpec& sites, int a, int b) {
  if (sites.register_dim(a) != sites.register_dim(b))
    fail(Errc::InvalidArgument, "swapped registers must have equal dimension");
  if (a == b) fail(Errc::InvalidArgument, "staggered swap needs two distinct registers");
  const auto dims = factor_dims(sites, 2);
  const int nr = sites.num_registers();
  std::vector<int> perm(dims.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[static_cast<std::size_t>(b)], perm[static_cast<std::size_t>(nr + a)]);
  return permutation_unitary(dims, perm);
}

namespace {

/// Layer L' with s o L == L' o s as automorphisms.
BlockLayer transport_layer(const BlockLayer& layer, const ShiftPrimitive& s, const SiteSpec& sites) {
  BlockLayer out;
  out.period = layer.period;
  for (const auto& t : layer.templates) {
    const LocalOperator g(sites.dim(), Window{t.anchor, t.anchor + t.span - 1}, t.unitary);
    const LocalOperator moved = apply_shift(s, sites, g);
    if (moved.window().is_empty()) continue;
    out.templates.push_back({moved.window().lo, static_cast<int>(moved.window().length()), moved.matrix()});
  }
  return out;
}

std::vector<QcaStep> pair_circuit(const SiteSpec& sites, int right_reg, int left_reg) {
  std::vector<QcaStep> out;
  if (right_reg == left_reg) return out;
  out.emplace_back(onsite_layer(register_swap(sites, right_reg, left_reg)));
  BlockLayer stag;
  stag.period = 1;
  stag.templates.push_back({0, 2, staggered_swap(sites, right_reg, left_reg)});
  out.emplace_back(std::move(stag));
  return out;
}

}  // namespace

QcaExpr balance_shifts(const QcaExpr& expr) {
  const PrimeLog idx = gnvw_symbolic(expr);
  if (!is_zero(idx)) fail(Errc::NonZeroIndex, "expression has index " + to_string(idx));

  std::vector<QcaStep> steps;
  for (const auto& s : expr.steps) {
    if (const auto* l = std::get_if<BlockLayer>(&s)) {
      if (l->min_site || l->max_site)
        fail(Errc::InvalidArgument, "cannot move shifts across a truncated layer");
      steps.push_back(s);
      continue;
    }
    const auto& sh = std::get<ShiftPrimitive>(s);
    const long unit = sh.displacement > 0 ? 1 : -1;
    for (long k = 0; k < std::labs(sh.displacement); ++k) steps.emplace_back(ShiftPrimitive{sh.register_index, unit});
  }

  for (;;) {
    std::size_t i = 0;
    while (i < steps.size() && !std::holds_alternative<ShiftPrimitive>(steps[i])) ++i;
    if (i == steps.size()) break;
    const auto first = std::get<ShiftPrimitive>(steps[i]);
    const int dim = expr.sites.register_dim(first.register_index);
    std::size_t j = i + 1;
    for (; j < steps.size(); ++j) {
      const auto* sh = std::get_if<ShiftPrimitive>(&steps[j]);
      if (sh && sh->displacement == -first.displacement && expr.sites.register_dim(sh->register_index) == dim) break;
    }
    if (j == steps.size())
      fail(Errc::UnpairableShifts, "no opposite shift of a register with dimension " + std::to_string(dim) +
                                       " to pair with register " + std::to_string(first.register_index));
    const auto partner = std::get<ShiftPrimitive>(steps[j]);
    for (std::size_t k = j; k > i + 1; --k) {
      if (const auto* l = std::get_if<BlockLayer>(&steps[k - 1]))
        steps[k] = transport_layer(*l, partner, expr.sites);
      else
        steps[k] = steps[k - 1];
    }
    steps[i + 1] = partner;
    const int right_reg = first.displacement > 0 ? first.register_index : partner.register_index;
    const int left_reg = first.displacement > 0 ? partner.register_index : first.register_index;
    auto repl = pair_circuit(expr.sites, right_reg, left_reg);
    steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(i), steps.begin() + static_cast<std::ptrdiff_t>(i + 2));
    steps.insert(steps.begin() + static_cast<std::ptrdiff_t>(i), repl.begin(), repl.end());
  }
  QcaExpr out(expr.sites, std::move(steps));
  validate_expr(out);
  return out;
}

}  // namespace lsmidx
