#include "lsmidx/grpcoh.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>

namespace lsmidx {

using BigInt = boost::multiprecision::cpp_int;

namespace {

std::atomic<int> g_degree_cap{3};
std::atomic<std::size_t> g_row_cap{65536};

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  const __int128 p = static_cast<__int128>(a) * b;
  if (p > INT64_MAX || p < INT64_MIN) fail(Errc::MatrixCap, "integer overflow in exact arithmetic");
  return static_cast<std::int64_t>(p);
}

std::int64_t checked_lcm(std::int64_t a, std::int64_t b) { return checked_mul(a / std::gcd(a, b), b); }

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- FiniteGroup

FiniteGroup::FiniteGroup(std::vector<std::vector<int>> table, std::string name)
    : table_(std::move(table)), name_(std::move(name)) {
  const auto n = table_.size();
  if (n == 0) fail(Errc::InvalidArgument, "group table is empty");
  for (const auto& row : table_) {
    if (row.size() != n) fail(Errc::InvalidArgument, "group table is not square");
    for (int x : row)
      if (x < 0 || static_cast<std::size_t>(x) >= n) fail(Errc::InvalidArgument, "group table entry out of range");
  }
  for (std::size_t a = 0; a < n; ++a)
    if (table_[0][a] != static_cast<int>(a) || table_[a][0] != static_cast<int>(a))
      fail(Errc::InvalidArgument, "element 0 is not the identity");
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        if (mul(mul(static_cast<int>(a), static_cast<int>(b)), static_cast<int>(c)) !=
            mul(static_cast<int>(a), mul(static_cast<int>(b), static_cast<int>(c))))
          fail(Errc::InvalidArgument, "group table is not associative at (" + std::to_string(a) + "," +
                                          std::to_string(b) + "," + std::to_string(c) + ")");
  inverse_.assign(n, -1);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b)
      if (table_[a][b] == 0 && table_[b][a] == 0) inverse_[a] = static_cast<int>(b);
    if (inverse_[a] < 0) fail(Errc::InvalidArgument, "element " + std::to_string(a) + " has no inverse");
  }
}

FiniteGroup FiniteGroup::cyclic(int n) {
  if (n < 1) fail(Errc::InvalidArgument, "cyclic group order must be positive");
  std::vector<std::vector<int>> t(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) t[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = (a + b) % n;
  return FiniteGroup(std::move(t), "Z/" + std::to_string(n));
}

FiniteGroup FiniteGroup::product(const FiniteGroup& a, const FiniteGroup& b) {
  const int na = a.order(), nb = b.order();
  std::vector<std::vector<int>> t(static_cast<std::size_t>(na * nb), std::vector<int>(static_cast<std::size_t>(na * nb)));
  for (int x = 0; x < na * nb; ++x)
    for (int y = 0; y < na * nb; ++y)
      t[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)] = a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb);
  return FiniteGroup(std::move(t), a.name() + " x " + b.name());
}

FiniteGroup FiniteGroup::relabeled(const std::vector<int>& perm) const {
  const auto n = table_.size();
  if (perm.size() != n || perm[0] != 0) fail(Errc::InvalidArgument, "relabeling must fix the identity");
  std::vector<std::vector<int>> t(n, std::vector<int>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      t[static_cast<std::size_t>(perm[a])][static_cast<std::size_t>(perm[b])] = perm[static_cast<std::size_t>(table_[a][b])];
  return FiniteGroup(std::move(t), name_);
}

// ---------------------------------------------------------------- Phase

Phase::Phase(std::int64_t num, std::int64_t den) {
  if (den == 0) fail(Errc::InvalidArgument, "phase denominator is zero");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  num %= den;
  if (num < 0) num += den;
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

Phase Phase::operator+(const Phase& o) const {
  const std::int64_t l = checked_lcm(den_, o.den_);
  const __int128 s = static_cast<__int128>(num_) * (l / den_) + static_cast<__int128>(o.num_) * (l / o.den_);
  return Phase(static_cast<std::int64_t>(s % l), l);
}

Phase Phase::operator-() const { return Phase(-num_, den_); }
Phase Phase::operator-(const Phase& o) const { return *this + (-o); }

Phase Phase::times(std::int64_t k) const {
  const __int128 p = static_cast<__int128>(num_) * k % den_;
  return Phase(static_cast<std::int64_t>(p), den_);
}

std::string Phase::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

Phase Phase::parse(const std::string& text) {
  try {
    const auto slash = text.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const auto v = std::stoll(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return Phase(v, 1);
    }
    const auto p = std::stoll(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(text);
    const auto rest = text.substr(slash + 1);
    const auto q = std::stoll(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(text);
    return Phase(p, q);
  } catch (const std::logic_error&) {
    fail(Errc::ParseError, "not a rational phase: '" + text + "'");
  }
}

std::ostream& operator<<(std::ostream& os, const Phase& p) { return os << p.str(); }

// ---------------------------------------------------------------- PhaseCochain

PhaseCochain::PhaseCochain(std::shared_ptr<const FiniteGroup> group, int degree)
    : group_(std::move(group)), degree_(degree) {
  if (!group_) fail(Errc::InvalidArgument, "cochain without a group");
  if (degree_ < 0) fail(Errc::InvalidArgument, "negative cochain degree");
  values_.assign(ipow(static_cast<std::size_t>(group_->order()), degree_), Phase());
}

std::size_t PhaseCochain::index(const std::vector<int>& a) const {
  if (static_cast<int>(a.size()) != degree_) fail(Errc::InvalidArgument, "wrong number of cochain arguments");
  std::size_t i = 0;
  const auto n = static_cast<std::size_t>(group_->order());
  for (int x : a) {
    if (x < 0 || x >= group_->order()) fail(Errc::InvalidArgument, "cochain argument out of range");
    i = i * n + static_cast<std::size_t>(x);
  }
  return i;
}

std::vector<int> PhaseCochain::args(std::size_t index) const {
  std::vector<int> a(static_cast<std::size_t>(degree_));
  const auto n = static_cast<std::size_t>(group_->order());
  for (int k = degree_ - 1; k >= 0; --k) {
    a[static_cast<std::size_t>(k)] = static_cast<int>(index % n);
    index /= n;
  }
  return a;
}

bool PhaseCochain::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](const Phase& p) { return p.is_zero(); });
}

PhaseCochain PhaseCochain::operator+(const PhaseCochain& o) const {
  if (o.degree_ != degree_ || o.group_->order() != group_->order())
    fail(Errc::InvalidArgument, "adding cochains of different shape");
  PhaseCochain r = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) r.values_[i] += o.values_[i];
  return r;
}

PhaseCochain PhaseCochain::operator-(const PhaseCochain& o) const {
  if (o.degree_ != degree_ || o.group_->order() != group_->order())
    fail(Errc::InvalidArgument, "subtracting cochains of different shape");
  PhaseCochain r = *this;
  for (std::size_t i = 0; i < values_.size(); ++i) r.values_[i] -= o.values_[i];
  return r;
}

bool PhaseCochain::operator==(const PhaseCochain& o) const {
  return degree_ == o.degree_ && group_->order() == o.group_->order() && values_ == o.values_;
}

std::string PhaseCochain::dump() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const auto a = args(i);
    for (std::size_t k = 0; k < a.size(); ++k) os << (k ? "," : "") << a[k];
    os << " → " << values_[i].str() << "\n";
  }
  return os.str();
}

int degree_cap() { return g_degree_cap.load(); }
void set_degree_cap(int cap) {
  if (cap < 1) fail(Errc::InvalidArgument, "degree cap must be positive");
  g_degree_cap.store(cap);
}

std::size_t cohomology_row_cap() { return g_row_cap.load(); }
void set_cohomology_row_cap(std::size_t rows) { g_row_cap.store(rows); }

namespace {

/// Terms (sign, column index) of the bar coboundary at one (k+1)-tuple.
template <class Emit>
void coboundary_terms(const FiniteGroup& g, const std::vector<int>& args, Emit&& emit) {
  const int k1 = static_cast<int>(args.size());
  const int k = k1 - 1;
  const auto n = static_cast<std::size_t>(g.order());
  auto encode = [&](auto&& fill) {
    std::size_t idx = 0;
    fill([&](int x) { idx = idx * n + static_cast<std::size_t>(x); });
    return idx;
  };
  emit(1, encode([&](auto push) {
         for (int i = 1; i < k1; ++i) push(args[static_cast<std::size_t>(i)]);
       }));
  for (int i = 1; i <= k; ++i) {
    emit(i % 2 ? -1 : 1, encode([&](auto push) {
           for (int j = 0; j < k1; ++j) {
             if (j == i - 1) {
               push(g.mul(args[static_cast<std::size_t>(j)], args[static_cast<std::size_t>(j + 1)]));
               ++j;
             } else {
               push(args[static_cast<std::size_t>(j)]);
             }
           }
         }));
  }
  emit((k + 1) % 2 ? -1 : 1, encode([&](auto push) {
         for (int i = 0; i < k; ++i) push(args[static_cast<std::size_t>(i)]);
       }));
}

}  // namespace

PhaseCochain coboundary(const PhaseCochain& f) {
  if (f.degree() > degree_cap())
    fail(Errc::DegreeCap, "coboundary of degree " + std::to_string(f.degree()) + " exceeds the cap " +
                              std::to_string(degree_cap()));
  PhaseCochain out(f.group_ptr(), f.degree() + 1);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Phase acc;
    coboundary_terms(f.group(), out.args(i), [&](int sign, std::size_t col) {
      if (sign > 0)
        acc += f.at(col);
      else
        acc -= f.at(col);
    });
    out.at(i) = acc;
  }
  return out;
}

bool is_cocycle(const PhaseCochain& f) { return coboundary(f).is_zero(); }

// ---------------------------------------------------------------- Smith normal form

struct SnfData {
  struct Op {
    int target;
    int source;
    std::int64_t factor;  // target -= factor * source
  };
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Op> row_ops;
  std::vector<Op> col_ops;
  std::vector<int> dense_rows;
  std::vector<int> zero_rows;
  std::vector<int> dense_cols;
  std::vector<std::vector<BigInt>> u;  // dense_rows x dense_rows
  std::vector<std::vector<BigInt>> v;  // dense_cols x dense_cols
  std::vector<BigInt> diag;
  std::size_t rank = 0;
  std::vector<std::size_t> factor_pos;
};

namespace {

using SparseRow = std::vector<std::pair<int, std::int64_t>>;

std::int64_t entry(const SparseRow& row, int col) {
  auto it = std::lower_bound(row.begin(), row.end(), col, [](const auto& e, int c) { return e.first < c; });
  return (it != row.end() && it->first == col) ? it->second : 0;
}

/// Unit-pivot elimination on a sparse integer matrix; remaining block is returned in `rows`.
void sparse_phase(std::vector<SparseRow>& rows, std::size_t ncols, SnfData& out) {
  std::vector<std::set<int>> col_rows(ncols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (const auto& [c, v] : rows[r]) col_rows[static_cast<std::size_t>(c)].insert(static_cast<int>(r));
  std::vector<char> row_active(rows.size(), 1), col_active(ncols, 1);

  for (;;) {
    int best_r = -1, best_c = -1;
    std::size_t best_cost = SIZE_MAX;
    for (std::size_t c = 0; c < ncols && best_cost > 0; ++c) {
      if (!col_active[c] || col_rows[c].empty()) continue;
      const std::size_t csz = col_rows[c].size() - 1;
      if (csz * 1 >= best_cost) continue;
      for (int r : col_rows[c]) {
        const auto v = entry(rows[static_cast<std::size_t>(r)], static_cast<int>(c));
        if (v != 1 && v != -1) continue;
        const std::size_t cost = csz * (rows[static_cast<std::size_t>(r)].size() - 1);
        if (cost < best_cost) {
          best_cost = cost;
          best_r = r;
          best_c = static_cast<int>(c);
          if (cost == 0) break;
        }
      }
    }
    if (best_r < 0) break;

    const auto pr = static_cast<std::size_t>(best_r);
    const auto pc = static_cast<std::size_t>(best_c);
    const std::int64_t pv = entry(rows[pr], best_c);
    const SparseRow pivot_row = rows[pr];
    const std::vector<int> others(col_rows[pc].begin(), col_rows[pc].end());
    for (int t : others) {
      if (t == best_r) continue;
      auto& row = rows[static_cast<std::size_t>(t)];
      const std::int64_t f = checked_mul(entry(row, best_c), pv);
      SparseRow merged;
      merged.reserve(row.size() + pivot_row.size());
      std::size_t i = 0, j = 0;
      while (i < row.size() || j < pivot_row.size()) {
        if (j == pivot_row.size() || (i < row.size() && row[i].first < pivot_row[j].first)) {
          merged.push_back(row[i++]);
        } else if (i == row.size() || pivot_row[j].first < row[i].first) {
          const auto nv = -checked_mul(f, pivot_row[j].second);
          col_rows[static_cast<std::size_t>(pivot_row[j].first)].insert(t);
          merged.emplace_back(pivot_row[j].first, nv);
          ++j;
        } else {
          const auto nv = row[i].second - checked_mul(f, pivot_row[j].second);
          if (nv != 0)
            merged.emplace_back(row[i].first, nv);
          else
            col_rows[static_cast<std::size_t>(row[i].first)].erase(t);
          ++i;
          ++j;
        }
      }
      row.swap(merged);
      out.row_ops.push_back({t, best_r, f});
    }
    for (const auto& [c, v] : pivot_row) {
      col_rows[static_cast<std::size_t>(c)].erase(best_r);
      if (c != best_c) out.col_ops.push_back({c, best_c, checked_mul(v, pv)});
    }
    rows[pr].clear();
    row_active[pr] = 0;
    col_active[pc] = 0;
  }

  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!row_active[r]) continue;
    if (rows[r].empty())
      out.zero_rows.push_back(static_cast<int>(r));
    else
      out.dense_rows.push_back(static_cast<int>(r));
  }
  for (std::size_t c = 0; c < ncols; ++c)
    if (col_active[c]) out.dense_cols.push_back(static_cast<int>(c));
}

void dense_snf(std::vector<std::vector<BigInt>>& a, SnfData& out) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a[0].size() : out.dense_cols.size();
  auto& u = out.u;
  auto& v = out.v;
  u.assign(m, std::vector<BigInt>(m, 0));
  v.assign(n, std::vector<BigInt>(n, 0));
  for (std::size_t i = 0; i < m; ++i) u[i][i] = 1;
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1;

  auto swap_rows = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    std::swap(a[i], a[j]);
    std::swap(u[i], u[j]);
  };
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    for (auto& row : a) std::swap(row[i], row[j]);
    for (auto& row : v) std::swap(row[i], row[j]);
  };
  auto row_axpy = [&](std::size_t t, std::size_t s, const BigInt& f) {  // row t -= f row s
    for (std::size_t j = 0; j < n; ++j)
      if (a[s][j] != 0) a[t][j] -= f * a[s][j];
    for (std::size_t j = 0; j < m; ++j)
      if (u[s][j] != 0) u[t][j] -= f * u[s][j];
  };
  auto col_axpy = [&](std::size_t t, std::size_t s, const BigInt& f) {  // col t -= f col s
    for (std::size_t i = 0; i < m; ++i)
      if (a[i][s] != 0) a[i][t] -= f * a[i][s];
    for (std::size_t i = 0; i < n; ++i)
      if (v[i][s] != 0) v[i][t] -= f * v[i][s];
  };

  const std::size_t steps = std::min(m, n);
  std::size_t t = 0;
  for (; t < steps; ++t) {
    for (;;) {
      std::size_t bi = m, bj = n;
      BigInt best = 0;
      for (std::size_t i = t; i < m; ++i)
        for (std::size_t j = t; j < n; ++j)
          if (a[i][j] != 0 && (bi == m || abs(a[i][j]) < best)) {
            best = abs(a[i][j]);
            bi = i;
            bj = j;
          }
      if (bi == m) break;
      swap_rows(t, bi);
      swap_cols(t, bj);
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i)
        if (a[i][t] != 0) {
          row_axpy(i, t, BigInt(a[i][t] / a[t][t]));
          if (a[i][t] != 0) clean = false;
        }
      for (std::size_t j = t + 1; j < n; ++j)
        if (a[t][j] != 0) {
          col_axpy(j, t, BigInt(a[t][j] / a[t][t]));
          if (a[t][j] != 0) clean = false;
        }
      if (!clean) continue;
      std::size_t bad = m;
      for (std::size_t i = t + 1; i < m && bad == m; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (a[i][j] % a[t][t] != 0) {
            bad = i;
            break;
          }
      if (bad == m) break;
      row_axpy(t, bad, BigInt(-1));
    }
    bool any = false;
    for (std::size_t i = t; i < m && !any; ++i)
      for (std::size_t j = t; j < n; ++j)
        if (a[i][j] != 0) {
          any = true;
          break;
        }
    if (!any && a[t][t] == 0) break;
    if (a[t][t] < 0) {
      for (auto& x : a[t]) x = -x;
      for (auto& x : u[t]) x = -x;
    }
  }
  out.rank = t;
  out.diag.clear();
  for (std::size_t k = 0; k < out.rank; ++k) out.diag.push_back(a[k][k]);
}

}  // namespace

CohomologyGroup cohomology(std::shared_ptr<const FiniteGroup> group, int degree) {
  if (!group) fail(Errc::InvalidArgument, "cohomology without a group");
  if (degree < 1) fail(Errc::InvalidArgument, "cohomology degree must be at least 1");
  if (degree > degree_cap())
    fail(Errc::DegreeCap, "degree " + std::to_string(degree) + " exceeds the cap " + std::to_string(degree_cap()));
  const auto n = static_cast<std::size_t>(group->order());
  const std::size_t nrows = ipow(n, degree + 1);
  const std::size_t ncols = ipow(n, degree);
  if (nrows > cohomology_row_cap())
    fail(Errc::MatrixCap, "coboundary matrix with " + std::to_string(nrows) + " rows exceeds the cap " +
                              std::to_string(cohomology_row_cap()));

  CohomologyGroup h;
  h.group_ = group;
  h.degree_ = degree;
  if (degree == 3 && n > 8)
    h.warnings_.push_back("degree-3 cohomology of a group of order " + std::to_string(n) + " is expensive");

  auto snf = std::make_shared<SnfData>();
  snf->rows = nrows;
  snf->cols = ncols;
  std::vector<SparseRow> rows(nrows);
  PhaseCochain shape(group, degree + 1);
  for (std::size_t r = 0; r < nrows; ++r) {
    std::vector<std::pair<int, std::int64_t>> terms;
    coboundary_terms(*group, shape.args(r), [&](int sign, std::size_t col) { terms.emplace_back(static_cast<int>(col), sign); });
    std::sort(terms.begin(), terms.end());
    SparseRow row;
    for (const auto& [c, s] : terms) {
      if (!row.empty() && row.back().first == c)
        row.back().second += s;
      else
        row.emplace_back(c, s);
    }
    row.erase(std::remove_if(row.begin(), row.end(), [](const auto& e) { return e.second == 0; }), row.end());
    rows[r] = std::move(row);
  }
  sparse_phase(rows, ncols, *snf);

  std::vector<std::size_t> col_pos(ncols, SIZE_MAX);
  for (std::size_t j = 0; j < snf->dense_cols.size(); ++j) col_pos[static_cast<std::size_t>(snf->dense_cols[j])] = j;
  std::vector<std::vector<BigInt>> dense(snf->dense_rows.size(), std::vector<BigInt>(snf->dense_cols.size(), 0));
  for (std::size_t i = 0; i < snf->dense_rows.size(); ++i)
    for (const auto& [c, v] : rows[static_cast<std::size_t>(snf->dense_rows[i])])
      dense[i][col_pos[static_cast<std::size_t>(c)]] = v;
  dense_snf(dense, *snf);

  for (std::size_t k = 0; k < snf->rank; ++k) {
    if (snf->diag[k] <= 1) continue;
    if (snf->diag[k] > INT64_MAX) fail(Errc::MatrixCap, "invariant factor exceeds 64 bits");
    h.factors_.push_back(static_cast<std::int64_t>(snf->diag[k]));
    snf->factor_pos.push_back(k);
  }

  for (std::size_t f = 0; f < h.factors_.size(); ++f) {
    const std::size_t k = snf->factor_pos[f];
    std::vector<BigInt> x(ncols, 0);
    for (std::size_t j = 0; j < snf->dense_cols.size(); ++j) x[static_cast<std::size_t>(snf->dense_cols[j])] = snf->v[j][k];
    for (auto it = snf->col_ops.rbegin(); it != snf->col_ops.rend(); ++it)
      x[static_cast<std::size_t>(it->source)] -= BigInt(it->factor) * x[static_cast<std::size_t>(it->target)];
    PhaseCochain gen(group, degree);
    const BigInt d = h.factors_[f];
    for (std::size_t i = 0; i < ncols; ++i) {
      BigInt r = x[i] % d;
      if (r < 0) r += d;
      gen.at(i) = Phase(static_cast<std::int64_t>(r), h.factors_[f]);
    }
    h.generators_.push_back(std::move(gen));
  }
  h.snf_ = std::move(snf);
  return h;
}

std::string CohomologyGroup::str() const {
  if (factors_.empty()) return "0";
  std::string s;
  for (std::size_t i = 0; i < factors_.size(); ++i) s += (i ? " ⊕ ℤ/" : "ℤ/") + std::to_string(factors_[i]);
  return s;
}

bool ClassCoords::is_zero() const {
  return std::all_of(residues.begin(), residues.end(), [](std::int64_t r) { return r == 0; });
}

std::string ClassCoords::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < residues.size(); ++i) s += (i ? ", " : "") + std::to_string(residues[i]);
  return s + "]";
}

ClassCoords class_of(const PhaseCochain& f, const CohomologyGroup& h) {
  if (f.degree() != h.degree() || f.group().order() != h.group().order())
    fail(Errc::InvalidArgument, "cochain shape does not match the cohomology group");
  if (!is_cocycle(f)) fail(Errc::NotACocycle, "class_of needs a cocycle");
  const auto& snf = h.snf();

  std::int64_t l = 1;
  for (std::size_t i = 0; i < f.size(); ++i) l = checked_lcm(l, f.at(i).den());
  std::vector<BigInt> lifted(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) lifted[i] = BigInt(f.at(i).num()) * (l / f.at(i).den());

  PhaseCochain shape(f.group_ptr(), f.degree() + 1);
  std::vector<BigInt> y(snf.rows);
  for (std::size_t r = 0; r < snf.rows; ++r) {
    BigInt acc = 0;
    coboundary_terms(f.group(), shape.args(r), [&](int sign, std::size_t col) {
      if (sign > 0)
        acc += lifted[col];
      else
        acc -= lifted[col];
    });
    if (acc % l != 0) fail(Errc::CocycleViolation, "integral lift is not integral");
    y[r] = acc / l;
  }
  for (const auto& op : snf.row_ops)
    if (y[static_cast<std::size_t>(op.source)] != 0)
      y[static_cast<std::size_t>(op.target)] -= BigInt(op.factor) * y[static_cast<std::size_t>(op.source)];
  for (int r : snf.zero_rows)
    if (y[static_cast<std::size_t>(r)] != 0) fail(Errc::CocycleViolation, "lift has a free component");

  auto coordinate = [&](std::size_t k) {
    BigInt z = 0;
    for (std::size_t j = 0; j < snf.dense_rows.size(); ++j)
      if (snf.u[k][j] != 0) z += snf.u[k][j] * y[static_cast<std::size_t>(snf.dense_rows[j])];
    return z;
  };
  for (std::size_t k = snf.rank; k < snf.dense_rows.size(); ++k)
    if (coordinate(k) != 0) fail(Errc::CocycleViolation, "lift has a free component");

  ClassCoords out;
  for (std::size_t i = 0; i < snf.factor_pos.size(); ++i) {
    const BigInt d = h.factors()[i];
    BigInt r = coordinate(snf.factor_pos[i]) % d;
    if (r < 0) r += d;
    out.residues.push_back(static_cast<std::int64_t>(r));
  }
  return out;
}

PhaseCochain slant_z(const ProductEvaluator& omega, std::shared_ptr<const FiniteGroup> g0) {
  PhaseCochain out(g0, 2);
  const ProductElement t{0, 1};
  auto eval = [&](const ProductElement& a, const ProductElement& b, const ProductElement& c) {
    const auto v = omega(a, b, c);
    if (!v)
      fail(Errc::EvaluatorDomain, "evaluator undefined at ((" + std::to_string(a.g) + "," + std::to_string(a.n) +
                                      "),(" + std::to_string(b.g) + "," + std::to_string(b.n) + "),(" +
                                      std::to_string(c.g) + "," + std::to_string(c.n) + "))");
    return *v;
  };
  for (int g = 0; g < g0->order(); ++g)
    for (int h = 0; h < g0->order(); ++h) {
      const ProductElement a{g, 0}, b{h, 0};
      out({g, h}) = eval(t, a, b) + eval(a, b, t) - eval(a, t, b);
    }
  return out;
}

}  // namespace lsmidx
