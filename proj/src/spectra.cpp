#include "lsmidx/spectra.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "lsmidx/error.hpp"

namespace lsmidx {

namespace {

constexpr double kPi = 3.14159265358979323846;

/// z eigenvalue (+1 for bit 0) of site j.
inline int z_of(std::int64_t s, int N, int j) {
  const int jj = ((j % N) + N) % N;
  return ((s >> (N - 1 - jj)) & 1) ? -1 : 1;
}

Eigen::VectorXcd random_unit(std::int64_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(dim);
  for (std::int64_t i = 0; i < dim; ++i) v(i) = cplx(normal(rng), normal(rng));
  return v / v.norm();
}

void orthogonalize(Eigen::VectorXcd& w, const Eigen::MatrixXcd& basis, Eigen::Index count) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXcd c = basis.leftCols(count).adjoint() * w;
    w -= basis.leftCols(count) * c;
  }
}

std::vector<double> residuals_of(const SparseOperator& h, const std::vector<double>& values,
                                 const Eigen::MatrixXcd& vectors) {
  std::vector<double> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Eigen::VectorXcd v = vectors.col(static_cast<Eigen::Index>(i));
    out.push_back((h.apply(v) - values[i] * v).norm());
  }
  return out;
}

EigenResult dense_eigs(const SparseOperator& h, int k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.to_dense());
  EigenResult r;
  r.dense = true;
  r.vectors = solver.eigenvectors().leftCols(k);
  for (int i = 0; i < k; ++i) r.values.push_back(solver.eigenvalues()(i));
  r.residuals = residuals_of(h, r.values, r.vectors);
  return r;
}

/// Lowest eigenpair of H restricted to the complement of the first `locked` columns.
Eigen::VectorXcd lanczos_lowest(const SparseOperator& h, const Eigen::MatrixXcd& locked_basis, Eigen::Index locked,
                                const EigenOptions& options, std::mt19937_64& rng, int& iterations) {
  const std::int64_t dim = h.dim();
  const Eigen::Index m_max = std::max<Eigen::Index>(2, std::min<std::int64_t>(options.krylov_dim, dim - locked));
  Eigen::VectorXcd start = random_unit(dim, rng);
  orthogonalize(start, locked_basis, locked);
  start.normalize();

  int used = 0;
  while (true) {
    Eigen::MatrixXcd q(dim, m_max);
    std::vector<double> alpha, beta;
    q.col(0) = start;
    Eigen::VectorXd ritz_y;
    double theta = 0.0;
    Eigen::Index m = 0;
    bool exhausted = false;
    for (; m < m_max; ++m) {
      if (used >= options.max_iterations)
        fail(Errc::NoConvergence, "Lanczos did not converge within " + std::to_string(options.max_iterations) +
                                      " iterations");
      Eigen::VectorXcd w = h.apply(q.col(m));
      ++used;
      alpha.push_back(q.col(m).dot(w).real());
      orthogonalize(w, locked_basis, locked);
      orthogonalize(w, q, m + 1);
      const double b = w.norm();
      beta.push_back(b);

      const auto size = static_cast<Eigen::Index>(alpha.size());
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(size, size);
      for (Eigen::Index i = 0; i < size; ++i) {
        t(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < size) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t);
      ritz_y = small.eigenvectors().col(0);
      theta = small.eigenvalues()(0);
      const double estimate = std::abs(b * ritz_y(size - 1));
      if (b < 1e-12 * std::max(1.0, std::abs(theta)) || m + 1 == dim - locked) {
        exhausted = true;
        ++m;
        break;
      }
      if (estimate < 0.5 * options.residual_tol) {
        ++m;
        break;
      }
      if (m + 1 < m_max) q.col(m + 1) = w / b;
    }
    Eigen::VectorXcd x = q.leftCols(m) * ritz_y.head(m).cast<cplx>();
    orthogonalize(x, locked_basis, locked);
    x.normalize();
    const double rq = x.dot(h.apply(x)).real();
    const double residual = (h.apply(x) - rq * x).norm();
    used += 1;
    if (residual <= options.residual_tol || exhausted) {
      iterations += used;
      return x;
    }
    start = x;
  }
}

EigenResult lanczos_eigs(const SparseOperator& h, int k, const EigenOptions& options) {
  const std::int64_t dim = h.dim();
  std::mt19937_64 rng(options.seed ^ static_cast<std::uint64_t>(dim));
  Eigen::MatrixXcd locked(dim, k);
  EigenResult r;
  for (int i = 0; i < k; ++i) {
    int iterations = 0;
    locked.col(i) = lanczos_lowest(h, locked, i, options, rng, iterations);
    r.iterations += iterations;
  }
  // Rayleigh-Ritz on the locked vectors sorts them and removes mixing inside clusters.
  Eigen::MatrixXcd hl(dim, k);
  for (int i = 0; i < k; ++i) hl.col(i) = h.apply(Eigen::VectorXcd(locked.col(i)));
  Eigen::MatrixXcd g = locked.adjoint() * hl;
  g = 0.5 * (g + g.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> small(g);
  r.vectors = locked * small.eigenvectors();
  for (int i = 0; i < k; ++i) r.values.push_back(small.eigenvalues()(i));
  r.residuals = residuals_of(h, r.values, r.vectors);
  return r;
}

}  // namespace

std::string HamiltonianSpec::terms_label() const {
  std::vector<std::string> parts;
  if (paramagnet) parts.emplace_back("H0");
  if (cluster) parts.emplace_back("H1");
  if (ising) parts.emplace_back("HJ");
  if (deformation) parts.emplace_back("Ha");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
  return out.empty() ? "0" : out;
}

SparseOperator::SparseOperator(std::int64_t dim, std::vector<std::int64_t> row_start, std::vector<std::int64_t> cols,
                               std::vector<cplx> values, bool hermitian)
    : dim_(dim),
      row_start_(std::move(row_start)),
      cols_(std::move(cols)),
      values_(std::move(values)),
      hermitian_(hermitian) {
  if (static_cast<std::int64_t>(row_start_.size()) != dim_ + 1 || cols_.size() != values_.size() ||
      row_start_.back() != static_cast<std::int64_t>(cols_.size()))
    fail(Errc::InvalidArgument, "inconsistent compressed row arrays");
}

void SparseOperator::apply(const cplx* in, cplx* out) const {
  for (std::int64_t r = 0; r < dim_; ++r) {
    cplx acc = 0.0;
    for (std::int64_t p = row_start_[static_cast<std::size_t>(r)]; p < row_start_[static_cast<std::size_t>(r + 1)]; ++p)
      acc += values_[static_cast<std::size_t>(p)] * in[cols_[static_cast<std::size_t>(p)]];
    out[r] = acc;
  }
}

Eigen::VectorXcd SparseOperator::apply(const Eigen::VectorXcd& in) const {
  if (in.size() != dim_) fail(Errc::InvalidArgument, "vector length does not match the operator");
  Eigen::VectorXcd out(dim_);
  apply(in.data(), out.data());
  return out;
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim_, dim_);
  for (std::int64_t r = 0; r < dim_; ++r)
    for (std::int64_t p = row_start_[static_cast<std::size_t>(r)]; p < row_start_[static_cast<std::size_t>(r + 1)]; ++p)
      m(r, cols_[static_cast<std::size_t>(p)]) += values_[static_cast<std::size_t>(p)];
  return m;
}

SparseOperator build_hamiltonian(const HamiltonianSpec& spec) {
  const int N = spec.N;
  if (N < 4 || N > max_sites)
    fail(Errc::SizeCap, "chain length " + std::to_string(N) + " outside [4, " + std::to_string(max_sites) + "]");
  if (N % 2 != 0) fail(Errc::InvalidArgument, "chain length must be even, got " + std::to_string(N));
  if (!std::isfinite(spec.J) || !std::isfinite(spec.a)) fail(Errc::InvalidArgument, "couplings must be finite");

  const std::int64_t dim = std::int64_t{1} << N;
  const double h0 = spec.paramagnet ? 1.0 : 0.0;
  const double h1 = spec.cluster ? 1.0 : 0.0;
  const double jz = spec.ising ? spec.J : 0.0;
  const double ay = spec.deformation ? spec.a : 0.0;
  const bool offdiag = h0 != 0.0 || h1 != 0.0 || ay != 0.0;

  std::vector<std::int64_t> row_start;
  std::vector<std::int64_t> cols;
  std::vector<cplx> values;
  row_start.reserve(static_cast<std::size_t>(dim + 1));
  const std::size_t per_row = static_cast<std::size_t>(1 + (offdiag ? N : 0));
  cols.reserve(static_cast<std::size_t>(dim) * per_row);
  values.reserve(static_cast<std::size_t>(dim) * per_row);

  std::vector<std::pair<std::int64_t, cplx>> row;
  for (std::int64_t s = 0; s < dim; ++s) {
    row_start.push_back(static_cast<std::int64_t>(cols.size()));
    row.clear();
    if (jz != 0.0) {
      double diag = 0.0;
      for (int j = 0; j < N; ++j) diag -= jz * z_of(s, N, j) * z_of(s, N, j + 1);
      row.emplace_back(s, diag);
    }
    if (offdiag)
      for (int j = 0; j < N; ++j) {
        const std::int64_t c = s ^ (std::int64_t{1} << (N - 1 - j));
        const double zz = z_of(s, N, j - 1) * z_of(s, N, j + 1);
        // <s| Y_j |c> is +i when c has bit j clear.
        const cplx y = z_of(c, N, j) == 1 ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
        const cplx amp = -h0 - h1 * zz + ay * (1.0 - zz) * y;
        if (amp != 0.0) row.emplace_back(c, amp);
      }
    std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      values.push_back(v);
    }
  }
  row_start.push_back(static_cast<std::int64_t>(cols.size()));
  return SparseOperator(dim, std::move(row_start), std::move(cols), std::move(values), true);
}

Eigen::VectorXcd apply_symmetry(const Eigen::VectorXcd& state, int N) {
  if (N < 2 || N % 2 != 0 || N > max_sites) fail(Errc::InvalidArgument, "symmetry needs an even ring length");
  const std::int64_t dim = std::int64_t{1} << N;
  if (state.size() != dim) fail(Errc::InvalidArgument, "state length does not match 2^N");
  const std::int64_t all = dim - 1;
  Eigen::VectorXcd out(dim);
  for (std::int64_t s = 0; s < dim; ++s) {
    const std::int64_t t = s ^ all;
    int bond = 0;
    for (int j = 0; j < N; ++j) bond += z_of(t, N, j) * z_of(t, N, j + 1);
    const int ones = __builtin_popcountll(static_cast<unsigned long long>(t));
    const cplx phase = std::polar(1.0, kPi / 4.0 * bond) * ((ones % 2) ? -1.0 : 1.0);
    out(t) = phase * state(s);
  }
  return out;
}

cplx symmetry_charge(const Eigen::VectorXcd& state, int N) { return state.dot(apply_symmetry(state, N)); }

double symmetry_commutator(const SparseOperator& h, int N) {
  std::mt19937_64 rng(0xc0ffee);
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::VectorXcd v = random_unit(h.dim(), rng);
    const Eigen::VectorXcd lhs = h.apply(apply_symmetry(v, N));
    const Eigen::VectorXcd rhs = apply_symmetry(h.apply(v), N);
    worst = std::max(worst, (lhs - rhs).norm());
  }
  return worst;
}

EigenResult lowest_eigs(const SparseOperator& h, int k, const EigenOptions& options) {
  if (k < 1 || k > 8) fail(Errc::InvalidArgument, "eigenpair count must be in [1, 8], got " + std::to_string(k));
  if (k > h.dim()) fail(Errc::InvalidArgument, "more eigenpairs requested than the dimension");
  const bool dense = options.method == EigenMethod::Dense ||
                     (options.method == EigenMethod::Automatic && h.dim() <= options.dense_limit);
  EigenResult r = dense ? dense_eigs(h, k) : lanczos_eigs(h, k, options);
  constexpr double residual_cap = 1e-7;
  for (std::size_t i = 0; i < r.residuals.size(); ++i)
    if (!(r.residuals[i] <= residual_cap))
      fail(Errc::NoConvergence, "eigenpair " + std::to_string(i) + " has residual " + std::to_string(r.residuals[i]));
  return r;
}

std::vector<SpectrumRow> gap_scan(const std::vector<HamiltonianSpec>& grid, int k, int threads,
                                  const EigenOptions& options) {
  std::vector<SpectrumRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      SpectrumRow& row = rows[i];
      row.spec = grid[i];
      try {
        const auto h = build_hamiltonian(row.spec);
        if (row.spec.symmetric) {
          row.commutator = symmetry_commutator(h, row.spec.N);
          if (row.commutator > 1e-9)
            fail(Errc::InvalidArgument, "Hamiltonian does not commute with the symmetry (residual " +
                                            std::to_string(row.commutator) + ")");
        }
        const auto eig = lowest_eigs(h, k, options);
        row.energies = eig.values;
        row.max_residual = *std::max_element(eig.residuals.begin(), eig.residuals.end());
        if (k >= 2) row.gap = eig.values[1] - eig.values[0];
        if (k >= 3) row.gap2 = eig.values[2] - eig.values[0];
        row.charge = symmetry_charge(eig.vectors.col(0), row.spec.N);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(grid.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::string spectrum_csv(const std::vector<SpectrumRow>& rows) {
  auto num = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x == 0.0 ? 0.0 : x);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "N,J,a,E0,E1,E2,gap,gap2,charge_re,charge_im\n";
  for (const auto& r : rows) {
    out << r.spec.N << ',' << num(r.spec.ising ? r.spec.J : 0.0) << ',' << num(r.spec.deformation ? r.spec.a : 0.0);
    if (r.error) {
      out << ",,,,,,,\n";
      continue;
    }
    for (std::size_t i = 0; i < 3; ++i) out << ',' << (i < r.energies.size() ? num(r.energies[i]) : "");
    out << ',' << (r.energies.size() >= 2 ? num(r.gap) : "") << ',' << (r.energies.size() >= 3 ? num(r.gap2) : "");
    auto chop = [](double x) { return std::abs(x) < 1e-13 ? 0.0 : x; };
    out << ',' << num(chop(r.charge.real())) << ',' << num(chop(r.charge.imag())) << '\n';
  }
  return out.str();
}

std::vector<HamiltonianSpec> default_grid() {
  std::vector<HamiltonianSpec> grid;
  for (int n : {8, 10, 12, 14}) {
    HamiltonianSpec s;
    s.N = n;
    s.symmetric = true;
    grid.push_back(s);
  }
  {
    HamiltonianSpec s;
    s.N = 10;
    s.ising = true;
    s.J = 4.0;
    s.symmetric = true;
    grid.push_back(s);
  }
  for (int n : {8, 10, 12}) {
    HamiltonianSpec s;
    s.N = n;
    s.cluster = false;
    grid.push_back(s);
  }
  return grid;
}

WitnessCheck anomaly_witness(const std::vector<SpectrumRow>& rows) {
  WitnessCheck out;
  std::map<std::tuple<std::string, double, double>, std::vector<const SpectrumRow*>> families;
  for (const auto& r : rows) {
    if (!r.spec.symmetric) continue;
    if (r.error) {
      out.holds = false;
      out.notes.push_back("N=" + std::to_string(r.spec.N) + " failed: " + *r.error);
      continue;
    }
    families[{r.spec.terms_label(), r.spec.ising ? r.spec.J : 0.0, r.spec.deformation ? r.spec.a : 0.0}].push_back(&r);
  }
  for (const auto& [key, family] : families) {
    const auto& [label, J, a] = key;
    std::string name = label + " J=" + std::to_string(J) + " a=" + std::to_string(a);
    bool degenerate = true;
    double lo = 1e300, hi = 0.0;
    for (const auto* r : family) {
      degenerate = degenerate && r->energies.size() >= 3 && r->gap < 1e-2 && r->gap2 > 0.1;
      lo = std::min(lo, r->spec.N * r->gap);
      hi = std::max(hi, r->spec.N * r->gap);
    }
    const bool gapless = family.size() >= 2 && lo > 0.0 && (hi - lo) / lo < 0.15;
    if (gapless)
      out.notes.push_back(name + ": N*gap in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    else if (degenerate)
      out.notes.push_back(name + ": quasi-degenerate ground states");
    else {
      out.holds = false;
      out.notes.push_back(name + ": neither a 1/N gap nor a degenerate ground state");
    }
  }
  return out;
}

}  // namespace lsmidx
