#include "doctest.h"

#include <cmath>
#include <random>

#include "lsmidx/error.hpp"
#include "lsmidx/spectra.hpp"
#include "support/free_fermion.hpp"

using namespace lsmidx;
using lsmidx::testing::free_fermion_levels;
using lsmidx::testing::pfaffian;

namespace {

HamiltonianSpec chain(int n, bool cluster = true) {
  HamiltonianSpec s;
  s.N = n;
  s.cluster = cluster;
  s.symmetric = cluster;
  return s;
}

HamiltonianSpec ising_chain(int n, double j) {
  HamiltonianSpec s = chain(n);
  s.ising = true;
  s.J = j;
  return s;
}

Eigen::MatrixXcd pauli_on(int n, int site, char which) {
  Eigen::Matrix2cd p;
  switch (which) {
    case 'X': p << 0, 1, 1, 0; break;
    case 'Z': p << 1, 0, 0, -1; break;
    default: p = Eigen::Matrix2cd::Identity();
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXcd f = j == ((site % n) + n) % n ? Eigen::MatrixXcd(p) : Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r)
      for (Eigen::Index c = 0; c < out.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = out(r, c) * f;
    out = next;
  }
  return out;
}

Eigen::MatrixXcd symmetry_matrix(int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd u(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) u.col(s) = apply_symmetry(Eigen::VectorXcd::Unit(dim, s), n);
  return u;
}

/// <+...+| U |+...+> summed directly over basis states.
std::complex<double> paramagnet_charge(int n) {
  std::complex<double> total = 0.0;
  for (long s = 0; s < (1L << n); ++s) {
    int bond = 0, ones = 0;
    for (int j = 0; j < n; ++j) {
      const int zj = ((s >> (n - 1 - j)) & 1) ? -1 : 1;
      const int zk = ((s >> (n - 1 - (j + 1) % n)) & 1) ? -1 : 1;
      bond += zj * zk;
      ones += zj < 0;
    }
    total += std::polar(1.0, M_PI / 4 * bond) * (ones % 2 ? -1.0 : 1.0);
  }
  return total / static_cast<double>(1L << n);
}

EigenOptions lanczos() {
  EigenOptions o;
  o.method = EigenMethod::Lanczos;
  return o;
}

}  // namespace

TEST_CASE("pfaffian oracle") {
  Eigen::MatrixXd two(2, 2);
  two << 0, 3, -3, 0;
  CHECK(pfaffian(two) == doctest::Approx(3.0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int n : {4, 6, 8}) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
    const Eigen::MatrixXd a = m - m.transpose();
    const double pf = pfaffian(a);
    CHECK(pf * pf == doctest::Approx(a.determinant()).epsilon(1e-10));
  }
}

TEST_CASE("hamiltonian construction") {
  const auto h = build_hamiltonian(chain(4, false));
  CHECK(h.dim() == 16);
  const Eigen::MatrixXcd dense = h.to_dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense);
  CHECK(es.eigenvalues()(0) == doctest::Approx(-4.0));
  CHECK(es.eigenvalues()(1) - es.eigenvalues()(0) == doctest::Approx(2.0));

  HamiltonianSpec all = ising_chain(6, 0.7);
  all.deformation = true;
  all.a = 0.3;
  const Eigen::MatrixXcd full = build_hamiltonian(all).to_dense();
  CHECK((full - full.adjoint()).norm() < 1e-14);

  // Term-by-term comparison against Kronecker products of Pauli matrices.
  Eigen::MatrixXcd oracle = Eigen::MatrixXcd::Zero(64, 64);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(64, 64);
  for (int j = 0; j < 6; ++j) {
    const Eigen::MatrixXcd x = pauli_on(6, j, 'X'), zl = pauli_on(6, j - 1, 'Z'), zr = pauli_on(6, j + 1, 'Z');
    const Eigen::MatrixXcd y = std::complex<double>(0, 1) * x * pauli_on(6, j, 'Z');
    oracle += -x - zl * x * zr - 0.7 * pauli_on(6, j, 'Z') * zr + 0.3 * y * (id - zl * zr);
  }
  CHECK((full - oracle).norm() < 1e-12);

  CHECK(build_hamiltonian(chain(8)).hermitian());
  for (int bad : {2, 24}) {
    try {
      build_hamiltonian(chain(bad));
      FAIL("expected SizeCap");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::SizeCap);
    }
  }
  CHECK_THROWS_AS(build_hamiltonian(chain(7)), Error);
}

TEST_CASE("symmetry unitary implements the Z/2 action on the ring") {
  const int n = 6;
  const Eigen::MatrixXcd u = symmetry_matrix(n);
  CHECK((u * u.adjoint() - Eigen::MatrixXcd::Identity(64, 64)).norm() < 1e-12);
  for (int j = 0; j < n; ++j) {
    const Eigen::MatrixXcd z = pauli_on(n, j, 'Z');
    CHECK((u * z * u.adjoint() + z).norm() < 1e-12);
    const Eigen::MatrixXcd decorated = pauli_on(n, j - 1, 'Z') * pauli_on(n, j, 'X') * pauli_on(n, j + 1, 'Z');
    CHECK((u * pauli_on(n, j, 'X') * u.adjoint() - decorated).norm() < 1e-12);
  }
}

TEST_CASE("symmetric hamiltonians commute with the symmetry") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coupling(-3.0, 3.0);
  for (int trial = 0; trial < 4; ++trial) {
    HamiltonianSpec s = ising_chain(8, coupling(rng));
    s.deformation = true;
    s.a = coupling(rng);
    CHECK(symmetry_commutator(build_hamiltonian(s), 8) < 1e-9);
  }
  CHECK(symmetry_commutator(build_hamiltonian(chain(8, false)), 8) > 0.1);
}

TEST_CASE("free-fermion oracle matches exact diagonalization") {
  for (int n : {4, 6, 8}) {
    const auto levels = free_fermion_levels(n, 1.0, 1.0, 8);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(build_hamiltonian(chain(n)).to_dense());
    for (int i = 0; i < 8; ++i) CHECK(levels[static_cast<std::size_t>(i)] == doctest::Approx(es.eigenvalues()(i)).epsilon(1e-10));
    const auto para = free_fermion_levels(n, 1.0, 0.0, 2);
    CHECK(para[0] == doctest::Approx(-n));
    CHECK(para[1] == doctest::Approx(-n + 2));
  }
  CHECK(free_fermion_levels(8, 1.0, 1.0, 1)[0] == doctest::Approx(-10.4525).epsilon(1e-5));
}

TEST_CASE("lanczos agrees with dense diagonalization") {
  std::vector<HamiltonianSpec> specs = {chain(6), chain(6, false), chain(10), ising_chain(8, 4.0)};
  HamiltonianSpec deformed = ising_chain(10, 0.5);
  deformed.deformation = true;
  deformed.a = 0.4;
  specs.push_back(deformed);
  for (const auto& s : specs) {
    const auto h = build_hamiltonian(s);
    EigenOptions dense;
    dense.method = EigenMethod::Dense;
    const auto ref = lowest_eigs(h, 4, dense);
    const auto lan = lowest_eigs(h, 4, lanczos());
    CHECK_FALSE(lan.dense);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(lan.values[static_cast<std::size_t>(i)] - ref.values[static_cast<std::size_t>(i)]) < 1e-8);
      CHECK(lan.residuals[static_cast<std::size_t>(i)] <= 1e-7);
    }
  }
  const auto para = lowest_eigs(build_hamiltonian(chain(6, false)), 3, lanczos());
  CHECK(para.values[0] == doctest::Approx(-6.0));
  CHECK(para.values[1] == doctest::Approx(-4.0));
  CHECK(para.values[2] == doctest::Approx(-4.0));
}

TEST_CASE("larger chains follow the free-fermion spectrum") {
  const double reference[] = {-10.4525, -12.9443, -15.4548, -17.9758};
  int idx = 0;
  for (int n : {8, 10, 12, 14}) {
    const auto levels = free_fermion_levels(n, 1.0, 1.0, 3);
    const auto eig = lowest_eigs(build_hamiltonian(chain(n)), 3, lanczos());
    for (int i = 0; i < 3; ++i) CHECK(std::abs(eig.values[static_cast<std::size_t>(i)] - levels[static_cast<std::size_t>(i)]) < 1e-6);
    CHECK(eig.values[0] == doctest::Approx(reference[idx++]).epsilon(1e-5));
  }
}

TEST_CASE("lanczos reports non-convergence") {
  EigenOptions tight = lanczos();
  tight.max_iterations = 5;
  try {
    lowest_eigs(build_hamiltonian(chain(10)), 2, tight);
    FAIL("expected NoConvergence");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoConvergence);
  }
  CHECK_THROWS_AS(lowest_eigs(build_hamiltonian(chain(4)), 9), Error);
}

TEST_CASE("symmetry charges") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd v(256);
  for (Eigen::Index i = 0; i < 256; ++i) v(i) = {normal(rng), normal(rng)};
  v.normalize();
  CHECK(std::abs(symmetry_charge(v, 8)) <= 1.0 + 1e-9);

  const auto gs = lowest_eigs(build_hamiltonian(chain(8)), 2);
  CHECK(gs.values[1] - gs.values[0] > 0.1);
  CHECK(std::abs(std::abs(symmetry_charge(gs.vectors.col(0), 8)) - 1.0) < 1e-8);

  for (int n : {4, 6, 8}) {
    const auto para = lowest_eigs(build_hamiltonian(chain(n, false)), 1);
    const auto charge = symmetry_charge(para.vectors.col(0), n);
    const auto expect = paramagnet_charge(n);
    // The ground state is only fixed up to a phase, which cancels in the expectation.
    CHECK(std::abs(charge - expect) < 1e-10);
    CHECK(std::abs(charge) == doctest::Approx(std::pow(2.0, 1 - n / 2)));
  }
}

TEST_CASE("gap scan") {
  const auto rows = gap_scan(default_grid(), 3, 2);
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].spec.N == default_grid()[i].N);
    REQUIRE_FALSE(rows[i].error.has_value());
    CHECK(rows[i].max_residual <= 1e-7);
    CHECK(std::abs(rows[i].charge) <= 1.0 + 1e-9);
  }
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i < 4; ++i) {
    lo = std::min(lo, rows[static_cast<std::size_t>(i)].spec.N * rows[static_cast<std::size_t>(i)].gap);
    hi = std::max(hi, rows[static_cast<std::size_t>(i)].spec.N * rows[static_cast<std::size_t>(i)].gap);
  }
  CHECK((hi - lo) / lo < 0.15);
  CHECK(rows[0].spec.N * rows[0].gap == doctest::Approx(6.365).epsilon(1e-3));
  CHECK(rows[4].gap < 1e-2);
  CHECK(rows[4].gap2 > 0.5);
  for (std::size_t i = 5; i < 8; ++i) CHECK(std::abs(rows[i].gap - 2.0) < 1e-9);

  const auto witness = anomaly_witness(rows);
  CHECK(witness.holds);

  const auto serial = gap_scan(default_grid(), 3, 1);
  CHECK(spectrum_csv(serial) == spectrum_csv(rows));
  const auto csv = spectrum_csv(rows);
  CHECK(csv.rfind("N,J,a,E0,E1,E2,gap,gap2,charge_re,charge_im\n", 0) == 0);
}

TEST_CASE("gap scan records row errors and continues") {
  std::vector<HamiltonianSpec> grid = {chain(6), chain(5), chain(4, false)};
  grid[2].symmetric = true;
  const auto rows = gap_scan(grid, 3);
  CHECK_FALSE(rows[0].error.has_value());
  REQUIRE(rows[1].error.has_value());
  CHECK(rows[1].error->find("even") != std::string::npos);
  REQUIRE(rows[2].error.has_value());
  CHECK(rows[2].error->find("commute") != std::string::npos);
  CHECK(spectrum_csv(rows).find("\n5,0,0,,,,,,,\n") != std::string::npos);
}
