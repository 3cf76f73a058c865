#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "lsmidx/opwin.hpp"
#include "support/random.hpp"

using namespace lsmidx;
using lsmidx::testing::random_op;
using lsmidx::testing::random_unitary;
using lsmidx::testing::Rng;

namespace {

LocalOperator on(long site, const Matrix& m) { return LocalOperator::on_site(2, site, m); }

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Index>(v.size()), static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

}  // namespace

TEST_CASE("window algebra") {
  const Window a{0, 2}, b{4, 5};
  CHECK(a.hull(b) == Window{0, 5});
  CHECK(a.intersect(b).is_empty());
  CHECK(a.intersect(Window{2, 7}) == Window::site(2));
  CHECK(Window::empty().hull(b) == b);
  CHECK(a.contains(Window::empty()));
  CHECK_FALSE(Window::empty().contains(a));
  CHECK(a.fattened(1) == Window{-1, 3});
  CHECK_THROWS_AS(Window::of(3, 1), Error);
}

TEST_CASE("embed places identity factors by site order") {
  const auto z = embed(on(0, pauli::Z()), Window{0, 1});
  CHECK(z.window() == Window{0, 1});
  CHECK(z.matrix().isApprox(diag({1, 1, -1, -1})));

  const auto id = embed(LocalOperator::identity(2, Window::site(3)), Window{1, 5});
  CHECK(id.matrix().isApprox(Matrix::Identity(32, 32)));

  Rng rng(11);
  const auto a = random_op(2, Window::site(0), rng);
  const auto twice = embed(embed(a, Window{0, 1}), Window{-1, 2});
  const Matrix direct = kron(kron(pauli::I(), a.matrix()), kron(pauli::I(), pauli::I()));
  CHECK((twice.matrix() - direct).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(max_entry_distance(twice, embed(a, Window{-1, 2})) < 1e-14);

  try {
    embed(on(2, pauli::X()), Window{0, 1});
    FAIL("expected WindowMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::WindowMismatch);
  }
}

TEST_CASE("products follow the Pauli algebra") {
  const auto xz = on(0, pauli::X()) * on(0, pauli::Z());
  CHECK(xz.matrix().isApprox(cplx(0, -1) * pauli::Y()));

  const auto zx = on(0, pauli::Z()) * on(1, pauli::X());
  CHECK(zx.window() == Window{0, 1});
  CHECK(zx.matrix().isApprox(kron(pauli::Z(), pauli::X())));

  Rng rng(12);
  const LocalOperator u(2, Window{2, 3}, random_unitary(4, rng));
  const LocalOperator uinv(2, Window{2, 3}, u.matrix().inverse());
  CHECK((u * uinv).matrix().isApprox(Matrix::Identity(4, 4), 1e-12));
}

TEST_CASE("conditional expectation examples") {
  const auto e0 = conditional_expectation(on(0, pauli::Z()), Window::empty());
  CHECK(e0.window().is_empty());
  CHECK(std::abs(e0.matrix()(0, 0)) < 1e-15);

  const LocalOperator zz(2, Window{0, 1}, kron(pauli::Z(), pauli::Z()));
  CHECK(conditional_expectation(zz, Window::site(0)).matrix().norm() < 1e-15);

  const LocalOperator zi(2, Window{0, 1}, kron(pauli::Z(), pauli::I()));
  CHECK(conditional_expectation(zi, Window::site(0)).matrix().isApprox(pauli::Z()));
}

TEST_CASE("operator distance") {
  CHECK(op_distance(on(0, pauli::X()), on(0, pauli::X())) == doctest::Approx(0.0));
  CHECK(op_distance(on(0, pauli::Z()), scaled(on(0, pauli::Z()), -1.0)) == doctest::Approx(2.0));
  const Matrix diff = pauli::X() - pauli::Z();
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff);
  const double oracle = es.eigenvalues().cwiseAbs().maxCoeff();
  CHECK(op_distance(on(0, pauli::X()), on(0, pauli::Z())) == doctest::Approx(oracle).epsilon(1e-14));
  CHECK(oracle == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("property: embedding is isometric") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 2;
    const long lo = -2 + trial % 3;
    const Window w{lo, lo + trial % 2};
    const auto a = random_op(d, w, rng);
    const auto big = embed(a, w.fattened(1));
    CHECK(std::abs(op_norm(big) - op_norm(a)) <= 1e-12 * std::max(1.0, op_norm(a)));
  }
}

TEST_CASE("property: conditional expectation laws") {
  Rng rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2;
    const Window w{0, 2 + trial % 2};
    const Window keep{1, 1 + (trial % 2)};
    const auto a = random_op(d, w, rng);
    const auto ea = conditional_expectation(a, keep);
    CHECK(max_entry_distance(conditional_expectation(embed(ea, w), keep), ea) < 1e-12);
    CHECK(max_entry_distance(conditional_expectation(LocalOperator::identity(d, w), keep),
                             LocalOperator::identity(d, keep)) < 1e-12);
    CHECK(op_norm(ea) <= op_norm(a) + 1e-12);
    const auto inner = random_op(d, keep, rng);
    const auto lhs = conditional_expectation(inner * a, keep);
    const auto rhs = inner * ea;
    CHECK(max_entry_distance(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("property: product associativity") {
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_op(2, Window{0, 1}, rng);
    const auto b = random_op(2, Window{1, 2}, rng);
    const auto c = random_op(2, Window::site(-1), rng);
    const double scale = op_norm(a) * op_norm(b) * op_norm(c);
    CHECK(op_distance((a * b) * c, a * (b * c)) <= 1e-12 * std::max(1.0, scale));
  }
}

TEST_CASE("trim removes identity boundary factors") {
  const LocalOperator zx(2, Window{0, 1}, kron(pauli::Z(), pauli::X()));
  const auto t = trim(embed(zx, Window{-2, 3}));
  CHECK(t.window() == Window{0, 1});
  CHECK(max_entry_distance(t, zx) < 1e-14);
  CHECK(trim(LocalOperator::identity(2, Window{0, 3})).window().is_empty());
}

TEST_CASE("conjugation and factor permutation") {
  Rng rng(24);
  const Matrix u = random_unitary(4, rng);
  const auto a = random_op(2, Window{1, 2}, rng);
  const auto c = conjugate(a, u, Window{0, 1});
  const Matrix full = kron(u, pauli::I());
  const Matrix oracle = full * embed(a, Window{0, 2}).matrix() * full.adjoint();
  CHECK((c.matrix() - oracle).cwiseAbs().maxCoeff() < 1e-12);

  const std::vector<int> dims{2, 3};
  const std::vector<int> perm{1, 0};
  const Matrix x = lsmidx::testing::random_matrix(2, rng);
  const Matrix y = lsmidx::testing::random_matrix(3, rng);
  const Matrix swapped = permute_factors(kron(x, y), dims, perm);
  CHECK((swapped - kron(y, x)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("dimension cap") {
  const auto saved = operator_dim_cap();
  set_window_cap_sites(3);
  CHECK_THROWS_AS(LocalOperator::identity(2, Window{0, 3}), Error);
  set_operator_dim_cap(saved);
  CHECK_NOTHROW(LocalOperator::identity(2, Window{0, 3}));
}
