#include "doctest.h"

#include <numbers>

#include "lsmidx/anomaly.hpp"
#include "support/cocycle_oracle.hpp"
#include "support/random.hpp"

using namespace lsmidx;
using lsmidx::testing::pentagon_holds;
using lsmidx::testing::random_op;
using lsmidx::testing::random_unitary;
using lsmidx::testing::Rng;

namespace {

Matrix zz_gate() {
  const cplx p = std::polar(1.0, std::numbers::pi / 4);
  Matrix u = Matrix::Zero(4, 4);
  u(0, 0) = u(3, 3) = p;
  u(1, 1) = u(2, 2) = std::conj(p);
  return u;
}

/// Ad_U restricted to the single gate copy on `w`.
QcaExpr single_gate(const SiteSpec& sites, Window w, const Matrix& u) {
  BlockLayer l;
  l.period = static_cast<int>(w.length());
  l.templates.push_back({w.lo, static_cast<int>(w.length()), u});
  l.min_site = w.lo;
  l.max_site = w.hi;
  return QcaExpr(sites, {l});
}

/// Dense product of single-qubit and neighbouring two-qubit gates on a window, for oracles.
Matrix on_window(Window w, long site, const Matrix& m) {
  Matrix out = Matrix::Identity(1, 1);
  for (long j = w.lo; j <= w.hi;) {
    if (j == site) {
      out = kron(out, m);
      j += m.rows() == 4 ? 2 : 1;
    } else {
      out = kron(out, pauli::I());
      ++j;
    }
  }
  return out;
}

PhaseCochain random_phases(std::shared_ptr<const FiniteGroup> g, int degree, Rng& rng) {
  PhaseCochain f(std::move(g), degree);
  for (std::size_t i = 0; i < f.size(); ++i) f.at(i) = Phase(static_cast<std::int64_t>(rng() % 24), 24);
  return f;
}

LocalOperator phase_times(const LocalOperator& a, const Phase& p) {
  return scaled(a, std::polar(1.0, 2.0 * std::numbers::pi * p.value()));
}

}  // namespace

TEST_CASE("action verification") {
  const auto lg = presets::levin_gu_z2();
  const auto check = verify_action(lg);
  CHECK(check.max_residual < 1e-12);
  CHECK(check.probe.length() == 2 * lg.map[1].radius() + 2);
  CHECK_NOTHROW(verify_action(presets::onsite_z2_flip()));

  auto broken = lg;
  broken.map[0] = QcaExpr(lg.sites, {onsite_layer(pauli::X())});
  try {
    verify_action(broken);
    FAIL("expected NotAHomomorphism");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotAHomomorphism);
  }
}

TEST_CASE("levin-gu symmetry acts as a Z-decorated flip") {
  const auto gamma = presets::levin_gu_z2().map[1];
  const auto z = apply(gamma, LocalOperator::on_site(2, 0, pauli::Z()));
  CHECK(max_entry_distance(z, LocalOperator::on_site(2, 0, -pauli::Z())) < 1e-12);
  const auto x = apply(gamma, LocalOperator::on_site(2, 0, pauli::X()));
  const LocalOperator zxz(2, Window{-1, 1}, kron(kron(pauli::Z(), pauli::X()), pauli::Z()));
  CHECK(max_entry_distance(x, zxz) < 1e-12);
}

TEST_CASE("restriction keeps gates inside the half-chain") {
  const auto gamma = presets::levin_gu_z2().map[1];
  const auto beta = restrict_right(gamma);
  for (const auto& s : beta.steps) CHECK(std::get<BlockLayer>(s).min_site == 0L);

  // Oracle: conjugation by prod_{j>=0} e^{i pi/4 Z_j Z_j+1} prod_{j>=0} Z_j prod_{j>=0} X_j on a finite window.
  const Window w{-2, 4};
  Matrix u = Matrix::Identity(128, 128);
  for (long j = 0; j <= 4; ++j) u = on_window(w, j, pauli::X()) * u;
  for (long j = 0; j <= 4; ++j) u = on_window(w, j, pauli::Z()) * u;
  for (long j = 0; j <= 3; j += 2) u = on_window(w, j, zz_gate()) * u;
  for (long j = 1; j <= 3; j += 2) u = on_window(w, j, zz_gate()) * u;
  Rng rng(51);
  for (int trial = 0; trial < 4; ++trial) {
    const auto a = random_op(2, Window{-1, 1}, rng);
    const Matrix oracle = u * embed(a, w).matrix() * u.adjoint();
    CHECK((embed(apply(beta, a), w).matrix() - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }

  const auto far_left = LocalOperator::on_site(2, -3, pauli::X());
  CHECK(max_entry_distance(apply(beta, far_left), far_left) < 1e-15);

  // Stacked translation becomes partial swaps: the staggered copy across the cut is dropped.
  const SiteSpec two({2, 2});
  const auto swaps = stack_neutralize_expr(QcaExpr(SiteSpec({2}), {ShiftPrimitive{0, 1}}));
  const auto partial = restrict_right(swaps);
  const auto left_probe = LocalOperator::on_site(4, -1, kron(pauli::X(), pauli::Z()));
  CHECK(max_entry_distance(apply(partial, left_probe), left_probe) < 1e-15);
  CHECK(max_entry_distance(apply(partial, LocalOperator::on_site(4, 0, kron(pauli::X(), pauli::I()))),
                           LocalOperator::on_site(4, 0, kron(pauli::X(), pauli::I()))) > 0.5);

  CHECK_THROWS_AS(restrict_right(QcaExpr(SiteSpec({2}), {ShiftPrimitive{0, 1}})), Error);
  const auto onsite = restrict_right(presets::onsite_z2_flip().map[1]);
  CHECK(std::get<BlockLayer>(onsite.steps[0]).min_site == 0L);
}

TEST_CASE("implementing unitary extraction") {
  const auto beta = restrict_right(presets::levin_gu_z2().map[1]);
  const auto v = extract_implementing_unitary(compose(beta, beta), Window{0, 1});
  CHECK(v.window() == Window::site(0));
  CHECK((v.matrix() - pauli::Z()).cwiseAbs().maxCoeff() < 1e-12);

  const auto id = extract_implementing_unitary(identity_expr(SiteSpec({2})), Window{0, 1});
  CHECK(id.window().is_empty());
  CHECK(std::abs(id.matrix()(0, 0) - 1.0) < 1e-15);

  Rng rng(52);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix u = random_unitary(4, rng);
    const auto got = extract_implementing_unitary(single_gate(SiteSpec({2}), Window{1, 2}, u), Window{1, 2});
    const Matrix g = embed(got, Window{1, 2}).matrix();
    const cplx overlap = (u.adjoint() * g).trace() / 4.0;
    CHECK(std::abs(std::abs(overlap) - 1.0) < 1e-12);
    CHECK((g - overlap * u).cwiseAbs().maxCoeff() < 1e-12);
  }

  try {
    extract_implementing_unitary(QcaExpr(SiteSpec({2}), {onsite_layer(pauli::X())}), Window{0, 1});
    FAIL("expected NotIdentityOutside");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotIdentityOutside);
  }
}

TEST_CASE("phase snapping") {
  CHECK(snap_phase(0.5 + 1e-9, 48).phase == Phase(1, 2));
  CHECK(snap_phase(1.0 / 3.0, 48).phase == Phase(1, 3));
  CHECK(snap_phase(-0.25, 48).phase == Phase(3, 4));
  CHECK(snap_phase(-1e-12, 48).phase == Phase());
  CHECK(snap_phase(0.5 + 1e-9, 48).error < 1e-8);
  try {
    snap_phase(0.1234567, 12);
    FAIL("expected SnapFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::SnapFailure);
  }
}

TEST_CASE("levin-gu cocycle") {
  const auto spec = presets::levin_gu_z2();
  const auto res = omega_cocycle(spec);
  CHECK(res.omega({1, 1, 1}) == Phase(1, 2));
  for (std::size_t i = 0; i + 1 < res.omega.size(); ++i) CHECK(res.omega.at(i).is_zero());
  for (double e : res.snap_errors) CHECK(e < 1e-8);
  CHECK((embed(res.v(1, 1), Window::site(0)).matrix() - pauli::Z()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(res.max_v_residual <= 1e-9);

  // Hand composition from V(-1,-1) = Z_0 and V = 1 otherwise.
  VTable by_hand{2, {}, {}};
  for (int k = 0; k < 4; ++k) by_hand.gates.push_back(LocalOperator::scalar(2, 1.0));
  by_hand(1, 1) = LocalOperator::on_site(2, 0, pauli::Z());
  const auto hand = omega_from_vtable(spec.group, restrict_action(spec), by_hand);
  CHECK(hand.omega == res.omega);
}

TEST_CASE("anomaly reports") {
  const auto lg = anomaly_class(presets::levin_gu_z2());
  CHECK(lg.verdict == Verdict::Anomalous);
  CHECK(lg.cohomology.factors() == std::vector<std::int64_t>{2});
  CHECK(lg.cls.residues == std::vector<std::int64_t>{1});
  CHECK_FALSE(lg.stacked);
  for (const auto& idx : lg.gnvw) CHECK(is_zero(idx));

  const auto flip = anomaly_class(presets::onsite_z2_flip());
  CHECK(flip.verdict == Verdict::NonAnomalous);
  CHECK(flip.omega.omega.is_zero());

  const auto k = std::make_shared<const FiniteGroup>(FiniteGroup::product(FiniteGroup::cyclic(2), FiniteGroup::cyclic(2)));
  const Matrix xi = kron(pauli::X(), pauli::I()), ix = kron(pauli::I(), pauli::X());
  const auto linear = anomaly_class(presets::onsite(k, {Matrix::Identity(4, 4), ix, xi, xi * ix}));
  CHECK(linear.omega.omega.is_zero());
  CHECK(linear.verdict == Verdict::NonAnomalous);

  const auto trivial = presets::onsite(std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2)),
                                       {pauli::I(), pauli::I()});
  const auto stacked = anomaly_class(stack_actions(presets::levin_gu_z2(), trivial));
  CHECK(stacked.cls == lg.cls);
  CHECK(stacked.verdict == Verdict::Anomalous);
}

TEST_CASE("stacking neutralizes translations") {
  const auto lg = presets::levin_gu_z2();
  const auto same = stack_neutralize(lg);
  CHECK_FALSE(same.stacked);
  CHECK(same.spec.sites == lg.sites);
  CHECK(same.spec.map[1].steps.size() == lg.map[1].steps.size());

  const QcaExpr shift(SiteSpec({2}), {ShiftPrimitive{0, 1}});
  const auto circuit = stack_neutralize_expr(shift);
  CHECK_FALSE(circuit.has_shifts());
  CHECK(is_zero(gnvw_symbolic(circuit)));
  const QcaExpr oracle(SiteSpec({2, 2}), {ShiftPrimitive{0, 1}, ShiftPrimitive{1, -1}});
  CHECK(probe_residual(circuit, oracle, Window{-2, 2}) < 1e-12);

  const auto pauli = presets::pauli_z2xz2();
  const auto e = stack_neutralize_expr(lsm_element(pauli, 3, 2));
  const QcaExpr e_oracle(SiteSpec({2, 2}), {onsite_layer(kron(pauli.matrices[3], pauli::I())), ShiftPrimitive{0, 2},
                                            ShiftPrimitive{1, -2}});
  CHECK(probe_residual(e, e_oracle, Window{-2, 2}) < 1e-12);
}

TEST_CASE("projective cocycles") {
  const auto pauli = presets::pauli_z2xz2();
  const auto rho = projective_cocycle(pauli);
  CHECK(rho({2, 1}) == Phase());
  CHECK(rho({1, 2}) == Phase(1, 2));
  CHECK_FALSE(class_of(rho, cohomology(pauli.group, 2)).is_zero());

  CHECK(projective_cocycle(presets::z2_flip()).is_zero());

  const auto weyl = presets::weyl(3);
  const auto rw = projective_cocycle(weyl);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int a2 = 0; a2 < 3; ++a2)
        for (int b2 = 0; b2 < 3; ++b2) CHECK(rw({3 * a + b, 3 * a2 + b2}) == Phase(a2 * b, 3));
  const auto h = cohomology(weyl.group, 2);
  CHECK(h.factors() == std::vector<std::int64_t>{3});
  CHECK_FALSE(class_of(rw, h).is_zero());

  ProjectiveRep bad = presets::z2_flip();
  bad.matrices[1] = Matrix::Identity(2, 2);
  bad.matrices[1](1, 1) = cplx(0, 1);
  try {
    projective_cocycle(bad);
    FAIL("expected NotProjective");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotProjective);
  }
}

TEST_CASE("lsm mixed anomaly") {
  const auto pauli = lsm_pipeline(presets::pauli_z2xz2());
  CHECK(pauli.mixed_anomaly);
  CHECK(pauli.classes_equal);
  CHECK(pauli.h2.factors() == std::vector<std::int64_t>{2});
  CHECK(pauli.max_snap_error < 1e-8);

  const auto linear = lsm_pipeline(presets::z2_flip());
  CHECK_FALSE(linear.mixed_anomaly);
  CHECK(linear.slant_class.is_zero());
  CHECK(linear.classes_equal);
}

TEST_CASE("lsm mixed anomaly for clock and shift matrices") {
  const auto weyl = lsm_pipeline(presets::weyl(3));
  CHECK(weyl.h2.factors() == std::vector<std::int64_t>{3});
  CHECK(weyl.mixed_anomaly);
  CHECK(weyl.classes_equal);

  AnomalyOptions left;
  left.left_restriction = true;
  const auto mirrored = lsm_pipeline(presets::weyl(3), left);
  REQUIRE(mirrored.slant_class.residues.size() == 1);
  CHECK((mirrored.slant_class.residues[0] + weyl.slant_class.residues[0]) % 3 == 0);
}

TEST_CASE("property: cocycles satisfy the pentagon identity") {
  CHECK(pentagon_holds(omega_cocycle(presets::levin_gu_z2()).omega));
  const auto trivial = presets::onsite(std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2)),
                                       {pauli::I(), pauli::X()});
  CHECK(pentagon_holds(omega_cocycle(stack_actions(presets::levin_gu_z2(), trivial)).omega));
}

TEST_CASE("property: rephasing V changes the cocycle by a coboundary") {
  const auto spec = presets::levin_gu_z2();
  const auto beta = restrict_action(spec);
  const auto base = omega_from_restriction(spec.group, beta);
  const auto h = cohomology(spec.group, 3);
  Rng rng(53);
  for (int trial = 0; trial < 10; ++trial) {
    const auto theta = random_phases(spec.group, 2, rng);
    VTable v = base.v;
    for (int g = 0; g < 2; ++g)
      for (int k = 0; k < 2; ++k) v(g, k) = phase_times(v(g, k), theta({g, k}));
    const auto moved = omega_from_vtable(spec.group, beta, v);
    CHECK(moved.omega == base.omega - coboundary(theta));
    CHECK(class_of(moved.omega, h) == class_of(base.omega, h));
  }
}

TEST_CASE("property: the cocycle does not depend on the restriction") {
  const auto spec = presets::levin_gu_z2();
  const auto beta = restrict_action(spec);
  const auto base = omega_from_restriction(spec.group, beta);
  const auto h = cohomology(spec.group, 3);
  Rng rng(54);
  for (int trial = 0; trial < 10; ++trial) {
    // b'(g) = b(g) o Ad_U(g) = Ad_{b(g)(U(g))} o b(g).
    std::vector<QcaExpr> perturbed;
    std::vector<LocalOperator> moved_u;
    for (int g = 0; g < 2; ++g) {
      const long lo = static_cast<long>(rng() % 4);
      const Window w{lo, lo + 1};
      const Matrix u = random_unitary(4, rng);
      perturbed.push_back(compose(beta[static_cast<std::size_t>(g)], single_gate(spec.sites, w, u)));
      moved_u.push_back(apply(beta[static_cast<std::size_t>(g)], LocalOperator(2, w, u)));
    }
    // V'(g,h) = U~(g) b(g)(U~(h)) V(g,h) U~(gh)^dagger.
    VTable v = base.v;
    for (int g = 0; g < 2; ++g)
      for (int k = 0; k < 2; ++k) {
        const int gk = spec.group->mul(g, k);
        v(g, k) = moved_u[static_cast<std::size_t>(g)] * apply(beta[static_cast<std::size_t>(g)], moved_u[static_cast<std::size_t>(k)]) *
                  base.v(g, k) * adjoint(moved_u[static_cast<std::size_t>(gk)]);
      }
    const auto same = omega_from_vtable(spec.group, perturbed, v);
    CHECK(same.omega == base.omega);
    const auto extracted = omega_from_restriction(spec.group, perturbed);
    CHECK(class_of(extracted.omega, h) == class_of(base.omega, h));
    CHECK(extracted.max_v_residual <= 1e-9);
    CHECK(omega_from_vtable(spec.group, perturbed, extracted.v).omega == extracted.omega);
  }
}
