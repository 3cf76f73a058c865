#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "lsmidx/cli.hpp"

namespace lsmidx {

namespace {

using Rng = std::mt19937_64;

Matrix random_unitary(Index dim, Rng& rng) {
  std::normal_distribution<double> normal;
  Matrix m(dim, dim);
  for (Index r = 0; r < dim; ++r)
    for (Index c = 0; c < dim; ++c) m(r, c) = cplx(normal(rng), normal(rng));
  return polar_unitary(m);
}

QcaExpr window_gate(const SiteSpec& sites, Window w, const Matrix& u) {
  BlockLayer l;
  l.period = static_cast<int>(w.length());
  l.templates.push_back({w.lo, static_cast<int>(w.length()), u});
  l.min_site = w.lo;
  l.max_site = w.hi;
  return QcaExpr(sites, {l});
}

QcaExpr random_expr(int d, Rng& rng) {
  QcaExpr e(SiteSpec({d}));
  const int nsteps = 1 + static_cast<int>(rng() % 4);
  int budget = 2;
  for (int s = 0; s < nsteps; ++s) {
    const int kind = static_cast<int>(rng() % 3);
    if (kind == 0) {
      e.steps.emplace_back(onsite_layer(random_unitary(d, rng)));
    } else if (kind == 1 && budget > 0) {
      BlockLayer l;
      l.period = 2;
      l.templates.push_back({static_cast<long>(rng() % 2), 2, random_unitary(static_cast<Index>(d) * d, rng)});
      e.steps.emplace_back(std::move(l));
      --budget;
    } else if (budget > 0) {
      e.steps.emplace_back(ShiftPrimitive{0, rng() % 2 ? 1L : -1L});
      --budget;
    }
  }
  return e;
}

bool check_cohomology() {
  auto z2 = std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(2));
  auto k4 = std::make_shared<const FiniteGroup>(FiniteGroup::product(FiniteGroup::cyclic(2), FiniteGroup::cyclic(2)));
  return cohomology(z2, 3).factors() == std::vector<std::int64_t>{2} && cohomology(z2, 2).is_trivial() &&
         cohomology(k4, 2).factors() == std::vector<std::int64_t>{2};
}

bool check_levin_gu() {
  const auto r = anomaly_class(presets::levin_gu_z2());
  return r.verdict == Verdict::Anomalous && r.cls.residues == std::vector<std::int64_t>{1} && is_cocycle(r.omega.omega);
}

bool check_onsite() {
  const auto r = anomaly_class(presets::onsite_z2_flip());
  return r.verdict == Verdict::NonAnomalous && r.omega.omega.is_zero();
}

bool check_rephasing() {
  const auto spec = presets::levin_gu_z2();
  const auto beta = restrict_action(spec);
  const auto base = omega_from_restriction(spec.group, beta);
  const auto h = cohomology(spec.group, 3);
  Rng rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    PhaseCochain theta(spec.group, 2);
    for (std::size_t i = 0; i < theta.size(); ++i) theta.at(i) = Phase(static_cast<std::int64_t>(rng() % 24), 24);
    VTable v = base.v;
    for (int g = 0; g < 2; ++g)
      for (int k = 0; k < 2; ++k) v(g, k) = scaled(v(g, k), std::polar(1.0, 2.0 * std::numbers::pi * theta({g, k}).value()));
    const auto moved = omega_from_vtable(spec.group, beta, v);
    if (!(moved.omega == base.omega - coboundary(theta)) || !(class_of(moved.omega, h) == class_of(base.omega, h)))
      return false;
  }
  return true;
}

bool check_restriction_independence() {
  const auto spec = presets::levin_gu_z2();
  const auto beta = restrict_action(spec);
  const auto base = omega_from_restriction(spec.group, beta);
  const auto h = cohomology(spec.group, 3);
  Rng rng(102);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<QcaExpr> perturbed;
    for (int g = 0; g < 2; ++g) {
      const long lo = static_cast<long>(rng() % 4);
      perturbed.push_back(compose(beta[static_cast<std::size_t>(g)],
                                  window_gate(spec.sites, Window{lo, lo + 1}, random_unitary(4, rng))));
    }
    if (!(class_of(omega_from_restriction(spec.group, perturbed).omega, h) == class_of(base.omega, h))) return false;
  }
  return true;
}

bool check_gnvw() {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const auto e = random_expr(trial % 2 ? 3 : 2, rng);
    if (gnvw_numeric(e).index != gnvw_symbolic(e)) return false;
  }
  return true;
}

bool check_lsm() {
  const auto r = lsm_pipeline(presets::pauli_z2xz2());
  return r.mixed_anomaly && r.classes_equal;
}

bool check_eigensolvers() {
  HamiltonianSpec s;
  s.N = 8;
  s.ising = s.deformation = true;
  s.J = 0.8;
  s.a = 0.3;
  const auto h = build_hamiltonian(s);
  EigenOptions dense, lanczos;
  dense.method = EigenMethod::Dense;
  lanczos.method = EigenMethod::Lanczos;
  const auto a = lowest_eigs(h, 4, dense), b = lowest_eigs(h, 4, lanczos);
  for (int i = 0; i < 4; ++i)
    if (std::abs(a.values[static_cast<std::size_t>(i)] - b.values[static_cast<std::size_t>(i)]) > 1e-8 ||
        b.residuals[static_cast<std::size_t>(i)] > 1e-7)
      return false;
  return symmetry_commutator(h, 8) <= 1e-9;
}

bool check_determinism() {
  RunConfig cfg;
  cfg.action.preset = "levin-gu-z2";
  const auto a = run(cfg), b = run(cfg);
  return a.json == b.json && a.summary == b.summary;
}

}  // namespace

SelftestResult selftest() {
  const std::vector<std::pair<std::string, std::function<bool()>>> checks = {
      {"cohomology groups", check_cohomology},
      {"anomalous Z/2 chain", check_levin_gu},
      {"on-site action is anomaly free", check_onsite},
      {"rephasing shifts the cocycle by a coboundary", check_rephasing},
      {"class is independent of the restriction", check_restriction_independence},
      {"numeric and symbolic indices agree", check_gnvw},
      {"translation mixed anomaly matches the projective class", check_lsm},
      {"Lanczos matches dense diagonalization", check_eigensolvers},
      {"reports are deterministic", check_determinism},
  };
  SelftestResult out;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    std::string why;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      why = std::string(" (") + e.what() + ")";
    }
    out.passed = out.passed && ok;
    out.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + name + why);
  }
  return out;
}

}  // namespace lsmidx
