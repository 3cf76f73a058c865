#include "lsmidx/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lsmidx {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& path, const std::string& why) {
  fail(Errc::ValidationError, (path.empty() ? std::string("<root>") : path) + ": " + why);
}

/// JSON node paired with its dotted path for error messages.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    expect_object();
    if (!j_->contains(key)) invalid(child_path(key), "missing required field");
    return Node(j_->at(key), child_path(key));
  }

  std::vector<Node> items() const {
    if (!j_->is_array()) invalid(path_, "expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < j_->size(); ++i) out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  void allow(std::initializer_list<const char*> keys) const {
    expect_object();
    for (const auto& [k, v] : j_->items()) {
      bool known = false;
      for (const char* key : keys) known = known || k == key;
      if (!known) invalid(child_path(k), "unknown field");
    }
  }

  long as_long() const {
    if (!j_->is_number_integer()) invalid(path_, "expected an integer");
    return j_->get<long>();
  }
  int as_int() const {
    const long v = as_long();
    if (v < -1000000000L || v > 1000000000L) invalid(path_, "integer out of range");
    return static_cast<int>(v);
  }
  double as_double() const {
    if (!j_->is_number()) invalid(path_, "expected a number");
    const double v = j_->get<double>();
    if (!std::isfinite(v)) invalid(path_, "expected a finite number");
    return v;
  }
  bool as_bool() const {
    if (!j_->is_boolean()) invalid(path_, "expected true or false");
    return j_->get<bool>();
  }
  std::string as_string() const {
    if (!j_->is_string()) invalid(path_, "expected a string");
    return j_->get<std::string>();
  }

 private:
  void expect_object() const {
    if (!j_->is_object()) invalid(path_, "expected an object");
  }
  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* j_;
  std::string path_;
};

cplx parse_entry(const Node& n) {
  if (n.raw().is_number()) return {n.as_double(), 0.0};
  const auto parts = n.items();
  if (parts.size() != 2) invalid(n.path(), "expected a number or an [re, im] pair");
  return {parts[0].as_double(), parts[1].as_double()};
}

/// Rows of entries, each a real number or an [re, im] pair.
Matrix parse_matrix(const Node& n) {
  const auto rows = n.items();
  if (rows.empty()) invalid(n.path(), "matrix must not be empty");
  const auto dim = static_cast<Index>(rows.size());
  Matrix m(dim, dim);
  for (Index r = 0; r < dim; ++r) {
    const auto cols = rows[static_cast<std::size_t>(r)].items();
    if (static_cast<Index>(cols.size()) != dim) invalid(rows[static_cast<std::size_t>(r)].path(), "matrix must be square");
    for (Index c = 0; c < dim; ++c) m(r, c) = parse_entry(cols[static_cast<std::size_t>(c)]);
  }
  return m;
}

Matrix parse_unitary(const Node& n) {
  Matrix m = parse_matrix(n);
  if (!is_unitary(m)) invalid(n.path(), "matrix is not unitary within 1e-9");
  return m;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

RunMode parse_mode(const Node& n) {
  const auto s = n.as_string();
  for (RunMode m : {RunMode::Anomaly, RunMode::Cohomology, RunMode::Gnvw, RunMode::Spectra, RunMode::Selftest})
    if (s == mode_name(m)) return m;
  invalid(n.path(), "unknown mode '" + s + "' (anomaly, cohomology, gnvw, spectra, selftest)");
}

GroupConfig parse_group(const Node& n) {
  n.allow({"kind", "order", "orders", "table"});
  GroupConfig g;
  const auto kind = n.at("kind").as_string();
  if (kind == "cyclic") {
    g.kind = GroupConfig::Kind::Cyclic;
    const int order = n.at("order").as_int();
    if (order < 1) invalid(n.at("order").path(), "order must be positive");
    g.orders = {order};
  } else if (kind == "product") {
    g.kind = GroupConfig::Kind::Product;
    g.orders.clear();
    for (const auto& o : n.at("orders").items()) {
      const int v = o.as_int();
      if (v < 1) invalid(o.path(), "order must be positive");
      g.orders.push_back(v);
    }
    if (g.orders.empty()) invalid(n.at("orders").path(), "at least one factor is required");
  } else if (kind == "table") {
    g.kind = GroupConfig::Kind::Table;
    g.orders.clear();
    for (const auto& row : n.at("table").items()) {
      std::vector<int> r;
      for (const auto& x : row.items()) r.push_back(x.as_int());
      g.table.push_back(std::move(r));
    }
    try {
      FiniteGroup check(g.table);
    } catch (const Error& e) {
      invalid(n.at("table").path(), e.what());
    }
  } else {
    invalid(n.at("kind").path(), "unknown group kind '" + kind + "' (cyclic, product, table)");
  }
  return g;
}

json group_json(const GroupConfig& g) {
  switch (g.kind) {
    case GroupConfig::Kind::Cyclic: return {{"kind", "cyclic"}, {"order", g.orders.at(0)}};
    case GroupConfig::Kind::Product: return {{"kind", "product"}, {"orders", g.orders}};
    case GroupConfig::Kind::Table: return {{"kind", "table"}, {"table", g.table}};
  }
  return {};
}

int site_dim_of(const std::vector<int>& registers) {
  long d = 1;
  for (int r : registers) d *= r;
  return static_cast<int>(d);
}

std::vector<StepConfig> parse_steps(const Node& n, const std::vector<TemplateConfig>& templates, int nregs) {
  std::vector<StepConfig> steps;
  for (const auto& s : n.items()) {
    StepConfig step;
    if (s.has("shift")) {
      s.allow({"shift"});
      const Node sh = s.at("shift");
      sh.allow({"register", "displacement"});
      step.is_shift = true;
      step.register_index = sh.has("register") ? sh.at("register").as_int() : 0;
      if (step.register_index < 0 || step.register_index >= nregs)
        invalid(sh.path() + ".register", "register index out of range");
      step.displacement = sh.at("displacement").as_long();
    } else {
      s.allow({"period", "gates", "min_site", "max_site"});
      step.period = s.at("period").as_int();
      if (step.period < 1) invalid(s.at("period").path(), "period must be positive");
      for (const auto& g : s.at("gates").items()) {
        g.allow({"template", "anchor"});
        GatePlacement p{g.at("template").as_string(), g.has("anchor") ? g.at("anchor").as_long() : 0};
        bool found = false;
        for (const auto& t : templates) found = found || t.name == p.templ;
        if (!found) invalid(g.at("template").path(), "unknown template '" + p.templ + "'");
        step.gates.push_back(std::move(p));
      }
      if (s.has("min_site")) step.min_site = s.at("min_site").as_long();
      if (s.has("max_site")) step.max_site = s.at("max_site").as_long();
    }
    steps.push_back(std::move(step));
  }
  return steps;
}

json steps_json(const std::vector<StepConfig>& steps) {
  json out = json::array();
  for (const auto& s : steps) {
    if (s.is_shift) {
      out.push_back({{"shift", {{"register", s.register_index}, {"displacement", s.displacement}}}});
      continue;
    }
    json gates = json::array();
    for (const auto& g : s.gates) gates.push_back({{"template", g.templ}, {"anchor", g.anchor}});
    json layer = {{"period", s.period}, {"gates", gates}};
    if (s.min_site) layer["min_site"] = *s.min_site;
    if (s.max_site) layer["max_site"] = *s.max_site;
    out.push_back(std::move(layer));
  }
  return out;
}

/// `many` reads an "elements" array of step lists, otherwise a single "steps" list.
CircuitConfig parse_circuit(const Node& n, bool many) {
  if (many)
    n.allow({"registers", "templates", "elements"});
  else
    n.allow({"registers", "templates", "steps"});
  CircuitConfig c;
  c.registers.clear();
  for (const auto& r : n.at("registers").items()) {
    const int v = r.as_int();
    if (v < 2) invalid(r.path(), "register dimension must be at least 2");
    c.registers.push_back(v);
  }
  if (c.registers.empty()) invalid(n.at("registers").path(), "at least one register is required");
  const int d = site_dim_of(c.registers);
  if (n.has("templates"))
    for (const auto& t : n.at("templates").items()) {
      t.allow({"name", "span", "unitary"});
      TemplateConfig tc;
      tc.name = t.at("name").as_string();
      for (const auto& other : c.templates)
        if (other.name == tc.name) invalid(t.at("name").path(), "duplicate template name");
      tc.span = t.at("span").as_int();
      if (tc.span < 1 || tc.span > 6) invalid(t.at("span").path(), "span must be in [1, 6]");
      tc.unitary = parse_unitary(t.at("unitary"));
      const double expected = std::pow(static_cast<double>(d), tc.span);
      if (static_cast<double>(tc.unitary.rows()) != expected)
        invalid(t.at("unitary").path(), "dimension " + std::to_string(tc.unitary.rows()) + " does not match d^span = " +
                                            std::to_string(static_cast<long>(expected)));
      c.templates.push_back(std::move(tc));
    }
  const int nregs = static_cast<int>(c.registers.size());
  if (many) {
    for (const auto& e : n.at("elements").items()) {
      e.allow({"steps"});
      c.exprs.push_back(parse_steps(e.at("steps"), c.templates, nregs));
    }
  } else {
    c.exprs.push_back(parse_steps(n.at("steps"), c.templates, nregs));
  }
  return c;
}

json circuit_json(const CircuitConfig& c, bool many) {
  json templates = json::array();
  for (const auto& t : c.templates)
    templates.push_back({{"name", t.name}, {"span", t.span}, {"unitary", matrix_json(t.unitary)}});
  json out = {{"registers", c.registers}, {"templates", templates}};
  if (many) {
    json elements = json::array();
    for (const auto& e : c.exprs) elements.push_back({{"steps", steps_json(e)}});
    out["elements"] = elements;
  } else {
    out["steps"] = steps_json(c.exprs.at(0));
  }
  return out;
}

const char* kTermNames[] = {"H0", "H1", "HJ", "Ha"};

HamiltonianSpec parse_hamiltonian(const Node& n) {
  n.allow({"N", "J", "a", "terms", "symmetric"});
  HamiltonianSpec h;
  h.N = n.at("N").as_int();
  if (h.N < 4 || h.N > max_sites || h.N % 2 != 0)
    invalid(n.at("N").path(), "chain length must be even and in [4, " + std::to_string(max_sites) + "]");
  if (n.has("J")) h.J = n.at("J").as_double();
  if (n.has("a")) h.a = n.at("a").as_double();
  h.paramagnet = h.cluster = h.ising = h.deformation = false;
  for (const auto& t : n.at("terms").items()) {
    const auto s = t.as_string();
    if (s == "H0") h.paramagnet = true;
    else if (s == "H1") h.cluster = true;
    else if (s == "HJ") h.ising = true;
    else if (s == "Ha") h.deformation = true;
    else invalid(t.path(), "unknown term '" + s + "' (H0, H1, HJ, Ha)");
  }
  h.symmetric = n.has("symmetric") ? n.at("symmetric").as_bool() : h.paramagnet == h.cluster;
  return h;
}

json hamiltonian_json(const HamiltonianSpec& h) {
  json terms = json::array();
  const bool on[] = {h.paramagnet, h.cluster, h.ising, h.deformation};
  for (int i = 0; i < 4; ++i)
    if (on[i]) terms.push_back(kTermNames[i]);
  return {{"N", h.N}, {"J", h.J}, {"a", h.a}, {"terms", terms}, {"symmetric", h.symmetric}};
}

std::string group_label(const FiniteGroup& g) {
  std::string name = g.name();
  if (name.empty()) return "order-" + std::to_string(g.order()) + " group";
  std::string out;
  for (std::size_t i = 0; i < name.size(); ++i) {
    if (name.compare(i, 2, "Z/") == 0) {
      out += "ℤ/";
      ++i;
    } else if (name.compare(i, 3, " x ") == 0) {
      out += "×";
      i += 2;
    } else {
      out += name[i];
    }
  }
  return out;
}

/// Six significant digits so that reports are byte-stable.
double fixed(double x) {
  if (x == 0.0 || !std::isfinite(x)) return 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::strtod(buf, nullptr);
}

double sig12(double x) {
  if (x == 0.0 || !std::isfinite(x)) return 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return std::strtod(buf, nullptr);
}

ojson prime_log_json(const PrimeLog& p) {
  ojson out = ojson::object();
  for (const auto& [prime, exp] : p) out[std::to_string(prime)] = exp;
  return out;
}

ojson cochain_json(const PhaseCochain& f, const std::vector<double>* errors = nullptr) {
  ojson out = ojson::array();
  for (std::size_t i = 0; i < f.size(); ++i) {
    ojson e = {{"args", f.args(i)}, {"phase", f.at(i).str()}};
    if (errors) e["snap_error"] = fixed(errors->at(i));
    out.push_back(std::move(e));
  }
  return out;
}

ojson matrix_report(const Matrix& m) {
  ojson rows = ojson::array();
  for (Index r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(ojson::array({fixed(m(r, c).real()), fixed(m(r, c).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string superscript(int n) {
  static const char* digits[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
  if (n < 0) return "^" + std::to_string(n);
  std::string s = std::to_string(n), out;
  for (char c : s) out += digits[c - '0'];
  return out;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

void apply_caps(const RunConfig& cfg) { set_window_cap_sites(cfg.options.window_cap); }

AnomalyOptions anomaly_options(const RunConfig& cfg) {
  AnomalyOptions o;
  o.tolerance = cfg.options.tolerance;
  o.den_cap = cfg.options.den_cap;
  o.left_restriction = cfg.options.left_restriction;
  return o;
}

Report run_anomaly(const RunConfig& cfg) {
  const auto spec = build_action(cfg);
  const auto r = anomaly_class(spec, anomaly_options(cfg));

  ojson gnvw = ojson::object();
  for (std::size_t g = 0; g < r.gnvw.size(); ++g) gnvw[std::to_string(g)] = prime_log_json(r.gnvw[g]);
  ojson vtable = ojson::array();
  for (int g = 0; g < r.omega.v.order; ++g)
    for (int h = 0; h < r.omega.v.order; ++h) {
      const auto& gate = r.omega.v(g, h);
      vtable.push_back({{"args", {g, h}},
                        {"window", {gate.window().lo, gate.window().hi}},
                        {"residual", fixed(r.omega.v.residuals.at(static_cast<std::size_t>(g * r.omega.v.order + h)))},
                        {"matrix", matrix_report(gate.matrix())}});
    }
  double max_snap = 0.0;
  for (double e : r.omega.snap_errors) max_snap = std::max(max_snap, e);

  ojson doc;
  doc["mode"] = "anomaly";
  doc["preset"] = cfg.action.preset.empty() ? "custom" : cfg.action.preset;
  doc["group"] = group_label(*spec.group);
  doc["gnvw"] = gnvw;
  doc["stacked"] = r.stacked;
  doc["omega"] = cochain_json(r.omega.omega, &r.omega.snap_errors);
  doc["invariant_factors"] = r.cohomology.factors();
  doc["class"] = r.cls.residues;
  doc["verdict"] = verdict_name(r.verdict);
  doc["statement"] = r.statement();
  doc["diagnostics"] = {{"action_residual", fixed(r.action.max_residual)},
                        {"max_scalar_deviation", fixed(r.omega.max_scalar_deviation)},
                        {"max_v_residual", fixed(r.omega.max_v_residual)},
                        {"max_v_window", r.omega.max_v_window},
                        {"max_snap_error", fixed(max_snap)},
                        {"gauge_averaged", r.omega.gauge_averaged},
                        {"v", vtable}};

  std::ostringstream s;
  s << "mode: anomaly\n";
  s << "group: " << group_label(*spec.group) << "\n";
  s << "stacked: " << (r.stacked ? "yes" : "no") << "\n";
  s << "H" << superscript(3) << "(G, U(1)) = " << r.cohomology.str() << "\n";
  s << "class: " << r.cls.str() << "\n";
  s << "verdict: " << verdict_name(r.verdict) << " — " << r.statement() << "\n";
  return {dump(doc), s.str(), std::nullopt, 0};
}

Report run_lsm(const RunConfig& cfg) {
  const auto rep = build_projective_rep(cfg);
  const auto r = lsm_pipeline(rep, anomaly_options(cfg));
  ojson samples = ojson::array();
  for (const auto& smp : r.samples) {
    ojson args = ojson::array();
    for (const auto& a : smp.args) args.push_back({a.g, a.n});
    samples.push_back({{"args", args}, {"phase", smp.value.phase.str()}, {"snap_error", fixed(smp.value.error)}});
  }
  const Verdict verdict = r.mixed_anomaly ? Verdict::Anomalous : Verdict::NonAnomalous;
  const std::string statement = r.mixed_anomaly
                                    ? "mixed anomaly with translations; no G-invariant gapped ground state possible"
                                    : "mixed anomaly vanishes; no obstruction to G-invariant gapped ground states";
  ojson doc;
  doc["mode"] = "anomaly";
  doc["preset"] = "lsm";
  doc["group"] = group_label(*rep.group) + " × ℤ";
  doc["rho"] = cochain_json(r.rho);
  doc["rho_class"] = r.rho_class.residues;
  doc["slant"] = cochain_json(r.slant);
  doc["slant_class"] = r.slant_class.residues;
  doc["invariant_factors"] = r.h2.factors();
  doc["classes_equal"] = r.classes_equal;
  doc["mixed_anomaly"] = r.mixed_anomaly;
  doc["omega_samples"] = samples;
  doc["verdict"] = verdict_name(verdict);
  doc["statement"] = statement;
  doc["diagnostics"] = {{"action_residual", fixed(r.max_action_residual)},
                        {"max_scalar_deviation", fixed(r.max_scalar_deviation)},
                        {"max_v_residual", fixed(r.max_v_residual)},
                        {"max_v_window", r.max_v_window},
                        {"max_snap_error", fixed(r.max_snap_error)}};
  std::ostringstream s;
  s << "mode: anomaly (lsm)\n";
  s << "group: " << group_label(*rep.group) << " × ℤ\n";
  s << "H" << superscript(2) << "(G0, U(1)) = " << r.h2.str() << "\n";
  s << "projective class: " << r.rho_class.str() << "\n";
  s << "slant class: " << r.slant_class.str() << "\n";
  s << "classes equal: " << (r.classes_equal ? "yes" : "no") << "\n";
  s << "verdict: " << verdict_name(verdict) << " — " << statement << "\n";
  return {dump(doc), s.str(), std::nullopt, 0};
}

Report run_cohomology(const RunConfig& cfg) {
  const auto group = build_group(cfg.group);
  const auto h = cohomology(group, cfg.degree);
  ojson gens = ojson::array();
  for (const auto& g : h.generators()) gens.push_back(cochain_json(g));
  ojson doc;
  doc["mode"] = "cohomology";
  doc["group"] = group_label(*group);
  doc["degree"] = cfg.degree;
  doc["invariant_factors"] = h.factors();
  doc["cohomology"] = h.str();
  doc["generators"] = gens;
  doc["warnings"] = h.warnings();
  std::ostringstream s;
  s << "mode: cohomology\n";
  s << "group: " << group_label(*group) << "\n";
  s << "H" << superscript(cfg.degree) << " = " << h.str() << "\n";
  return {dump(doc), s.str(), std::nullopt, 0};
}

Report run_gnvw(const RunConfig& cfg) {
  const auto expr = build_expr(*cfg.qca, 0, "qca");
  const auto symbolic = gnvw_symbolic(expr);
  const auto numeric = gnvw_numeric(expr);
  ojson doc;
  doc["mode"] = "gnvw";
  doc["registers"] = expr.sites.registers();
  doc["symbolic"] = prime_log_json(symbolic);
  doc["numeric"] = prime_log_json(numeric.index);
  doc["dim_right"] = numeric.dim_right;
  doc["dim_left"] = numeric.dim_left;
  doc["radius"] = numeric.radius;
  doc["agree"] = symbolic == numeric.index;
  std::ostringstream s;
  s << "mode: gnvw\n";
  s << "index: " << to_string(numeric.index) << "\n";
  s << "support algebras: right " << numeric.dim_right << ", left " << numeric.dim_left << "\n";
  return {dump(doc), s.str(), std::nullopt, 0};
}

Report run_spectra(const RunConfig& cfg) {
  const auto& grid = cfg.spectra.default_grid ? default_grid() : cfg.spectra.grid;
  const auto rows = gap_scan(grid, cfg.spectra.k, cfg.options.threads);
  const auto witness = anomaly_witness(rows);
  ojson jrows = ojson::array();
  for (const auto& r : rows) {
    ojson row = {{"N", r.spec.N}, {"J", r.spec.J}, {"a", r.spec.a}, {"terms", r.spec.terms_label()},
                 {"symmetric", r.spec.symmetric}};
    if (r.error) {
      row["error"] = *r.error;
    } else {
      ojson energies = ojson::array();
      for (double e : r.energies) energies.push_back(sig12(e));
      row["energies"] = energies;
      row["gap"] = sig12(r.gap);
      row["gap2"] = sig12(r.gap2);
      auto chop = [](double x) { return std::abs(x) < 1e-13 ? 0.0 : sig12(x); };
      row["charge"] = {chop(r.charge.real()), chop(r.charge.imag())};
      row["max_residual"] = fixed(r.max_residual);
      row["commutator"] = fixed(r.commutator);
    }
    jrows.push_back(std::move(row));
  }
  ojson doc;
  doc["mode"] = "spectra";
  doc["rows"] = jrows;
  doc["witness"] = {{"holds", witness.holds}, {"notes", witness.notes}};
  std::ostringstream s;
  s << "mode: spectra\n";
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.error.has_value();
  s << "rows: " << rows.size() << " (" << failed << " failed)\n";
  for (const auto& n : witness.notes) s << "  " << n << "\n";
  s << "witness: " << (witness.holds ? "holds" : "violated") << "\n";
  return {dump(doc), s.str(), spectrum_csv(rows), 0};
}

Report run_selftest() {
  const auto result = selftest();
  ojson doc;
  doc["mode"] = "selftest";
  doc["passed"] = result.passed;
  doc["checks"] = result.lines;
  std::string summary;
  for (const auto& l : result.lines) summary += l + "\n";
  summary += std::string("selftest: ") + (result.passed ? "PASS" : "FAIL") + "\n";
  return {dump(doc), summary, std::nullopt, result.passed ? 0 : 3};
}

}  // namespace

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::Anomaly: return "anomaly";
    case RunMode::Cohomology: return "cohomology";
    case RunMode::Gnvw: return "gnvw";
    case RunMode::Spectra: return "spectra";
    case RunMode::Selftest: return "selftest";
  }
  return "unknown";
}

bool TemplateConfig::operator==(const TemplateConfig& o) const {
  return name == o.name && span == o.span && unitary.rows() == o.unitary.rows() && unitary == o.unitary;
}

bool ActionConfig::operator==(const ActionConfig& o) const {
  if (preset != o.preset || custom != o.custom || matrices.size() != o.matrices.size()) return false;
  for (std::size_t i = 0; i < matrices.size(); ++i)
    if (matrices[i].rows() != o.matrices[i].rows() || matrices[i] != o.matrices[i]) return false;
  return true;
}

bool SpectraConfig::operator==(const SpectraConfig& o) const {
  return default_grid == o.default_grid && grid == o.grid && k == o.k;
}

bool RunConfig::operator==(const RunConfig& o) const {
  return mode == o.mode && group == o.group && action == o.action && degree == o.degree && qca == o.qca &&
         spectra == o.spectra && options == o.options && output == o.output;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(Errc::ParseError, e.what());
  }
  const Node root(doc, "");
  root.allow({"mode", "group", "action", "degree", "qca", "spectra", "options", "output"});
  RunConfig cfg;
  cfg.mode = parse_mode(root.at("mode"));
  if (root.has("group")) cfg.group = parse_group(root.at("group"));

  if (root.has("action")) {
    const Node a = root.at("action");
    a.allow({"preset", "matrices", "custom"});
    if (a.has("preset")) {
      cfg.action.preset = a.at("preset").as_string();
      if (cfg.action.preset != "levin-gu-z2" && cfg.action.preset != "onsite" && cfg.action.preset != "lsm")
        invalid(a.at("preset").path(), "unknown preset '" + cfg.action.preset + "' (levin-gu-z2, onsite, lsm)");
      if (a.has("custom")) invalid(a.at("custom").path(), "a preset and a custom action are mutually exclusive");
    } else if (!a.has("custom")) {
      invalid(a.path(), "either preset or custom is required");
    }
    if (a.has("matrices")) {
      if (cfg.action.preset != "onsite" && cfg.action.preset != "lsm")
        invalid(a.at("matrices").path(), "matrices are only read by the onsite and lsm presets");
      for (const auto& m : a.at("matrices").items()) cfg.action.matrices.push_back(parse_unitary(m));
      for (std::size_t i = 1; i < cfg.action.matrices.size(); ++i)
        if (cfg.action.matrices[i].rows() != cfg.action.matrices[0].rows())
          invalid(a.at("matrices").path() + "[" + std::to_string(i) + "]", "all matrices must have the same dimension");
    }
    if (a.has("custom")) cfg.action.custom = parse_circuit(a.at("custom"), true);
  } else if (cfg.mode == RunMode::Anomaly) {
    invalid("action", "missing required field");
  }

  if (root.has("degree")) {
    cfg.degree = root.at("degree").as_int();
    if (cfg.degree < 1) invalid("degree", "degree must be at least 1");
  }
  if (root.has("qca")) cfg.qca = parse_circuit(root.at("qca"), false);
  else if (cfg.mode == RunMode::Gnvw) invalid("qca", "missing required field");

  if (root.has("spectra")) {
    const Node s = root.at("spectra");
    s.allow({"grid", "k"});
    if (s.has("grid")) {
      cfg.spectra.default_grid = false;
      for (const auto& h : s.at("grid").items()) cfg.spectra.grid.push_back(parse_hamiltonian(h));
      if (cfg.spectra.grid.empty()) invalid(s.at("grid").path(), "grid must not be empty");
    }
    if (s.has("k")) {
      cfg.spectra.k = s.at("k").as_int();
      if (cfg.spectra.k < 1 || cfg.spectra.k > 8) invalid(s.at("k").path(), "k must be in [1, 8]");
    }
  }

  if (root.has("options")) {
    const Node o = root.at("options");
    o.allow({"tolerance", "den_cap", "window_cap", "threads", "left_restriction"});
    if (o.has("tolerance")) {
      cfg.options.tolerance = o.at("tolerance").as_double();
      if (cfg.options.tolerance <= 0.0) invalid(o.at("tolerance").path(), "tolerance must be positive");
    }
    if (o.has("den_cap")) {
      cfg.options.den_cap = o.at("den_cap").as_long();
      if (cfg.options.den_cap < 0) invalid(o.at("den_cap").path(), "den_cap must be non-negative");
    }
    if (o.has("window_cap")) {
      cfg.options.window_cap = o.at("window_cap").as_int();
      if (cfg.options.window_cap < 2 || cfg.options.window_cap > 16)
        invalid(o.at("window_cap").path(), "window_cap must be in [2, 16]");
    }
    if (o.has("threads")) {
      cfg.options.threads = o.at("threads").as_int();
      if (cfg.options.threads < 1) invalid(o.at("threads").path(), "threads must be positive");
    }
    if (o.has("left_restriction")) cfg.options.left_restriction = o.at("left_restriction").as_bool();
  }

  if (root.has("output")) {
    const Node o = root.at("output");
    o.allow({"dir", "report", "summary", "csv"});
    if (o.has("dir")) cfg.output.dir = o.at("dir").as_string();
    if (o.has("report")) cfg.output.report = o.at("report").as_string();
    if (o.has("summary")) cfg.output.summary = o.at("summary").as_string();
    if (o.has("csv")) cfg.output.csv = o.at("csv").as_string();
  }

  if (cfg.mode == RunMode::Anomaly) {
    // Surface mismatches between group, preset and matrices as validation errors.
    if (cfg.action.preset == "lsm")
      build_projective_rep(cfg);
    else
      build_action(cfg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  json doc;
  doc["mode"] = mode_name(cfg.mode);
  doc["group"] = group_json(cfg.group);
  json action = json::object();
  if (!cfg.action.preset.empty()) action["preset"] = cfg.action.preset;
  if (!cfg.action.matrices.empty()) {
    json ms = json::array();
    for (const auto& m : cfg.action.matrices) ms.push_back(matrix_json(m));
    action["matrices"] = ms;
  }
  if (cfg.action.custom) action["custom"] = circuit_json(*cfg.action.custom, true);
  if (!action.empty()) doc["action"] = action;
  doc["degree"] = cfg.degree;
  if (cfg.qca) doc["qca"] = circuit_json(*cfg.qca, false);
  json spectra = {{"k", cfg.spectra.k}};
  if (!cfg.spectra.default_grid) {
    json grid = json::array();
    for (const auto& h : cfg.spectra.grid) grid.push_back(hamiltonian_json(h));
    spectra["grid"] = grid;
  }
  doc["spectra"] = spectra;
  doc["options"] = {{"tolerance", cfg.options.tolerance},
                    {"den_cap", cfg.options.den_cap},
                    {"window_cap", cfg.options.window_cap},
                    {"threads", cfg.options.threads},
                    {"left_restriction", cfg.options.left_restriction}};
  doc["output"] = {{"dir", cfg.output.dir},
                   {"report", cfg.output.report},
                   {"summary", cfg.output.summary},
                   {"csv", cfg.output.csv}};
  return doc.dump(2) + "\n";
}

std::shared_ptr<const FiniteGroup> build_group(const GroupConfig& g) {
  switch (g.kind) {
    case GroupConfig::Kind::Cyclic: return std::make_shared<const FiniteGroup>(FiniteGroup::cyclic(g.orders.at(0)));
    case GroupConfig::Kind::Product: {
      FiniteGroup acc = FiniteGroup::cyclic(g.orders.at(0));
      for (std::size_t i = 1; i < g.orders.size(); ++i) acc = FiniteGroup::product(acc, FiniteGroup::cyclic(g.orders[i]));
      return std::make_shared<const FiniteGroup>(std::move(acc));
    }
    case GroupConfig::Kind::Table: return std::make_shared<const FiniteGroup>(FiniteGroup(g.table));
  }
  fail(Errc::InvalidArgument, "unknown group kind");
}

QcaExpr build_expr(const CircuitConfig& c, std::size_t index, const std::string& path) {
  const SiteSpec sites(c.registers);
  QcaExpr e(sites);
  const auto& steps = c.exprs.at(index);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& s = steps[i];
    const std::string spath = path + ".steps[" + std::to_string(i) + "]";
    if (s.is_shift) {
      e.steps.emplace_back(ShiftPrimitive{s.register_index, s.displacement});
      continue;
    }
    BlockLayer layer;
    layer.period = s.period;
    layer.min_site = s.min_site;
    layer.max_site = s.max_site;
    for (const auto& g : s.gates)
      for (const auto& t : c.templates)
        if (t.name == g.templ) layer.templates.push_back({g.anchor, t.span, t.unitary});
    try {
      validate_layer(layer, sites);
    } catch (const Error& err) {
      invalid(spath, err.what());
    }
    e.steps.emplace_back(std::move(layer));
  }
  return e;
}

ActionSpec build_action(const RunConfig& cfg) {
  const auto group = build_group(cfg.group);
  const auto& a = cfg.action;
  if (a.preset == "levin-gu-z2") {
    if (group->order() != 2) invalid("group", "the levin-gu-z2 preset acts by Z/2");
    return presets::levin_gu_z2();
  }
  if (a.preset == "onsite") {
    std::vector<Matrix> rep = a.matrices;
    if (rep.empty()) {
      if (group->order() != 2) invalid("action.matrices", "required unless the group has order 2");
      return presets::onsite_z2_flip();
    }
    if (static_cast<int>(rep.size()) != group->order())
      invalid("action.matrices", "expected one matrix per group element (" + std::to_string(group->order()) + ")");
    return presets::onsite(group, rep);
  }
  if (a.preset == "lsm") invalid("action.preset", "lsm describes a projective representation, not an action");
  if (!a.custom) invalid("action", "either preset or custom is required");
  const auto& c = *a.custom;
  if (static_cast<int>(c.exprs.size()) != group->order())
    invalid("action.custom.elements",
            "expected one automaton per group element (" + std::to_string(group->order()) + ")");
  ActionSpec spec{group, SiteSpec(c.registers), {}};
  for (std::size_t i = 0; i < c.exprs.size(); ++i)
    spec.map.push_back(build_expr(c, i, "action.custom.elements[" + std::to_string(i) + "]"));
  return spec;
}

ProjectiveRep build_projective_rep(const RunConfig& cfg) {
  const auto group = build_group(cfg.group);
  ProjectiveRep rep;
  if (!cfg.action.matrices.empty()) {
    if (static_cast<int>(cfg.action.matrices.size()) != group->order())
      invalid("action.matrices", "expected one matrix per group element (" + std::to_string(group->order()) + ")");
    rep.group = group;
    rep.matrices = cfg.action.matrices;
  } else if (cfg.group.kind == GroupConfig::Kind::Cyclic && cfg.group.orders.at(0) == 2) {
    rep = presets::z2_flip();
  } else if (cfg.group.kind == GroupConfig::Kind::Product && cfg.group.orders.size() == 2 &&
             cfg.group.orders[0] == cfg.group.orders[1]) {
    rep = cfg.group.orders[0] == 2 ? presets::pauli_z2xz2() : presets::weyl(cfg.group.orders[0]);
  } else {
    invalid("action.matrices", "required unless the group is Z/2 or Z/n x Z/n");
  }
  try {
    rep.validate();
  } catch (const Error& e) {
    invalid("action.matrices", e.what());
  }
  return rep;
}

Report run(const RunConfig& cfg) {
  apply_caps(cfg);
  switch (cfg.mode) {
    case RunMode::Anomaly: return cfg.action.preset == "lsm" ? run_lsm(cfg) : run_anomaly(cfg);
    case RunMode::Cohomology: return run_cohomology(cfg);
    case RunMode::Gnvw: return run_gnvw(cfg);
    case RunMode::Spectra: return run_spectra(cfg);
    case RunMode::Selftest: return run_selftest();
  }
  fail(Errc::InvalidArgument, "unknown mode");
}

void emit_report(const Report& report, const OutputConfig& out) {
  namespace fs = std::filesystem;
  const fs::path dir(out.dir);
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(Errc::IoError, "output directory does not exist: " + dir.string());
  auto write = [&](const std::string& name, const std::string& content) {
    const fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) fail(Errc::IoError, "cannot open " + p.string() + " for writing");
    f << content;
    f.close();
    if (!f) fail(Errc::IoError, "failed writing " + p.string());
  };
  write(out.report, report.json);
  write(out.summary, report.summary);
  if (report.csv) write(out.csv, *report.csv);
}

int exit_code_for(const Error& e) {
  switch (severity(e.code())) {
    case Severity::Validation: return 1;
    case Severity::Pipeline: return 2;
    case Severity::Internal: return 3;
  }
  return 3;
}

}  // namespace lsmidx
