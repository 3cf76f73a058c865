#pragma once

// Batch runs described by a JSON configuration document.

#include <optional>
#include <string>
#include <vector>

#include "lsmidx/anomaly.hpp"
#include "lsmidx/spectra.hpp"

namespace lsmidx {

enum class RunMode { Anomaly, Cohomology, Gnvw, Spectra, Selftest };

const char* mode_name(RunMode m);

struct GroupConfig {
  enum class Kind { Cyclic, Product, Table };
  Kind kind = Kind::Cyclic;
  /// Cyclic: one order. Product: the factor orders.
  std::vector<int> orders{2};
  std::vector<std::vector<int>> table;

  bool operator==(const GroupConfig&) const = default;
};

struct TemplateConfig {
  std::string name;
  int span = 1;
  Matrix unitary;

  bool operator==(const TemplateConfig& o) const;
};

struct GatePlacement {
  std::string templ;
  long anchor = 0;

  bool operator==(const GatePlacement&) const = default;
};

struct StepConfig {
  bool is_shift = false;
  int period = 1;
  std::vector<GatePlacement> gates;
  std::optional<long> min_site;
  std::optional<long> max_site;
  int register_index = 0;
  long displacement = 0;

  bool operator==(const StepConfig&) const = default;
};

/// Register layout, named gate templates, and one step list per automaton.
struct CircuitConfig {
  std::vector<int> registers{2};
  std::vector<TemplateConfig> templates;
  std::vector<std::vector<StepConfig>> exprs;

  bool operator==(const CircuitConfig&) const = default;
};

struct ActionConfig {
  /// "levin-gu-z2", "onsite", "lsm", or empty for a custom action.
  std::string preset;
  /// onsite: one matrix per element; lsm: the projective representation.
  std::vector<Matrix> matrices;
  std::optional<CircuitConfig> custom;

  bool operator==(const ActionConfig& o) const;
};

struct SpectraConfig {
  bool default_grid = true;
  std::vector<HamiltonianSpec> grid;
  int k = 3;

  bool operator==(const SpectraConfig& o) const;
};

struct RunOptions {
  double tolerance = tol::automorphism;
  long den_cap = 0;
  /// Operator dimension cap expressed in qubit sites.
  int window_cap = 12;
  int threads = 1;
  bool left_restriction = false;

  bool operator==(const RunOptions&) const = default;
};

struct OutputConfig {
  std::string dir = ".";
  std::string report = "report.json";
  std::string summary = "summary.txt";
  std::string csv = "spectra.csv";

  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  RunMode mode = RunMode::Anomaly;
  GroupConfig group;
  ActionConfig action;
  int degree = 3;
  /// Single automaton for gnvw mode; `exprs` holds exactly one entry.
  std::optional<CircuitConfig> qca;
  SpectraConfig spectra;
  RunOptions options;
  OutputConfig output;

  bool operator==(const RunConfig& o) const;
};

/// Throws ParseError for malformed JSON and ValidationError naming the field path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string serialize_config(const RunConfig& cfg);

std::shared_ptr<const FiniteGroup> build_group(const GroupConfig& g);
/// Expression of one entry of a circuit block; `path` prefixes validation messages.
QcaExpr build_expr(const CircuitConfig& c, std::size_t index, const std::string& path);
ActionSpec build_action(const RunConfig& cfg);
ProjectiveRep build_projective_rep(const RunConfig& cfg);

struct Report {
  /// Pretty-printed JSON document.
  std::string json;
  std::string summary;
  /// Spectra mode only.
  std::optional<std::string> csv;
  /// 0 on success; selftest failures give 3.
  int exit_code = 0;
};

/// Runs the configured pipeline. Library errors propagate.
Report run(const RunConfig& cfg);

/// Writes report, summary and CSV under cfg.output.dir. Throws IoError naming the path.
void emit_report(const Report& report, const OutputConfig& out);

/// 0 success, 1 validation, 2 pipeline, 3 internal.
int exit_code_for(const Error& e);

struct SelftestResult {
  bool passed = true;
  std::vector<std::string> lines;
};

/// Property suite: cocycle identities, gauge and restriction independence,
/// index agreement, eigen-solver cross-checks, determinism.
SelftestResult selftest();

}  // namespace lsmidx
