#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lsmidx/cli.hpp"

using namespace lsmidx;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) { return std::string(LSMIDX_CONFIG_DIR) + "/" + name; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Errc code_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::InvalidArgument;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lsmidx_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kNonUnitary = R"({
  "mode": "anomaly",
  "action": {
    "custom": {
      "registers": [2],
      "templates": [ { "name": "bad", "span": 1, "unitary": [[1, 1], [0, 1]] } ],
      "elements": [ { "steps": [] }, { "steps": [] } ]
    }
  }
})";

}  // namespace

TEST_CASE("minimal preset config") {
  const auto cfg = parse_config(R"({"mode": "anomaly", "action": {"preset": "levin-gu-z2"}})");
  CHECK(cfg.mode == RunMode::Anomaly);
  CHECK(cfg.group.kind == GroupConfig::Kind::Cyclic);
  CHECK(cfg.group.orders == std::vector<int>{2});
  CHECK(cfg.action.preset == "levin-gu-z2");
  CHECK(cfg.options.tolerance == 1e-9);
}

TEST_CASE("validation errors name the field path") {
  CHECK(code_of(kNonUnitary) == Errc::ValidationError);
  CHECK(message_of(kNonUnitary).find("action.custom.templates[0].unitary") != std::string::npos);

  CHECK(code_of("{\"mode\": \"anomaly\", ") == Errc::ParseError);
  CHECK(message_of(R"({"action": {"preset": "onsite"}})").find("mode: missing required field") != std::string::npos);
  CHECK(message_of(R"({"mode": "anomaly", "action": {"preset": "onsite"}, "colour": 1})").find("colour: unknown field") !=
        std::string::npos);
  CHECK(message_of(R"({"mode": "anomaly", "action": {"preset": "nope"}})").find("action.preset") != std::string::npos);
  CHECK(message_of(R"({"mode": "anomaly", "group": {"kind": "cyclic", "order": 3}, "action": {"preset": "levin-gu-z2"}})")
            .find("group") != std::string::npos);
  CHECK(message_of(R"({"mode": "spectra", "spectra": {"grid": [{"N": 7, "terms": ["H0"]}]}})")
            .find("spectra.grid[0].N") != std::string::npos);
  CHECK(message_of(R"({"mode": "spectra", "spectra": {"grid": [{"N": 8, "terms": ["H9"]}]}})")
            .find("spectra.grid[0].terms[0]") != std::string::npos);
  CHECK(message_of(R"({"mode": "gnvw"})").find("qca") != std::string::npos);
  CHECK(message_of(R"({"mode": "anomaly", "group": {"kind": "table", "table": [[0, 1], [1, 1]]}, "action": {"preset": "onsite"}})")
            .find("group.table") != std::string::npos);

  // Overlapping gate copies are rejected when the action is assembled.
  const char* overlap = R"({
    "mode": "anomaly",
    "action": { "custom": {
      "registers": [2],
      "templates": [ { "name": "cz", "span": 2, "unitary": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,-1]] } ],
      "elements": [ { "steps": [] }, { "steps": [ { "period": 1, "gates": [ { "template": "cz" } ] } ] } ] } }
  })";
  CHECK(message_of(overlap).find("action.custom.elements[1].steps[0]") != std::string::npos);
}

TEST_CASE("projective representation configs") {
  const auto cfg = load_config(config_path("lsm_pauli.json"));
  const auto rep = build_projective_rep(cfg);
  CHECK(rep.dim() == 2);
  CHECK(rep.group->order() == 4);
  CHECK(build_projective_rep(parse_config(R"({"mode": "anomaly", "group": {"kind": "product", "orders": [3, 3]},
                                              "action": {"preset": "lsm"}})"))
            .dim() == 3);
}

TEST_CASE("property: parse inverts serialize") {
  for (const auto& entry : fs::directory_iterator(LSMIDX_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    const auto cfg = load_config(entry.path().string());
    const auto text = serialize_config(cfg);
    const auto again = parse_config(text);
    CHECK(again == cfg);
    CHECK(serialize_config(again) == text);
  }
  RunConfig spectra;
  spectra.mode = RunMode::Spectra;
  spectra.spectra.default_grid = false;
  HamiltonianSpec h;
  h.N = 6;
  h.ising = h.deformation = true;
  h.J = 0.1 + 0.2;
  h.a = -1.0 / 3.0;
  h.symmetric = true;
  spectra.spectra.grid = {h};
  spectra.options.threads = 3;
  spectra.output.dir = "out dir";
  CHECK(parse_config(serialize_config(spectra)) == spectra);
}

TEST_CASE("anomaly reports") {
  const auto report = run(load_config(config_path("levin_gu.json")));
  const auto doc = nlohmann::json::parse(report.json);
  CHECK(doc["verdict"] == "Anomalous");
  CHECK(doc["class"] == nlohmann::json::array({1}));
  CHECK(doc["invariant_factors"] == nlohmann::json::array({2}));
  CHECK(doc["stacked"] == false);
  CHECK(doc["gnvw"]["1"].empty());
  REQUIRE(doc["omega"].size() == 8);
  CHECK(doc["omega"][7]["args"] == nlohmann::json::array({1, 1, 1}));
  CHECK(doc["omega"][7]["phase"] == "1/2");
  CHECK(doc["omega"][7]["snap_error"].get<double>() < 1e-8);
  CHECK(report.summary.find("verdict: Anomalous — no G-invariant gapped ground state possible\n") != std::string::npos);
  CHECK(report.exit_code == 0);

  const auto onsite = nlohmann::json::parse(run(load_config(config_path("onsite.json"))).json);
  CHECK(onsite["verdict"] == "NonAnomalous");
  for (const auto& w : onsite["omega"]) CHECK(w["phase"] == "0/1");

  const auto custom = nlohmann::json::parse(run(load_config(config_path("custom_flip.json"))).json);
  CHECK(custom["verdict"] == "NonAnomalous");
  CHECK(custom["preset"] == "custom");

  const auto lsm = nlohmann::json::parse(run(load_config(config_path("lsm_pauli.json"))).json);
  CHECK(lsm["classes_equal"] == true);
  CHECK(lsm["slant_class"] == nlohmann::json::array({1}));
  CHECK(lsm["verdict"] == "Anomalous");
}

TEST_CASE("other modes") {
  const auto coh = run(load_config(config_path("cohomology.json")));
  CHECK(coh.summary.find("H³ = ℤ/2") != std::string::npos);
  CHECK(nlohmann::json::parse(coh.json)["invariant_factors"] == nlohmann::json::array({2}));

  const auto gnvw = nlohmann::json::parse(run(load_config(config_path("gnvw_shift.json"))).json);
  CHECK(gnvw["symbolic"] == nlohmann::json({{"2", 1}}));
  CHECK(gnvw["numeric"] == nlohmann::json({{"2", 1}}));
  CHECK(gnvw["dim_right"] == 4);
  CHECK(gnvw["dim_left"] == 1);

  const auto spectra = run(parse_config(R"({"mode": "spectra", "spectra": {"grid": [
      {"N": 6, "terms": ["H0", "H1"]}, {"N": 8, "terms": ["H0"]}]}})"));
  REQUIRE(spectra.csv.has_value());
  CHECK(spectra.csv->rfind("N,J,a,E0,E1,E2,gap,gap2,charge_re,charge_im\n", 0) == 0);
  CHECK(spectra.csv->find("\n8,0,0,-8,-6,-6,2,2,") != std::string::npos);
}

TEST_CASE("reports are byte-stable and written where asked") {
  const auto cfg = load_config(config_path("levin_gu.json"));
  const auto dir = scratch_dir("emit");
  RunConfig a = cfg;
  a.output.dir = dir.string();
  emit_report(run(a), a.output);
  const auto first = read_file(dir / "report.json");
  const auto summary = read_file(dir / "summary.txt");
  emit_report(run(a), a.output);
  CHECK(read_file(dir / "report.json") == first);
  CHECK(read_file(dir / "summary.txt") == summary);
  CHECK_FALSE(fs::exists(dir / "spectra.csv"));

  RunConfig missing = cfg;
  missing.output.dir = (dir / "does" / "not" / "exist").string();
  try {
    emit_report(run(missing), missing.output);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
    CHECK(std::string(e.what()).find(missing.output.dir) != std::string::npos);
  }
  try {
    load_config((dir / "absent.json").string());
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
    CHECK(std::string(e.what()).find("absent.json") != std::string::npos);
  }
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(Error(Errc::ValidationError, "")) == 1);
  CHECK(exit_code_for(Error(Errc::ParseError, "")) == 1);
  CHECK(exit_code_for(Error(Errc::NotAHomomorphism, "")) == 1);
  CHECK(exit_code_for(Error(Errc::NotInner, "")) == 2);
  CHECK(exit_code_for(Error(Errc::SnapFailure, "")) == 2);
  CHECK(exit_code_for(Error(Errc::IoError, "")) == 2);
  CHECK(exit_code_for(Error(Errc::CocycleViolation, "")) == 3);
  CHECK(exit_code_for(Error(Errc::IndexMismatch, "")) == 3);

  // A custom map that is not a homomorphism fails action verification.
  const char* broken = R"({
    "mode": "anomaly",
    "group": { "kind": "cyclic", "order": 2 },
    "action": { "custom": {
      "registers": [2],
      "templates": [ { "name": "h", "span": 1, "unitary": [[0.7071067811865476, 0.7071067811865476], [0.7071067811865476, -0.7071067811865476]] },
                     { "name": "s", "span": 1, "unitary": [[1, 0], [0, [0, 1]]] } ],
      "elements": [ { "steps": [] }, { "steps": [ { "period": 1, "gates": [ { "template": "s" } ] } ] } ] } }
  })";
  try {
    run(parse_config(broken));
    FAIL("expected NotAHomomorphism");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NotAHomomorphism);
    CHECK(exit_code_for(e) == 1);
  }
}
