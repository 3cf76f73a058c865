#include <iostream>

#include "CLI11.hpp"
#include "lsmidx/cli.hpp"

namespace {

int run_command(const std::string& path, const std::optional<std::string>& out_dir, const std::optional<double>& tol,
                const std::optional<long>& den_cap, const std::optional<int>& window_cap,
                const std::optional<int>& threads) {
  auto cfg = lsmidx::load_config(path);
  if (out_dir) cfg.output.dir = *out_dir;
  if (tol) {
    if (!(*tol > 0.0)) lsmidx::fail(lsmidx::Errc::ValidationError, "--tol: must be positive");
    cfg.options.tolerance = *tol;
  }
  if (den_cap) {
    if (*den_cap < 0) lsmidx::fail(lsmidx::Errc::ValidationError, "--den-cap: must be non-negative");
    cfg.options.den_cap = *den_cap;
  }
  if (window_cap) {
    if (*window_cap < 2 || *window_cap > 16) lsmidx::fail(lsmidx::Errc::ValidationError, "--window-cap: must be in [2, 16]");
    cfg.options.window_cap = *window_cap;
  }
  if (threads) {
    if (*threads < 1) lsmidx::fail(lsmidx::Errc::ValidationError, "--threads: must be positive");
    cfg.options.threads = *threads;
  }
  const auto report = lsmidx::run(cfg);
  lsmidx::emit_report(report, cfg.output);
  std::cout << report.summary;
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anomaly indices of symmetries of quantum spin chains"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> out_dir;
  std::optional<double> tol;
  std::optional<long> den_cap;
  std::optional<int> window_cap, threads;
  auto* run = app.add_subcommand("run", "Run the pipeline described by a JSON config");
  run->add_option("config", config, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  run->add_option("--tol", tol, "Automorphism tolerance");
  run->add_option("--den-cap", den_cap, "Largest phase denominator (0 = 12|G|^2)");
  run->add_option("--window-cap", window_cap, "Operator size cap in qubit sites");
  run->add_option("--threads", threads, "Worker threads for spectra scans");

  auto* self = app.add_subcommand("selftest", "Run the built-in property suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return run_command(config, out_dir, tol, den_cap, window_cap, threads);
    if (*self) {
      const auto result = lsmidx::selftest();
      for (const auto& line : result.lines) std::cout << line << "\n";
      std::cout << "selftest: " << (result.passed ? "PASS" : "FAIL") << "\n";
      return result.passed ? 0 : 3;
    }
  } catch (const lsmidx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return lsmidx::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
