#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "driver.hpp"

namespace {

enum Exit : int { kOk = 0, kConfigError = 2, kSolverFailure = 3, kThresholdFailure = 4 };

}  // namespace

int main(int argc, char** argv) {
  using namespace mtbem;
  using namespace mtbem::driver;

  CLI::App app{"Boundary element solver for scattering by composite dielectric objects"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = "out";
  int threads = 1;
  std::uint64_t seed = 0;
  const auto common = [&](CLI::App* cmd, bool with_out) {
    cmd->add_option("--config", config_path, "Scene configuration (JSON)")->required()->check(CLI::ExistingFile);
    if (with_out) cmd->add_option("--out", out, "Output root directory")->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for randomized diagnostics")->capture_default_str();
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Assemble, solve and write the configured outputs");
  common(run_cmd, true);

  std::string parameter;
  std::vector<double> values;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Repeat the run over values of h, kappa0 or N");
  common(sweep_cmd, true);
  sweep_cmd->add_option("--parameter", parameter, "h, kappa0 or N (default: the config's sweep section)");
  sweep_cmd->add_option("--values", values, "Sweep values (default: the config's sweep section)");

  CLI::App* validate_cmd = app.add_subcommand("validate-config", "Check a configuration and exit");
  validate_cmd->add_option("--config", config_path, "Scene configuration (JSON)")->required();

  CLI::App* export_cmd = app.add_subcommand("export-matrix", "Write the system matrices in Matrix Market format");
  common(export_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const RunOptions options{out, threads, seed};
  try {
    const nlohmann::json document = read_json(config_path);
    const SceneConfig config = parse_config(document);

    if (*validate_cmd) {
      std::cout << config_path << ": ok (" << config.name << ")\n";
      return kOk;
    }
    if (*export_cmd) {
      for (const auto& path : export_matrices(config, out, options)) std::cout << path.string() << '\n';
      return kOk;
    }
    if (*run_cmd) {
      const RunSummary s = run(config, document, options);
      std::cout << s.directory.string() << '\n';
      return s.thresholds_met ? kOk : kThresholdFailure;
    }
    SweepSpec spec;
    if (config.sweep) spec = *config.sweep;
    if (!parameter.empty()) spec.parameter = parameter;
    if (!values.empty()) spec.values = values;
    try {
      validate_sweep(spec);
    } catch (const ConfigError& e) {
      throw e.prefixed("/sweep");
    }
    const RunSummary s = sweep(config, document, spec, options);
    std::cout << s.directory.string() << '\n';
    if (s.report.value("failed", 0) > 0) return kSolverFailure;
    return s.thresholds_met ? kOk : kThresholdFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}
