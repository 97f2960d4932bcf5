// algdich: run a JSON configuration and write the report.
//
//   algdich config.json [--override-gates] [--csv details.csv] [--tighten 10]
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 configuration, parse or
// gate error, 3 numerical error.

#include "algdich/runner.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Verify algebraic dichotomies and the conjugacy H/G for a configured scenario"};
  std::string config_path;
  algdich::RunOptions opts;
  std::string csv, report;
  bool quiet = false;
  app.add_option("config", config_path, "JSON run configuration")->required();
  app.add_flag("--override-gates", opts.override_gates,
               "construct the problem even when 6*K*gamma/alpha >= 1");
  app.add_option("--csv", csv, "per-sample CSV output (overrides output.csv)");
  app.add_option("--report", report, "JSON report path (overrides output.report)");
  app.add_option("--tighten", opts.tighten, "divide every tolerance by this factor")
      ->check(CLI::Range(1.0, 1e6));
  app.add_flag("-q,--quiet", quiet, "no progress messages on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : algdich::exit_codes::config_error;
  }
  if (!csv.empty()) opts.csv_path = csv;
  if (!report.empty()) opts.report_path = report;
  if (!quiet) opts.log = &std::cerr;

  algdich::RunOutcome outcome;
  try {
    outcome = algdich::run(algdich::read_config_file(config_path), opts);
  } catch (const algdich::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return algdich::exit_codes::config_error;
  }
  try {
    algdich::write_outputs(outcome, opts);
  } catch (const algdich::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return algdich::exit_codes::config_error;
  }
  return outcome.exit_code;
}
