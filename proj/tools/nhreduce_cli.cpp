// Command-line front end: simulate runs, verify trajectory files, and run
// cross-level comparisons. See README.md for the config and CSV formats.

#include <CLI11.hpp>
#include <string>

#include "nhreduce/cli_support.hpp"

int main(int argc, char** argv) {
  CLI::App app{"discrete nonholonomic integrator and reduction checks"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path, full_csv, reduced_csv;
  std::string mode = "project";
  double tol = 1e-9;
  bool sweep = false;

  CLI::App* simulate = app.add_subcommand("simulate", "integrate a configured run");
  simulate->add_option("--config", config_path, "JSON run configuration")->required();
  simulate->add_option("--out", out_path, "output CSV path")->required();
  simulate->add_flag("--sweep", sweep,
                     "config is a JSON array; run all entries (out is a prefix)");

  CLI::App* check = app.add_subcommand("check", "verify a trajectory CSV");
  check->add_option("--config", config_path, "JSON run configuration")->required();
  check->add_option("--in", in_path, "trajectory CSV to verify")->required();

  CLI::App* compare = app.add_subcommand("compare", "cross-level correspondence check");
  compare->add_option("--config", config_path, "JSON run configuration")->required();
  compare->add_option("--full", full_csv, "full-level trajectory CSV")->required();
  compare->add_option("--reduced", reduced_csv, "reduced-level trajectory CSV")->required();
  compare->add_option("--mode", mode,
                      "project | reconstruct | momentum | connection | staged");
  compare->add_option("--tol", tol, "acceptance tolerance");

  CLI11_PARSE(app, argc, argv);

  if (simulate->parsed())
    return sweep ? nhreduce::cli::cmd_sweep(config_path, out_path)
                 : nhreduce::cli::cmd_simulate(config_path, out_path);
  if (check->parsed()) return nhreduce::cli::cmd_check(config_path, in_path);
  return nhreduce::cli::cmd_compare(config_path, full_csv, reduced_csv, mode, tol);
}
