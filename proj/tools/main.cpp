// varorder: Bayesian order determination for stationary vector autoregressions.
//
// Subcommands:
//   simulate  draw a random stationary VAR and a dataset from it
//   fit       sample the order-shrinkage posterior for a CSV dataset
//   analyze   re-run posterior summaries on a finished run directory
//   study     simulate-and-fit over a grid of scenario cells
//   diagnose  recompute convergence diagnostics for a run directory

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "varorder/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian order determination for stationary vector autoregressions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("varorder ") + varorder::kVersion);

  std::string spec_path, data_path, config_path, run_dir, out_dir;
  varorder::AnalyzeOptions analyze_opts;

  CLI::App* sim = app.add_subcommand("simulate", "Generate a stationary VAR dataset");
  sim->add_option("spec", spec_path, "Simulation spec (JSON)")->required();
  sim->add_option("-o,--out", out_dir, "Output directory")->required();

  CLI::App* fit = app.add_subcommand("fit", "Fit the order-shrinkage posterior to a dataset");
  fit->add_option("data", data_path, "Dataset CSV (header row, one column per series)")->required();
  fit->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
  fit->add_option("-o,--out", out_dir, "Run directory to create")->required();

  CLI::App* analyze = app.add_subcommand("analyze", "Recompute summaries for a run directory");
  analyze->add_option("run", run_dir, "Run directory produced by fit")->required();
  analyze->add_option("--beta", analyze_opts.beta, "Override the simultaneous credible level");
  analyze->add_option("--components", analyze_opts.k_components,
                      "Override the number of latent components summarized");
  analyze->add_flag("!--no-granger", analyze_opts.granger, "Skip the causality graph");
  analyze->add_flag("!--no-decompose", analyze_opts.decompose, "Skip the latent decomposition");
  analyze->add_option("--regions", analyze_opts.regions_path,
                      "Region metadata CSV for graph labels");

  CLI::App* study = app.add_subcommand("study", "Run a simulation study over scenario cells");
  study->add_option("config", config_path, "Study configuration (JSON)")->required();
  study->add_option("-o,--out", out_dir, "Output directory")->required();

  CLI::App* diag = app.add_subcommand("diagnose", "Recompute convergence diagnostics");
  diag->add_option("run", run_dir, "Run directory produced by fit")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : varorder::kExitUsage;
  }

  if (sim->parsed()) return varorder::cmd_simulate(spec_path, out_dir);
  if (fit->parsed()) return varorder::cmd_fit(data_path, config_path, out_dir);
  if (analyze->parsed()) return varorder::cmd_analyze(run_dir, analyze_opts);
  if (study->parsed()) return varorder::cmd_study(config_path, out_dir);
  if (diag->parsed()) return varorder::cmd_diagnose(run_dir);
  return varorder::kExitUsage;
}
