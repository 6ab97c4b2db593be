#include <iostream>

#include <CLI11.hpp>

#include "fracwave/app.hpp"

namespace {

void common_options(CLI::App* cmd, fracwave::app::CommandOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON config file");
  cmd->add_option("--set", opts.sets, "override a config entry, e.g. solver.t_end=2")->take_all();
  cmd->add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--allow-low-nu", opts.allow_low_nu, "accept 0.5 <= nu < 1");
}

}  // namespace

int main(int argc, char** argv) {
  namespace fa = fracwave::app;
  CLI::App app{"fracwave: pseudo-spectral solver for fractional Camassa-Holm type equations"};
  app.set_version_flag("--version", std::string(FRACWAVE_VERSION));
  app.require_subcommand(1);

  fa::CommandOptions opts;
  auto* run = app.add_subcommand("run", "run one simulation");
  common_options(run, opts);

  auto* sweep = app.add_subcommand("sweep", "run one simulation per value of a parameter");
  common_options(sweep, opts);
  std::string axis = "nu";
  std::vector<double> values;
  sweep->add_option("--axis", axis, "nu or amplitude");
  sweep->add_option("--values", values, "comma separated values")->delimiter(',');

  auto* diagnose = app.add_subcommand("diagnose", "estimate probes and convergence studies");
  common_options(diagnose, opts);
  std::string kind;
  diagnose->add_option("kind", kind, "commutator | lipschitz | dependence | convergence")->required();

  auto* resume = app.add_subcommand("resume", "continue a run from a checkpoint");
  common_options(resume, opts);
  std::string checkpoint;
  resume->add_option("checkpoint", checkpoint, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fa::kUsage;
  }

  try {
    if (*run) return fa::cmd_run(opts, std::cout, std::cerr);
    if (*sweep) return fa::cmd_sweep(axis, values, opts, std::cout, std::cerr);
    if (*diagnose) return fa::cmd_diagnose(kind, opts, std::cout, std::cerr);
    if (*resume) return fa::cmd_resume(checkpoint, opts, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return fa::kUsage;
}
