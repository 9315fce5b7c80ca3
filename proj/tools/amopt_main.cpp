#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "amopt/config.hpp"
#include "amopt/errors.hpp"
#include "amopt/log.hpp"
#include "amopt/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  long long seed = -1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario configuration file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Output directory (default: config [output] dir)");
  cmd->add_option("--jobs", args.jobs, "Worker threads for independent simulations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args.seed, "Override the configured random seed");
}

amopt::RunConfig load(const CommonArgs& args) {
  amopt::RunConfig cfg = amopt::load_config(args.config_path);
  if (args.seed >= 0) cfg.output.seed = static_cast<unsigned long long>(args.seed);
  return cfg;
}

std::string out_dir(const CommonArgs& args, const amopt::RunConfig& cfg) {
  return args.out_dir.empty() ? cfg.output.dir : args.out_dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process-parameter optimization for fused-deposition printing"};
  app.require_subcommand(1);

  CommonArgs sim_args, ver_args, opt_args;
  CLI::App* sim = app.add_subcommand("simulate", "Run one print simulation");
  add_common(sim, sim_args);
  CLI::App* ver = app.add_subcommand(
      "verify-gradient", "Compare the analytic objective gradient with central differences");
  add_common(ver, ver_args);
  CLI::App* opt = app.add_subcommand("optimize", "Run the configured optimization algorithm");
  add_common(opt, opt_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const amopt::RunConfig cfg = load(sim_args);
      return amopt::cmd_simulate(cfg, out_dir(sim_args, cfg));
    }
    if (ver->parsed()) {
      const amopt::RunConfig cfg = load(ver_args);
      return amopt::cmd_verify_gradient(cfg, out_dir(ver_args, cfg));
    }
    const amopt::RunConfig cfg = load(opt_args);
    return amopt::cmd_optimize(cfg, out_dir(opt_args, cfg), opt_args.jobs);
  } catch (const amopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const amopt::SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    for (size_t i = 0; i < e.history.size(); ++i)
      std::fprintf(stderr, "  newton iteration %zu: scaled residual %.3e\n", i, e.history[i]);
    return kExitSolver;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  }
}
