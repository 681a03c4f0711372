// edpinn: train, sweep, evaluate and generate references from config files.

#include <cmath>
#include <iostream>

#include "CLI11.hpp"
#include "edpinn/cli/checkpoint.hpp"
#include "edpinn/cli/config.hpp"
#include "edpinn/cli/runner.hpp"
#include "edpinn/errors.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, divergence = 3, oracle_failure = 4 };

using namespace edpinn;

int cmd_run(const std::string& path, const std::string& resume, const std::string& output, bool quiet) {
  cli::ExperimentConfig config = cli::load_config(path);
  if (!output.empty()) config.output = output;
  oracle::ReferenceCache cache = oracle::ReferenceCache::from_environment();
  cli::RunOptions options;
  if (!resume.empty()) options.resume = resume;
  options.log = quiet ? nullptr : &std::cerr;
  const cli::RunSummary s = cli::run_experiment(config, cache, options);
  std::cout << s.to_json().dump(2) << '\n';
  return ok;
}

int cmd_sweep(const std::string& path, bool quiet) {
  const auto doc = cli::read_config_text(path);
  oracle::ReferenceCache cache = oracle::ReferenceCache::from_environment();
  const int failed = cli::run_sweep(doc, std::filesystem::path(path).parent_path(), cache, quiet ? nullptr : &std::cerr);
  if (failed > 0) std::cerr << failed << " sweep point(s) failed; see aggregate.csv\n";
  return failed > 0 ? failure : ok;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& path) {
  const cli::ExperimentConfig config = cli::load_config(path);
  const controlfn::IntervalSchedule schedule = cli::read_checkpoint(checkpoint, config.hash());
  oracle::ReferenceCache cache = oracle::ReferenceCache::from_environment();
  const oracle::ReferenceField ref = cli::reference_for_config(config, cache);
  std::cout << cli::evaluate_schedule(config, schedule, ref).to_json().dump(2) << '\n';
  return ok;
}

int cmd_oracle(const std::string& problem, int modes, double dt) {
  const pde::PdeProblem p = pde::problem_by_name(problem);
  oracle::ReferenceCache cache = oracle::ReferenceCache::from_environment();
  if (modes == 0 && p.id != pde::ProblemId::convection) modes = oracle::default_modes(p.id);
  const auto path = cache.path_for(problem, modes, dt);
  const bool existed = std::filesystem::exists(path);
  const oracle::ReferenceField f = cache.spectral(p.id, modes, dt);
  std::cout << (existed ? "cached " : "wrote ") << path.string() << '\n'
            << "provenance " << f.provenance << '\n'
            << "self-convergence " << f.self_convergence << '\n';
  if (!(f.self_convergence <= 1e-6)) {
    std::cerr << "warning: self-convergence " << f.self_convergence << " exceeds 1e-6; raise modes or lower dt\n";
    return oracle_failure;
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extrapolation-driven PINN experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress output");

  std::string run_config, resume, output;
  auto* run = app.add_subcommand("run", "Train on a config and write artifacts");
  run->add_option("config", run_config, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  run->add_option("--output", output, "Override the output directory");

  std::string sweep_config;
  auto* sweep = app.add_subcommand("sweep", "Run every point of a config's sweep grid");
  sweep->add_option("config", sweep_config, "Experiment config with a sweep section")->required()->check(
      CLI::ExistingFile);

  std::string eval_checkpoint, eval_config;
  auto* evaluate = app.add_subcommand("evaluate", "Metrics for a checkpoint against the reference");
  evaluate->add_option("checkpoint", eval_checkpoint)->required()->check(CLI::ExistingFile);
  evaluate->add_option("config", eval_config)->required()->check(CLI::ExistingFile);

  std::string problem;
  int modes = 0;
  double dt = oracle::kDefaultDt;
  auto* oracle_cmd = app.add_subcommand("oracle", "Generate and cache a spectral reference");
  oracle_cmd->add_option("problem", problem, "allen_cahn or kdv")->required();
  oracle_cmd->add_option("--modes", modes, "Fourier modes (default per problem)");
  oracle_cmd->add_option("--dt", dt, "Time step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }

  try {
    if (*run) return cmd_run(run_config, resume, output, quiet);
    if (*sweep) return cmd_sweep(sweep_config, quiet);
    if (*evaluate) return cmd_evaluate(eval_checkpoint, eval_config);
    if (*oracle_cmd) return cmd_oracle(problem, modes, dt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const IncompatibleCheckpointError& e) {
    std::cerr << "incompatible checkpoint: " << e.what() << '\n';
    return config_error;
  } catch (const DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << '\n';
    return divergence;
  } catch (const OracleError& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return oracle_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
