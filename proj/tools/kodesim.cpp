#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kode/cli.hpp"
#include "kode/errors.hpp"

namespace {

constexpr const char* kConfigKeyHelp = R"(Config document keys and defaults:
  d=10 k=10                      instance dimensions
  horizon=1000                   rounds per episode
  num_instances=1000             instances per suite
  repeats=10                     episodes per (instance, policy)
  burn_in=10000                  environment iterations before round 0
  base_seed=1                    root of all derived seed streams
  alpha=0.95                     tail probability for the nu threshold
  nu_samples=100000              Monte Carlo draws for nu (>= 10000)
  workers=1                      worker threads; outputs do not depend on it
  out_dir="kodesim_out"          output directory
  policies=[kode,random,ucb,sw-ucb,rexp3,oful]   roster (oracle also allowed)
  ucb.c=null                     null: sqrt(sigma2 + tr(Z)/d) per instance
  sw_ucb.window=100 sw_ucb.c=null
  rexp3.batch=null               null: ceil((k ln k)^(1/3) n^(2/3))
  rexp3.clip_sigmas=3
  oful.lambda=1 oful.delta=0.01
  pearson.permutation=false pearson.permutations=10000)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear stochastic bandit simulator driven by a linear "
               "Gaussian dynamical system"};
  app.require_subcommand(1);

  kode::GenerateOptions gen;
  auto* generate = app.add_subcommand(
      "generate", "Sample an environment instance and write it as JSON");
  generate->add_option("-d,--dim", gen.d, "State dimension")
      ->capture_default_str();
  generate->add_option("-k,--actions", gen.k, "Number of actions")
      ->capture_default_str();
  generate->add_option("--seed", gen.seed, "Generation seed")
      ->capture_default_str();
  generate->add_option("--out", gen.out_path, "Output instance path")
      ->capture_default_str();
  generate->add_flag("--stats", gen.print_stats,
                     "Print spectral radius and noise statistics");

  kode::BoundsOptions bounds;
  std::optional<std::uint64_t> bounds_seed;
  std::optional<std::string> bounds_out;
  auto* bounds_cmd = app.add_subcommand(
      "bounds", "Compute the analytical report for an instance");
  bounds_cmd->add_option("instance", bounds.instance_path, "Instance JSON path")
      ->required();
  bounds_cmd->add_option("--alpha", bounds.alpha, "Tail probability for nu")
      ->capture_default_str();
  bounds_cmd->add_option("--horizon", bounds.horizon, "Horizon for the regret bound")
      ->capture_default_str();
  bounds_cmd
      ->add_option("--samples", bounds.nu_samples, "Monte Carlo draws for nu")
      ->capture_default_str();
  bounds_cmd->add_option("--seed", bounds_seed,
                         "Quantile seed (default: instance seed)");
  bounds_cmd->add_option("--out", bounds_out,
                         "Directory for bounds.csv and bounds.json");

  kode::RunOptions run;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_workers;
  std::optional<std::string> run_out;
  std::optional<double> run_alpha;
  auto* run_cmd =
      app.add_subcommand("run", "Run the full Monte Carlo suite from a config");
  run_cmd->add_option("--config", run.config_path, "Config JSON path")
      ->required();
  run_cmd->add_option("--seed", run_seed, "Override base_seed");
  run_cmd->add_option("--workers", run_workers, "Override worker count");
  run_cmd->add_option("--out", run_out, "Override output directory");
  run_cmd->add_option("--alpha", run_alpha, "Override alpha");
  run_cmd->add_flag("--dry-run", run.dry_run,
                    "Print the resolved config and seed schedule, write nothing");
  run_cmd->footer(kConfigKeyHelp);

  kode::EpisodeOptions episode;
  auto* episode_cmd = app.add_subcommand(
      "episode", "Trace a single policy episode on a stored instance");
  episode_cmd
      ->add_option("instance", episode.instance_path, "Instance JSON path")
      ->required();
  episode_cmd
      ->add_option("--policy", episode.policy,
                   "kode|oracle|random|ucb|sw-ucb|rexp3|oful")
      ->capture_default_str();
  episode_cmd->add_option("--seed", episode.seed, "Episode seed")
      ->capture_default_str();
  episode_cmd->add_option("-n,--rounds", episode.n, "Rounds to trace")
      ->capture_default_str();
  episode_cmd->add_option("--burn-in", episode.burn_in, "Burn-in iterations")
      ->capture_default_str();
  episode_cmd->add_option("--out", episode.out_path,
                          "Trace CSV path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return kode::cmd_generate(gen);
    if (bounds_cmd->parsed()) {
      bounds.seed = bounds_seed;
      bounds.out_dir = bounds_out;
      return kode::cmd_bounds(bounds);
    }
    if (run_cmd->parsed()) {
      run.seed = run_seed;
      run.workers = run_workers;
      run.out_dir = run_out;
      run.alpha = run_alpha;
      return kode::cmd_run(run);
    }
    if (episode_cmd->parsed()) return kode::cmd_episode(episode);
  } catch (const kode::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
