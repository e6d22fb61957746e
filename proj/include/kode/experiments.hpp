#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kode/bounds.hpp"
#include "kode/lgds.hpp"
#include "kode/policies.hpp"

namespace kode {

struct EpisodeTrace {
  std::string policy_name;
  std::vector<int> action_indices;
  std::vector<double> rewards;
  std::vector<double> pseudo_regret;  // x_star_mean - chosen_mean per round
  double cumulative_regret = 0;
};

// Per-round view handed to the optional episode callback. The state
// reference is only valid during the callback.
struct RoundRecord {
  long t;
  const Eigen::VectorXd& z;  // hidden state the reward was drawn from
  int action_index;
  double reward;
  double x_star_mean;
  double chosen_mean;
};

// Builds a fresh policy once the environment exists; only the oracle reads
// the passed state.
using PolicyFactory =
    std::function<std::unique_ptr<Policy>(const EnvState& env)>;
using RoundCallback = std::function<void(const RoundRecord&)>;

// One burn-in followed by n rounds of select -> step -> observe with a
// freshly built policy.
EpisodeTrace run_episode(const LgdsParams& params,
                         const PolicyFactory& make_policy_fn, long n,
                         std::uint64_t env_seed, long burn_in_iters,
                         const RoundCallback& on_round = {});

// 100 * (r_baseline - r_kode) / r_baseline. r_baseline must be positive;
// callers exclude non-positive baselines and log the count.
double percent_regret_decrease(double r_baseline, double r_kode);

struct ExperimentConfig {
  int d = 10;
  int k = 10;
  long horizon = 1000;
  long num_instances = 1000;
  long repeats = 10;
  long burn_in = 10000;
  std::uint64_t base_seed = 1;
  double alpha = 0.95;
  long nu_samples = 100000;
  int workers = 1;
  std::string out_dir = "kodesim_out";
  std::vector<PolicyKind> roster = {PolicyKind::kode,  PolicyKind::random,
                                    PolicyKind::ucb,   PolicyKind::sw_ucb,
                                    PolicyKind::rexp3, PolicyKind::oful};
  PolicyHyperparams hyper;
  bool pearson_permutation = false;
  long pearson_permutations = 10000;
};

void validate(const ExperimentConfig& config);

// Seed derivations shared by the suite, the dry-run printout, and tests.
// The environment stream is shared across policies within one (instance,
// repeat) so percent-decrease comparisons are paired.
std::uint64_t instance_seed(const ExperimentConfig& config, long instance);
std::uint64_t env_seed(const ExperimentConfig& config, long instance,
                       long repeat);
std::uint64_t policy_seed(const ExperimentConfig& config, long instance,
                          PolicyKind kind, long repeat);
std::uint64_t bounds_seed(const ExperimentConfig& config, long instance);

struct InstanceResult {
  long index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  BoundReport bounds;
  std::vector<double> mean_regret;                // aligned with the roster
  std::vector<std::optional<double>> pct_decrease;  // ditto; unset where undefined
};

struct SuiteReport {
  long instances_attempted = 0;
  long instances_failed = 0;
  std::map<std::string, long> pct_decrease_excluded;  // per baseline
  long u_tilde_zero = 0;  // retained but excluded from the log correlation
  std::vector<std::string> files;  // file names written into out_dir
  std::vector<InstanceResult> results;
};

// Full tournament: bounds and policy runs per instance with derived seeds,
// plot-ready CSV outputs plus a JSON manifest. Outputs are byte-identical
// for any worker count.
SuiteReport run_suite(const ExperimentConfig& config);

}  // namespace kode
