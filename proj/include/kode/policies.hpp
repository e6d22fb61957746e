#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kode/kalman.hpp"
#include "kode/lgds.hpp"
#include "kode/rng.hpp"

namespace kode {

struct PolicyDecision {
  int action_index = 0;
  Eigen::VectorXd scores;  // per-action scores at decision time
};

// Lowest index among the maximizers.
int argmax_lowest(const Eigen::VectorXd& scores);

// Core selection rules as free functions.
PolicyDecision kode_select(const KalmanState& state,
                           const std::vector<Eigen::VectorXd>& actions);
PolicyDecision oracle_select(const Eigen::VectorXd& z,
                             const std::vector<Eigen::VectorXd>& actions);

// Uniform select/observe interface. One instance serves one episode and is
// never shared across threads.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual PolicyDecision select() = 0;
  virtual void observe(const PolicyDecision& decision, double reward) = 0;
};

enum class PolicyKind { kode, oracle, random, ucb, sw_ucb, rexp3, oful };

std::string_view policy_name(PolicyKind kind);
PolicyKind policy_kind_from_name(std::string_view name);

// Stable id used to derive per-policy seed streams; independent of the
// roster order so adding or removing policies never reshuffles seeds.
std::uint64_t policy_stream_id(PolicyKind kind);

// Config-level baseline hyperparameters. Unset optionals resolve per
// instance from the known environment statistics.
struct PolicyHyperparams {
  std::optional<double> ucb_c;      // default sqrt(sigma2 + tr(Z)/d)
  long sw_window = 100;
  std::optional<double> sw_c;       // default sqrt(sigma2 + tr(Z)/d)
  std::optional<long> rexp3_batch;  // default ceil((k ln k)^(1/3) n^(2/3))
  double rexp3_clip_sigmas = 3.0;   // reward clip at this many reward sigmas
  double oful_lambda = 1.0;
  double oful_delta = 0.01;
};

// Per-instance construction context shared by every policy.
struct PolicyContext {
  long horizon = 1000;
  double trace_z = 0.0;  // trace of the stationary state covariance
  PolicyHyperparams hyper;
};

// Builds a fresh policy for one episode. `env` is read only by the oracle,
// whose access to the true hidden state is a simulator privilege.
std::unique_ptr<Policy> make_policy(PolicyKind kind, const LgdsParams& params,
                                    const PolicyContext& ctx,
                                    std::uint64_t seed,
                                    const EnvState* env = nullptr);

// Concrete policies, exposed so tests can drive them directly.

class KodePolicy final : public Policy {
 public:
  explicit KodePolicy(const LgdsParams& params);
  std::string_view name() const override { return "kode"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision& decision, double reward) override;
  const KalmanState& filter_state() const { return state_; }

 private:
  LgdsParams params_;
  KalmanState state_;
};

class OraclePolicy final : public Policy {
 public:
  OraclePolicy(const LgdsParams& params, const EnvState& env);
  std::string_view name() const override { return "oracle"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision&, double) override {}

 private:
  std::vector<Eigen::VectorXd> actions_;
  const EnvState* env_;
};

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(int k, std::uint64_t seed);
  std::string_view name() const override { return "random"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision&, double) override {}

 private:
  int k_;
  Rng rng_;
};

// UCB1 with a configurable confidence scale; unplayed arms come first in
// index order.
class UcbPolicy final : public Policy {
 public:
  UcbPolicy(int k, double c);
  std::string_view name() const override { return "ucb"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision& decision, double reward) override;

 private:
  double c_;
  long t_ = 0;
  std::vector<double> sums_;
  std::vector<long> counts_;
};

// UCB over each arm's most recent `window` observations.
class SwUcbPolicy final : public Policy {
 public:
  SwUcbPolicy(int k, long window, double c);
  std::string_view name() const override { return "sw-ucb"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision& decision, double reward) override;

 private:
  long window_;
  double c_;
  long t_ = 0;
  std::vector<std::deque<double>> windows_;
  std::vector<double> window_sums_;
};

// Exp3 restarted every `batch` rounds, with rewards clipped into a known
// range before normalization.
class Rexp3Policy final : public Policy {
 public:
  Rexp3Policy(int k, long batch, double exploration_rate, double clip_bound,
              std::uint64_t seed);
  std::string_view name() const override { return "rexp3"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision& decision, double reward) override;
  double exploration_rate() const { return exploration_rate_; }

 private:
  long batch_;
  double exploration_rate_;
  double clip_bound_;
  long t_ = 0;
  std::vector<double> weights_;
  Rng rng_;
};

// Ridge-regression linear bandit with an optimistic ellipsoid bonus.
class OfulPolicy final : public Policy {
 public:
  OfulPolicy(std::vector<Eigen::VectorXd> actions, double lambda, double delta,
             double sigma_eff, double s_bound);
  std::string_view name() const override { return "oful"; }
  PolicyDecision select() override;
  void observe(const PolicyDecision& decision, double reward) override;

 private:
  std::vector<Eigen::VectorXd> actions_;
  double lambda_;
  double delta_;
  double sigma_eff_;
  double s_bound_;
  long t_ = 0;
  Eigen::MatrixXd v_;
  Eigen::VectorXd b_;
};

}  // namespace kode
