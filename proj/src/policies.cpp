#include "kode/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "kode/errors.hpp"

namespace kode {

int argmax_lowest(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw InputError("argmax_lowest: empty score vector");
  int best = 0;
  for (int i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

namespace {

PolicyDecision score_decision(Eigen::VectorXd scores) {
  PolicyDecision d;
  d.action_index = argmax_lowest(scores);
  d.scores = std::move(scores);
  return d;
}

Eigen::VectorXd inner_products(const Eigen::VectorXd& v,
                               const std::vector<Eigen::VectorXd>& actions) {
  if (actions.empty()) throw InputError("select: empty action set");
  Eigen::VectorXd scores(static_cast<Eigen::Index>(actions.size()));
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].size() != v.size())
      throw DimensionError("select: action dimension mismatch");
    scores[static_cast<Eigen::Index>(i)] = actions[i].dot(v);
  }
  return scores;
}

}  // namespace

PolicyDecision kode_select(const KalmanState& state,
                           const std::vector<Eigen::VectorXd>& actions) {
  return score_decision(inner_products(state.z_hat, actions));
}

PolicyDecision oracle_select(const Eigen::VectorXd& z,
                             const std::vector<Eigen::VectorXd>& actions) {
  return score_decision(inner_products(z, actions));
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kode: return "kode";
    case PolicyKind::oracle: return "oracle";
    case PolicyKind::random: return "random";
    case PolicyKind::ucb: return "ucb";
    case PolicyKind::sw_ucb: return "sw-ucb";
    case PolicyKind::rexp3: return "rexp3";
    case PolicyKind::oful: return "oful";
  }
  throw InputError("policy_name: unknown kind");
}

PolicyKind policy_kind_from_name(std::string_view name) {
  if (name == "kode") return PolicyKind::kode;
  if (name == "oracle") return PolicyKind::oracle;
  if (name == "random") return PolicyKind::random;
  if (name == "ucb") return PolicyKind::ucb;
  if (name == "sw-ucb") return PolicyKind::sw_ucb;
  if (name == "rexp3") return PolicyKind::rexp3;
  if (name == "oful") return PolicyKind::oful;
  throw ParseError("unknown policy name: " + std::string(name));
}

std::uint64_t policy_stream_id(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kode: return 1;
    case PolicyKind::oracle: return 2;
    case PolicyKind::random: return 3;
    case PolicyKind::ucb: return 4;
    case PolicyKind::sw_ucb: return 5;
    case PolicyKind::rexp3: return 6;
    case PolicyKind::oful: return 7;
  }
  throw InputError("policy_stream_id: unknown kind");
}

KodePolicy::KodePolicy(const LgdsParams& params)
    : params_(params), state_(kalman_init(params)) {}

PolicyDecision KodePolicy::select() {
  return kode_select(state_, params_.actions);
}

void KodePolicy::observe(const PolicyDecision& decision, double reward) {
  const auto& a = params_.actions[static_cast<std::size_t>(decision.action_index)];
  state_ = kalman_update(state_, a, reward, params_);
}

OraclePolicy::OraclePolicy(const LgdsParams& params, const EnvState& env)
    : actions_(params.actions), env_(&env) {}

PolicyDecision OraclePolicy::select() {
  return oracle_select(env_->z, actions_);
}

RandomPolicy::RandomPolicy(int k, std::uint64_t seed) : k_(k), rng_(seed) {
  if (k < 1) throw InputError("RandomPolicy: empty action set");
}

PolicyDecision RandomPolicy::select() {
  PolicyDecision d;
  d.scores = Eigen::VectorXd::Constant(k_, 1.0 / static_cast<double>(k_));
  d.action_index = rng_.next_index(k_);
  return d;
}

UcbPolicy::UcbPolicy(int k, double c)
    : c_(c), sums_(static_cast<std::size_t>(k), 0.0),
      counts_(static_cast<std::size_t>(k), 0) {
  if (k < 1) throw InputError("UcbPolicy: empty action set");
}

PolicyDecision UcbPolicy::select() {
  const auto k = static_cast<Eigen::Index>(counts_.size());
  Eigen::VectorXd scores(k);
  const double log_t = std::log(static_cast<double>(t_ + 1));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto n = counts_[static_cast<std::size_t>(i)];
    if (n == 0) {
      scores[i] = std::numeric_limits<double>::infinity();
    } else {
      const double mean = sums_[static_cast<std::size_t>(i)] / static_cast<double>(n);
      scores[i] = mean + c_ * std::sqrt(2.0 * log_t / static_cast<double>(n));
    }
  }
  return score_decision(std::move(scores));
}

void UcbPolicy::observe(const PolicyDecision& decision, double reward) {
  const auto i = static_cast<std::size_t>(decision.action_index);
  sums_[i] += reward;
  counts_[i] += 1;
  t_ += 1;
}

SwUcbPolicy::SwUcbPolicy(int k, long window, double c)
    : window_(window), c_(c), windows_(static_cast<std::size_t>(k)),
      window_sums_(static_cast<std::size_t>(k), 0.0) {
  if (k < 1) throw InputError("SwUcbPolicy: empty action set");
  if (window < 1) throw ParameterError("SwUcbPolicy: window must be positive");
}

PolicyDecision SwUcbPolicy::select() {
  const auto k = static_cast<Eigen::Index>(windows_.size());
  Eigen::VectorXd scores(k);
  const double log_t = std::log(static_cast<double>(t_ + 1));
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& win = windows_[static_cast<std::size_t>(i)];
    if (win.empty()) {
      scores[i] = std::numeric_limits<double>::infinity();
    } else {
      const double n = static_cast<double>(win.size());
      const double mean = window_sums_[static_cast<std::size_t>(i)] / n;
      scores[i] = mean + c_ * std::sqrt(2.0 * log_t / n);
    }
  }
  return score_decision(std::move(scores));
}

void SwUcbPolicy::observe(const PolicyDecision& decision, double reward) {
  const auto i = static_cast<std::size_t>(decision.action_index);
  windows_[i].push_back(reward);
  window_sums_[i] += reward;
  if (static_cast<long>(windows_[i].size()) > window_) {
    window_sums_[i] -= windows_[i].front();
    windows_[i].pop_front();
  }
  t_ += 1;
}

Rexp3Policy::Rexp3Policy(int k, long batch, double exploration_rate,
                         double clip_bound, std::uint64_t seed)
    : batch_(batch), exploration_rate_(exploration_rate),
      clip_bound_(clip_bound), weights_(static_cast<std::size_t>(k), 1.0),
      rng_(seed) {
  if (k < 1) throw InputError("Rexp3Policy: empty action set");
  if (batch < 1) throw ParameterError("Rexp3Policy: batch must be positive");
  if (clip_bound <= 0.0)
    throw ParameterError("Rexp3Policy: clip bound must be positive");
}

PolicyDecision Rexp3Policy::select() {
  const auto k = static_cast<Eigen::Index>(weights_.size());
  if (t_ % batch_ == 0) std::fill(weights_.begin(), weights_.end(), 1.0);
  double total = 0.0;
  for (double w : weights_) total += w;
  PolicyDecision d;
  d.scores.resize(k);
  for (Eigen::Index i = 0; i < k; ++i)
    d.scores[i] = (1.0 - exploration_rate_) *
                      weights_[static_cast<std::size_t>(i)] / total +
                  exploration_rate_ / static_cast<double>(k);
  const double u = rng_.next_double();
  double cum = 0.0;
  d.action_index = static_cast<int>(k) - 1;
  for (Eigen::Index i = 0; i < k; ++i) {
    cum += d.scores[i];
    if (u < cum) {
      d.action_index = static_cast<int>(i);
      break;
    }
  }
  return d;
}

void Rexp3Policy::observe(const PolicyDecision& decision, double reward) {
  const auto i = static_cast<std::size_t>(decision.action_index);
  const double clipped = std::clamp(reward, -clip_bound_, clip_bound_);
  const double normalized = (clipped + clip_bound_) / (2.0 * clip_bound_);
  const double estimate = normalized / decision.scores[decision.action_index];
  const auto k = static_cast<double>(weights_.size());
  weights_[i] *= std::exp(exploration_rate_ * estimate / k);
  const double w_max = *std::max_element(weights_.begin(), weights_.end());
  for (double& w : weights_) w /= w_max;
  t_ += 1;
}

OfulPolicy::OfulPolicy(std::vector<Eigen::VectorXd> actions, double lambda,
                       double delta, double sigma_eff, double s_bound)
    : actions_(std::move(actions)), lambda_(lambda), delta_(delta),
      sigma_eff_(sigma_eff), s_bound_(s_bound) {
  if (actions_.empty()) throw InputError("OfulPolicy: empty action set");
  if (lambda <= 0.0) throw ParameterError("OfulPolicy: lambda must be positive");
  if (delta <= 0.0 || delta >= 1.0)
    throw ParameterError("OfulPolicy: delta outside (0,1)");
  const Eigen::Index d = actions_.front().size();
  v_ = lambda * Eigen::MatrixXd::Identity(d, d);
  b_ = Eigen::VectorXd::Zero(d);
}

PolicyDecision OfulPolicy::select() {
  const Eigen::Index d = b_.size();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(v_);
  const Eigen::VectorXd theta = ldlt.solve(b_);
  const double beta =
      sigma_eff_ * std::sqrt(static_cast<double>(d) *
                             std::log((1.0 + static_cast<double>(t_) / lambda_) /
                                      delta_)) +
      std::sqrt(lambda_) * s_bound_;
  Eigen::VectorXd scores(static_cast<Eigen::Index>(actions_.size()));
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    const auto& a = actions_[i];
    const double ellipsoid = std::sqrt(std::max(0.0, a.dot(ldlt.solve(a))));
    scores[static_cast<Eigen::Index>(i)] = a.dot(theta) + beta * ellipsoid;
  }
  return score_decision(std::move(scores));
}

void OfulPolicy::observe(const PolicyDecision& decision, double reward) {
  const auto& a = actions_[static_cast<std::size_t>(decision.action_index)];
  v_.noalias() += a * a.transpose();
  b_.noalias() += a * reward;
  t_ += 1;
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const LgdsParams& params,
                                    const PolicyContext& ctx,
                                    std::uint64_t seed, const EnvState* env) {
  const int k = params.num_actions();
  const double d = static_cast<double>(params.dim());
  const double reward_scale =
      std::sqrt(params.sigma2 + std::max(0.0, ctx.trace_z) / d);
  switch (kind) {
    case PolicyKind::kode:
      return std::make_unique<KodePolicy>(params);
    case PolicyKind::oracle:
      if (env == nullptr)
        throw InputError("make_policy: the oracle needs the environment state");
      return std::make_unique<OraclePolicy>(params, *env);
    case PolicyKind::random:
      return std::make_unique<RandomPolicy>(k, seed);
    case PolicyKind::ucb:
      return std::make_unique<UcbPolicy>(k, ctx.hyper.ucb_c.value_or(reward_scale));
    case PolicyKind::sw_ucb:
      return std::make_unique<SwUcbPolicy>(
          k, ctx.hyper.sw_window, ctx.hyper.sw_c.value_or(reward_scale));
    case PolicyKind::rexp3: {
      long batch = ctx.hyper.rexp3_batch.value_or(static_cast<long>(std::ceil(
          std::cbrt(k * std::log(static_cast<double>(k))) *
          std::pow(static_cast<double>(ctx.horizon), 2.0 / 3.0))));
      batch = std::max<long>(1, batch);
      const double rate = std::min(
          1.0, std::sqrt(k * std::log(static_cast<double>(k)) /
                         ((std::numbers::e - 1.0) * static_cast<double>(batch))));
      const double clip = ctx.hyper.rexp3_clip_sigmas *
                          std::sqrt(std::max(0.0, ctx.trace_z) + params.sigma2);
      return std::make_unique<Rexp3Policy>(k, batch, rate, clip, seed);
    }
    case PolicyKind::oful: {
      const double sigma_eff = std::sqrt(params.sigma2 + std::max(0.0, ctx.trace_z));
      const double s_bound = std::sqrt(std::max(0.0, ctx.trace_z));
      return std::make_unique<OfulPolicy>(params.actions, ctx.hyper.oful_lambda,
                                          ctx.hyper.oful_delta, sigma_eff,
                                          s_bound);
    }
  }
  throw InputError("make_policy: unknown kind");
}

}  // namespace kode
