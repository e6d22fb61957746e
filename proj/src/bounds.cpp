#include "kode/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "kode/errors.hpp"
#include "kode/matops.hpp"

namespace kode {

namespace {
constexpr double pi_quarter = std::numbers::pi / 4.0;
}

PBarResult compute_p_bar(const LgdsParams& params, double dare_tol,
                         long max_iter) {
  const int k = params.num_actions();
  std::vector<Eigen::MatrixXd> p_a;
  p_a.reserve(static_cast<std::size_t>(k));
  for (const auto& a : params.actions)
    p_a.push_back(
        solve_dare(params.gamma, params.q, params.sigma2, a, dare_tol, max_iter));

  int candidate = 0;
  for (int i = 1; i < k; ++i)
    if (p_a[static_cast<std::size_t>(i)].trace() >
        p_a[static_cast<std::size_t>(candidate)].trace())
      candidate = i;

  PBarResult result;
  result.p_bar = p_a[static_cast<std::size_t>(candidate)];
  result.genuine = true;
  for (const auto& p : p_a) {
    if (!psd_dominates(result.p_bar, p, 1e-10)) {
      result.genuine = false;
      break;
    }
  }
  if (!result.genuine) {
    double mu = 0.0;
    for (const auto& p : p_a) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          symmetrized(p - result.p_bar), Eigen::EigenvaluesOnly);
      mu = std::max(mu, es.eigenvalues().maxCoeff());
    }
    result.inflation = mu;
    result.p_bar += mu * Eigen::MatrixXd::Identity(params.dim(), params.dim());
  }
  return result;
}

double regret_bound_per_round(const Eigen::MatrixXd& p,
                              const std::vector<Eigen::VectorXd>& actions) {
  double worst = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t j = i + 1; j < actions.size(); ++j) {
      const Eigen::VectorXd diff = actions[i] - actions[j];
      const double quad = std::max(0.0, diff.dot(p * diff));
      worst = std::max(worst, std::sqrt(2.0 * quad / std::numbers::pi));
    }
  }
  return worst;
}

double angle(const Eigen::VectorXd& z, const Eigen::VectorXd& z_hat) {
  if (z.size() != z_hat.size()) throw DimensionError("angle: dimension mismatch");
  const double nz = z.norm();
  const double nh = z_hat.norm();
  if (nz == 0.0 || nh == 0.0)
    throw InputError("angle: undefined for a zero vector");
  return std::acos(std::clamp(z.dot(z_hat) / (nz * nh), -1.0, 1.0));
}

std::optional<double> online_angle_bound(const Eigen::VectorXd& z_hat,
                                         const Eigen::MatrixXd& p) {
  const double h = z_hat.squaredNorm();
  const double trace_p = p.trace();
  if (h == 0.0 && trace_p == 0.0)
    throw InputError("online_angle_bound: undefined at zero state and covariance");
  const double arg = std::clamp(2.0 * h / (h + trace_p) - 1.0, -1.0, 1.0);
  const double theta = 0.5 * std::acos(arg);
  if (theta > pi_quarter) return std::nullopt;
  return theta;
}

SteadyAngleResult steady_angle_bound(const LgdsParams& params,
                                     const Eigen::MatrixXd& p_bar, double alpha,
                                     long mc_samples, std::uint64_t seed) {
  SteadyAngleResult result;
  result.z_lyapunov = solve_lyapunov(params.gamma, params.q);
  result.nu = quadratic_form_quantile(symmetrized(result.z_lyapunov - p_bar),
                                      alpha, mc_samples, seed);
  if (result.nu > 0.0) {
    const double arg =
        std::clamp(2.0 * result.nu / (result.nu + p_bar.trace()) - 1.0, -1.0, 1.0);
    const double theta = 0.5 * std::acos(arg);
    if (theta <= pi_quarter) result.theta_s = theta;
  }
  return result;
}

SteadyAngleResult steady_angle_bound(const LgdsParams& params, double alpha,
                                     long mc_samples, std::uint64_t seed) {
  return steady_angle_bound(params, compute_p_bar(params).p_bar, alpha,
                            mc_samples, seed);
}

double implicit_exploration_term(const Eigen::VectorXd& a_next,
                                 const Eigen::VectorXd& a_chosen,
                                 const Eigen::MatrixXd& p,
                                 const Eigen::MatrixXd& gamma, double sigma2,
                                 double omega) {
  const Eigen::Index d = p.rows();
  if (a_next.size() != d || a_chosen.size() != d || gamma.rows() != d ||
      gamma.cols() != d || p.cols() != d)
    throw DimensionError("implicit_exploration_term: dimension mismatch");
  const double denom = std::sqrt(a_chosen.dot(p * a_chosen) + sigma2);
  return a_next.dot(gamma * (p * a_chosen)) / denom * omega;
}

double u_tilde(const LgdsParams& params, const Eigen::MatrixXd& p_bar) {
  const int k = params.num_actions();
  if (k < 2) throw InputError("u_tilde: need at least two actions");
  const Eigen::MatrixXd gp = params.gamma * p_bar;
  double worst = 0.0;
  for (int j = 0; j < k; ++j) {
    const auto& chosen = params.actions[static_cast<std::size_t>(j)];
    const Eigen::VectorXd gpc = gp * chosen;
    const double denom = chosen.dot(p_bar * chosen) + params.sigma2;
    for (int i = 0; i < k; ++i) {
      if (i == j) continue;
      const double num =
          params.actions[static_cast<std::size_t>(i)].dot(gpc);
      worst = std::max(worst, num * num / denom);
    }
  }
  return worst;
}

ExplorationCoupling exploration_coupling(const LgdsParams& params,
                                         const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& a_tilde,
                                         const Eigen::MatrixXd& p, double tol) {
  const auto dec = observability_decompose(params.gamma, a);
  const Eigen::Index d = params.dim();
  const Eigen::Index r = dec.obs_dim;

  ExplorationCoupling out;
  const Eigen::VectorXd a_tilde_rot = dec.transform.transpose() * a_tilde;
  const bool tilde_meets_observable =
      a_tilde_rot.head(r).cwiseAbs().maxCoeff() > tol;
  const bool cross_block_nonzero =
      r < d && dec.gamma_cross.size() > 0 &&
      dec.gamma_cross.cwiseAbs().maxCoeff() > tol;
  out.shares_observable_subspace = tilde_meets_observable || cross_block_nonzero;
  out.error_correlated = std::abs(a_tilde.dot(p * a)) > tol;
  out.structurally_zero =
      !out.shares_observable_subspace && !out.error_correlated;
  out.coupling = a_tilde.dot(params.gamma * (p * a));
  out.reward_error_correlation = a_tilde.dot(p * a) + params.sigma2;
  return out;
}

BoundReport compute_bound_report(const LgdsParams& params, long horizon,
                                 double alpha, long mc_samples,
                                 std::uint64_t seed) {
  BoundReport report;
  const PBarResult pbar = compute_p_bar(params);
  report.p_bar = pbar.p_bar;
  report.dominance_ok = pbar.genuine;
  report.inflation = pbar.inflation;
  report.regret_bound_per_round =
      regret_bound_per_round(pbar.p_bar, params.actions);
  report.regret_bound_n =
      static_cast<double>(horizon) * report.regret_bound_per_round;
  const SteadyAngleResult steady =
      steady_angle_bound(params, pbar.p_bar, alpha, mc_samples, seed);
  report.z_lyapunov = steady.z_lyapunov;
  report.nu = steady.nu;
  report.alpha = alpha;
  report.theta_s = steady.theta_s;
  report.u_tilde = u_tilde(params, pbar.p_bar);
  return report;
}

}  // namespace kode
