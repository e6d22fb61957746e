#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "kode/lgds.hpp"

namespace kode {

struct PBarResult {
  Eigen::MatrixXd p_bar;
  bool genuine = false;  // trace-max candidate dominated without inflation
  double inflation = 0;  // mu added to the diagonal; 0 when genuine
};

// A covariance dominating every fixed-action steady state: the candidate is
// the argmax-trace P_a; if it fails to dominate some P_a it is inflated by
// mu I with mu = max_a lambda_max(P_a - candidate), which dominates by
// construction.
PBarResult compute_p_bar(const LgdsParams& params, double dare_tol = 1e-10,
                         long max_iter = 1000000);

// max over action pairs of sqrt(2 (a - a')^T p (a - a') / pi).
double regret_bound_per_round(const Eigen::MatrixXd& p,
                              const std::vector<Eigen::VectorXd>& actions);

// Angle between two nonzero vectors, in [0, pi].
double angle(const Eigen::VectorXd& z, const Eigen::VectorXd& z_hat);

// 0.5 * arccos(2 ||z_hat||^2 / (||z_hat||^2 + tr p) - 1).
// nullopt where the bound exceeds pi/4 and stops being informative.
std::optional<double> online_angle_bound(const Eigen::VectorXd& z_hat,
                                         const Eigen::MatrixXd& p);

struct SteadyAngleResult {
  Eigen::MatrixXd z_lyapunov;
  double nu = 0;
  std::optional<double> theta_s;  // nullopt when nu <= 0 or above pi/4
};

// nu is the seeded Monte Carlo (1 - alpha)-quantile of w^T (Z - p_bar) w,
// and theta_s = 0.5 * arccos(2 nu / (nu + tr p_bar) - 1) where applicable.
SteadyAngleResult steady_angle_bound(const LgdsParams& params,
                                     const Eigen::MatrixXd& p_bar,
                                     double alpha, long mc_samples,
                                     std::uint64_t seed);
SteadyAngleResult steady_angle_bound(const LgdsParams& params, double alpha,
                                     long mc_samples, std::uint64_t seed);

// u(a_next | a_chosen) =
//   <a_next, gamma p a_chosen> * omega / sqrt(a_chosen^T p a_chosen + sigma2),
// the innovation-driven perturbation of the predicted score.
double implicit_exploration_term(const Eigen::VectorXd& a_next,
                                 const Eigen::VectorXd& a_chosen,
                                 const Eigen::MatrixXd& p,
                                 const Eigen::MatrixXd& gamma, double sigma2,
                                 double omega);

// Max over ordered pairs a != a~ of
//   (a^T gamma p_bar a~)^2 / (a~^T p_bar a~ + sigma2),
// the largest steady-state variance of the perturbation.
double u_tilde(const LgdsParams& params, const Eigen::MatrixXd& p_bar);

struct ExplorationCoupling {
  bool shares_observable_subspace = false;  // a~ meets a's observable subspace
  bool error_correlated = false;            // |a~^T p a| above tolerance
  bool structurally_zero = false;           // both coupling routes absent
  double coupling = 0;                      // a~^T gamma p a
  double reward_error_correlation = 0;      // a~^T p a + sigma2
};

// Decomposes along the observable subspace of `a` and reports which of the
// two coupling routes can carry the exploration perturbation to `a_tilde`
// at the supplied error covariance.
ExplorationCoupling exploration_coupling(const LgdsParams& params,
                                         const Eigen::VectorXd& a,
                                         const Eigen::VectorXd& a_tilde,
                                         const Eigen::MatrixXd& p,
                                         double tol = 1e-10);

struct BoundReport {
  Eigen::MatrixXd p_bar;
  bool dominance_ok = false;  // genuine dominance, no inflation needed
  double inflation = 0;
  double regret_bound_per_round = 0;
  double regret_bound_n = 0;
  Eigen::MatrixXd z_lyapunov;
  double nu = 0;
  double alpha = 0;
  std::optional<double> theta_s;
  double u_tilde = 0;
};

BoundReport compute_bound_report(const LgdsParams& params, long horizon,
                                 double alpha, long mc_samples,
                                 std::uint64_t seed);

}  // namespace kode
