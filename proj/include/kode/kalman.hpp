#pragma once

#include <Eigen/Core>

#include "kode/lgds.hpp"

namespace kode {

// One-step predictor state: the conditional mean of z_t given rewards
// through round t-1 and its error covariance.
struct KalmanState {
  Eigen::VectorXd z_hat;
  Eigen::MatrixXd p;
};

// z_hat = 0, p = sigma0.
KalmanState kalman_init(const LgdsParams& params);

// <a, z_hat>.
double predict_reward(const KalmanState& state, const Eigen::VectorXd& a);

// One predictor update after observing reward x for action a:
//   K      = P a / (a^T P a + sigma2)
//   z_hat' = gamma z_hat + gamma K (x - <a, z_hat>)
//   P'     = riccati_step(P, a, gamma, q, sigma2)
KalmanState kalman_update(const KalmanState& state, const Eigen::VectorXd& a,
                          double x, const LgdsParams& params);

}  // namespace kode
