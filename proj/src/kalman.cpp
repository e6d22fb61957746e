#include "kode/kalman.hpp"

#include <cmath>

#include "kode/errors.hpp"
#include "kode/matops.hpp"

namespace kode {

KalmanState kalman_init(const LgdsParams& params) {
  KalmanState state;
  state.z_hat = Eigen::VectorXd::Zero(params.dim());
  state.p = params.sigma0;
  return state;
}

double predict_reward(const KalmanState& state, const Eigen::VectorXd& a) {
  if (a.size() != state.z_hat.size())
    throw DimensionError("predict_reward: dimension mismatch");
  return a.dot(state.z_hat);
}

KalmanState kalman_update(const KalmanState& state, const Eigen::VectorXd& a,
                          double x, const LgdsParams& params) {
  if (!std::isfinite(x)) throw InputError("kalman_update: non-finite reward");
  const Eigen::Index d = params.dim();
  if (a.size() != d || state.z_hat.size() != d || state.p.rows() != d)
    throw DimensionError("kalman_update: dimension mismatch");

  const double innovation_var = a.dot(state.p * a) + params.sigma2;
  const Eigen::VectorXd gain = state.p * a / innovation_var;
  const double innovation = x - a.dot(state.z_hat);

  KalmanState next;
  next.z_hat = params.gamma * (state.z_hat + gain * innovation);
  next.p = riccati_step(state.p, a, params.gamma, params.q, params.sigma2);
  return next;
}

}  // namespace kode
