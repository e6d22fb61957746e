#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "kode/rng.hpp"

namespace kode {

// Full description of one bandit environment: hidden-state dynamics, noise
// statistics, and the finite action set on the unit sphere.
struct LgdsParams {
  Eigen::MatrixXd gamma;   // state transition, spectral radius < 1
  Eigen::MatrixXd q;       // process noise covariance
  double sigma2 = 1.0;     // measurement noise variance
  std::vector<Eigen::VectorXd> actions;
  Eigen::MatrixXd sigma0;  // initial state covariance
  std::uint64_t seed = 0;  // generation seed; 0 for hand-built instances

  Eigen::Index dim() const { return gamma.rows(); }
  int num_actions() const { return static_cast<int>(actions.size()); }
};

// Throws unless the params satisfy every structural invariant.
void validate(const LgdsParams& params);

// Hidden environment state plus its dedicated noise stream. Single-owner:
// distinct instances may run on distinct threads, one instance may not be
// shared mutably.
struct EnvState {
  Eigen::VectorXd z;
  long t = 0;
  Rng rng;
  Eigen::MatrixXd noise_factor;  // PSD factor of q, cached for sampling
};

struct StepResult {
  double reward = 0;       // <a, z_t> + eta_t
  double x_star = 0;       // <a*, z_t>, noise-free optimal mean
  double chosen_mean = 0;  // <a, z_t>, noise-free chosen mean
  int oracle_index = 0;    // argmax_a <a, z_t>, lowest index on ties
};

// Samples an instance: q = F F^T with F entries i.i.d. N(0,1), sigma2 = s^2
// with s ~ N(0,1) (resampled on exact zero), k unit-normalized Gaussian
// actions, gamma = (0.99 / spectral_radius(G)) G with G i.i.d. N(0,1), and
// sigma0 set to the steady-state covariance from the Lyapunov equation.
// Deterministic given seed; each field draws from its own derived stream.
LgdsParams generate_instance(int d, int k, std::uint64_t seed);

// z ~ N(0, sigma0) through a PSD factor of sigma0; t = 0.
EnvState init_state(const LgdsParams& params, std::uint64_t seed);

// Advances z <- gamma z + xi `iters` times without emitting rewards, then
// resets the round counter to zero.
void burn_in(EnvState& state, const LgdsParams& params, long iters);

// Plays one round: reward for the chosen action, oracle bookkeeping, state
// transition. The stream advances in a fixed per-round order (measurement
// noise first, then process noise) so trajectories depend only on
// (seed, params), not on the policy's choices.
StepResult step(EnvState& state, const LgdsParams& params, int action_index);

}  // namespace kode
