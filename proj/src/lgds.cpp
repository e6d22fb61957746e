#include "kode/lgds.hpp"

#include <cmath>

#include "kode/errors.hpp"
#include "kode/matops.hpp"

namespace kode {

void validate(const LgdsParams& params) {
  const Eigen::Index d = params.gamma.rows();
  if (d < 1) throw ParameterError("LgdsParams: dimension must be at least 1");
  if (params.gamma.cols() != d)
    throw DimensionError("LgdsParams: gamma is not square");
  if (params.q.rows() != d || params.q.cols() != d)
    throw DimensionError("LgdsParams: q dimension mismatch");
  if (params.sigma0.rows() != d || params.sigma0.cols() != d)
    throw DimensionError("LgdsParams: sigma0 dimension mismatch");
  if (!params.gamma.allFinite() || !params.q.allFinite() ||
      !params.sigma0.allFinite() || !std::isfinite(params.sigma2))
    throw InputError("LgdsParams: non-finite entries");
  if (params.sigma2 <= 0.0)
    throw ParameterError("LgdsParams: sigma2 must be positive");
  if (spectral_radius(params.gamma) >= 1.0)
    throw InstabilityError("LgdsParams: gamma spectral radius >= 1");
  if (params.actions.empty())
    throw ParameterError("LgdsParams: action set is empty");
  for (const auto& a : params.actions) {
    if (a.size() != d)
      throw DimensionError("LgdsParams: action dimension mismatch");
    if (!a.allFinite()) throw InputError("LgdsParams: non-finite action");
    if (std::abs(a.norm() - 1.0) > 1e-12)
      throw ParameterError("LgdsParams: actions must have unit norm");
  }
  const double q_scale = std::max(1.0, params.q.cwiseAbs().maxCoeff());
  if (!is_symmetric(params.q) || min_eigenvalue(params.q) < -1e-9 * q_scale)
    throw ParameterError("LgdsParams: q is not symmetric PSD");
  const double s0_scale = std::max(1.0, params.sigma0.cwiseAbs().maxCoeff());
  if (!is_symmetric(params.sigma0) ||
      min_eigenvalue(params.sigma0) < -1e-9 * s0_scale)
    throw ParameterError("LgdsParams: sigma0 is not symmetric PSD");
}

LgdsParams generate_instance(int d, int k, std::uint64_t seed) {
  if (d < 1) throw ParameterError("generate_instance: d must be at least 1");
  if (k < 2) throw ParameterError("generate_instance: k must be at least 2");

  LgdsParams params;
  params.seed = seed;

  Rng q_rng(mix_seed({seed, stream::gen_q}));
  Eigen::MatrixXd f(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) f(i, j) = q_rng.next_normal();
  params.q = symmetrized(f * f.transpose());

  Rng s_rng(mix_seed({seed, stream::gen_sigma}));
  double s = s_rng.next_normal();
  while (s == 0.0) s = s_rng.next_normal();
  params.sigma2 = s * s;

  Rng a_rng(mix_seed({seed, stream::gen_actions}));
  params.actions.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd a = a_rng.normal_vector(d);
    while (a.norm() == 0.0) a = a_rng.normal_vector(d);
    params.actions.push_back(a / a.norm());
  }

  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng g_rng(mix_seed({seed, stream::gen_gamma, attempt}));
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = g_rng.next_normal();
    const double rho = spectral_radius(g);
    if (rho > 0.0) {
      params.gamma = (0.99 / rho) * g;
      break;
    }
  }

  params.sigma0 = solve_lyapunov(params.gamma, params.q);
  return params;
}

EnvState init_state(const LgdsParams& params, std::uint64_t seed) {
  validate(params);
  EnvState state;
  state.rng = Rng(seed);
  state.noise_factor = psd_sqrt(params.q);
  const Eigen::MatrixXd init_factor = psd_sqrt(params.sigma0);
  state.z = init_factor * state.rng.normal_vector(params.dim());
  state.t = 0;
  return state;
}

void burn_in(EnvState& state, const LgdsParams& params, long iters) {
  if (iters < 0) throw InputError("burn_in: negative iteration count");
  const Eigen::Index d = params.dim();
  for (long i = 0; i < iters; ++i)
    state.z = params.gamma * state.z + state.noise_factor * state.rng.normal_vector(d);
  state.t = 0;
}

StepResult step(EnvState& state, const LgdsParams& params, int action_index) {
  const int k = params.num_actions();
  if (action_index < 0 || action_index >= k)
    throw InputError("step: action index out of range");

  StepResult result;
  result.oracle_index = 0;
  double best = params.actions[0].dot(state.z);
  result.chosen_mean = action_index == 0 ? best : 0.0;
  for (int i = 1; i < k; ++i) {
    const double mean_i = params.actions[static_cast<std::size_t>(i)].dot(state.z);
    if (i == action_index) result.chosen_mean = mean_i;
    if (mean_i > best) {
      best = mean_i;
      result.oracle_index = i;
    }
  }
  result.x_star = best;

  const double eta = std::sqrt(params.sigma2) * state.rng.next_normal();
  result.reward = result.chosen_mean + eta;

  state.z = params.gamma * state.z +
            state.noise_factor * state.rng.normal_vector(params.dim());
  state.t += 1;
  return result;
}

}  // namespace kode
