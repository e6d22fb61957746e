#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "kode/errors.hpp"
#include "kode/kalman.hpp"
#include "kode/lgds.hpp"
#include "kode/matops.hpp"
#include "test_util.hpp"

using namespace kode;

namespace {

LgdsParams scalar_params(double gamma, double q, double sigma2) {
  LgdsParams p;
  p.gamma = Matrix::Constant(1, 1, gamma);
  p.q = Matrix::Constant(1, 1, q);
  p.sigma2 = sigma2;
  p.sigma0 = solve_lyapunov(p.gamma, p.q);
  Vector plus(1), minus(1);
  plus << 1.0;
  minus << -1.0;
  p.actions = {plus, minus};
  return p;
}

// Stable 3-state environment with basis actions, stationary prior.
LgdsParams small_params(std::uint64_t seed) {
  Rng rng(seed);
  LgdsParams p;
  p.gamma = test::random_stable(rng, 3, 0.85);
  p.q = test::random_psd(rng, 3);
  p.sigma2 = 0.5;
  p.sigma0 = solve_lyapunov(p.gamma, p.q);
  for (int i = 0; i < 3; ++i) {
    Vector e = Vector::Zero(3);
    e[i] = 1.0;
    p.actions.push_back(e);
  }
  return p;
}

struct ReplicateStats {
  double mean_dot_e_zhat = 0;     // <e, z_hat> averaged over replicates
  double se_dot_e_zhat = 0;       // its standard error
  Matrix error_cov;               // empirical covariance of e
  double mean_sq_z = 0;           // mean ||z||^2
  double mean_sq_zhat = 0;        // mean ||z_hat||^2
  Matrix p_final;                 // P_{t|t-1} (action-determined, shared)
};

// Runs `replicates` independent episodes with a fixed cyclic action
// sequence and collects cross-replicate statistics at the final round.
ReplicateStats run_replicates(const LgdsParams& params, int rounds,
                              int replicates) {
  ReplicateStats stats;
  const Eigen::Index d = params.dim();
  stats.error_cov = Matrix::Zero(d, d);
  std::vector<double> dots;
  dots.reserve(static_cast<std::size_t>(replicates));
  for (int rep = 0; rep < replicates; ++rep) {
    EnvState env = init_state(params, static_cast<std::uint64_t>(rep) + 1);
    KalmanState kf = kalman_init(params);
    for (int t = 0; t < rounds; ++t) {
      const auto& a =
          params.actions[static_cast<std::size_t>(t % params.num_actions())];
      const Vector z_before = env.z;
      int index = t % params.num_actions();
      const StepResult r = step(env, params, index);
      (void)z_before;
      kf = kalman_update(kf, a, r.reward, params);
    }
    // kf now predicts z at round `rounds`; env.z is exactly that state.
    const Vector e = env.z - kf.z_hat;
    dots.push_back(e.dot(kf.z_hat));
    stats.error_cov += e * e.transpose();
    stats.mean_sq_z += env.z.squaredNorm();
    stats.mean_sq_zhat += kf.z_hat.squaredNorm();
    if (rep == 0) stats.p_final = kf.p;
  }
  const double n = static_cast<double>(replicates);
  stats.error_cov /= n;
  stats.mean_sq_z /= n;
  stats.mean_sq_zhat /= n;
  double mean = 0;
  for (double v : dots) mean += v;
  mean /= n;
  double var = 0;
  for (double v : dots) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  stats.mean_dot_e_zhat = mean;
  stats.se_dot_e_zhat = std::sqrt(var / n);
  return stats;
}

}  // namespace

TEST_CASE("initial predictor state") {
  LgdsParams p = scalar_params(0.9, 1.0, 1.0);
  p.sigma0 = Matrix::Identity(1, 1);
  const KalmanState s = kalman_init(p);
  CHECK(s.z_hat.norm() == 0.0);
  CHECK((s.p - p.sigma0).cwiseAbs().maxCoeff() == 0.0);
  for (const auto& a : p.actions)
    CHECK(predict_reward(s, a) == doctest::Approx(0.0));
}

TEST_CASE("predicted reward is the inner product") {
  KalmanState s;
  s.z_hat = Vector::Zero(2);
  s.z_hat << 1.0, 2.0;
  s.p = Matrix::Identity(2, 2);
  Vector e2 = Vector::Zero(2);
  e2[1] = 1.0;
  CHECK(predict_reward(s, e2) == doctest::Approx(2.0));

  KalmanState scaled = s;
  scaled.z_hat *= 3.5;
  CHECK(predict_reward(scaled, e2) ==
        doctest::Approx(3.5 * predict_reward(s, e2)));

  Vector wrong = Vector::Zero(3);
  CHECK_THROWS_AS(predict_reward(s, wrong), DimensionError);
}

TEST_CASE("scalar update matches an independent scalar recursion") {
  const LgdsParams p = scalar_params(0.9, 1.0, 1.0);
  KalmanState s;
  s.z_hat = Vector::Zero(1);
  s.p = Matrix::Identity(1, 1);
  Vector a(1);
  a << 1.0;

  // Hand-evaluated single step: K = 1/(1+1) = 0.5, z' = 0.9*0.5*2 = 0.9,
  // p' = 0.81 + 1 - 0.81/2 = 1.405.
  const KalmanState next = kalman_update(s, a, 2.0, p);
  CHECK(next.z_hat[0] == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(next.p(0, 0) == doctest::Approx(1.405).epsilon(1e-14));

  // Twenty rounds against a plain-double recursion written independently
  // of the matrix code path.
  double zh = 0.0, pv = 1.0;
  KalmanState ms = s;
  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    const double x = rng.next_normal();
    const double gain = pv / (pv + 1.0);
    const double zh_next = 0.9 * (zh + gain * (x - zh));
    const double pv_next = 0.81 * pv + 1.0 - 0.81 * pv * pv / (pv + 1.0);
    ms = kalman_update(ms, a, x, p);
    zh = zh_next;
    pv = pv_next;
    CHECK(std::abs(ms.z_hat[0] - zh) < 1e-12);
    CHECK(std::abs(ms.p(0, 0) - pv) < 1e-12);
  }
}

TEST_CASE("zero innovation and zero gain special cases") {
  const LgdsParams p = small_params(4);
  KalmanState s = kalman_init(p);
  Rng rng(8);
  s.z_hat = rng.normal_vector(3);

  const auto& a = p.actions[1];
  const double x = a.dot(s.z_hat);  // zero innovation
  const KalmanState next = kalman_update(s, a, x, p);
  CHECK((next.z_hat - p.gamma * s.z_hat).cwiseAbs().maxCoeff() == 0.0);

  KalmanState flat = s;
  flat.p = Matrix::Zero(3, 3);
  const KalmanState after = kalman_update(flat, a, 123.0, p);
  CHECK((after.z_hat - p.gamma * s.z_hat).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(
      kalman_update(s, a, std::numeric_limits<double>::infinity(), p),
      InputError);
}

TEST_CASE("covariance recursion equals iterated riccati steps") {
  const LgdsParams p = small_params(6);
  KalmanState s = kalman_init(p);
  Matrix ric = p.sigma0;
  Rng rng(9);
  for (int t = 0; t < 15; ++t) {
    const auto& a = p.actions[static_cast<std::size_t>(t % 3)];
    s = kalman_update(s, a, rng.next_normal(), p);
    ric = riccati_step(ric, a, p.gamma, p.q, p.sigma2);
    CHECK((s.p - ric).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("prediction error is orthogonal to the prediction") {
  const LgdsParams p = small_params(12);
  const ReplicateStats stats = run_replicates(p, 6, 100000);
  CHECK(std::abs(stats.mean_dot_e_zhat) <= 3.0 * stats.se_dot_e_zhat);
}

TEST_CASE("empirical error covariance matches the riccati covariance") {
  const LgdsParams p = small_params(12);
  const ReplicateStats stats = run_replicates(p, 6, 10000);
  CHECK((stats.error_cov - stats.p_final).norm() / stats.p_final.norm() < 0.10);
}

TEST_CASE("second moment identity for the state norm") {
  // E||z||^2 = E||z_hat||^2 + tr(P) across replicates with a shared action
  // sequence (P depends on actions only).
  const LgdsParams p = small_params(12);
  const ReplicateStats stats = run_replicates(p, 6, 10000);
  const double lhs = stats.mean_sq_z;
  const double rhs = stats.mean_sq_zhat + stats.p_final.trace();
  CHECK(std::abs(lhs - rhs) / rhs < 0.05);
}

TEST_CASE("update averaged over the innovation distribution is the plain forecast") {
  const LgdsParams p = small_params(20);
  KalmanState s = kalman_init(p);
  Rng warm(3);
  for (int t = 0; t < 5; ++t)
    s = kalman_update(s, p.actions[static_cast<std::size_t>(t % 3)],
                      warm.next_normal(), p);

  const auto& a = p.actions[0];
  const double mean_x = a.dot(s.z_hat);
  const double sd_x = std::sqrt(a.dot(s.p * a) + p.sigma2);
  const Vector forecast = p.gamma * s.z_hat;

  const int draws = 100000;
  Matrix samples(3, draws);
  Rng rng(41);
  for (int i = 0; i < draws; ++i) {
    const double x = mean_x + sd_x * rng.next_normal();
    samples.col(i) = kalman_update(s, a, x, p).z_hat;
  }
  const Vector mean = samples.rowwise().mean();
  for (int j = 0; j < 3; ++j) {
    const double sd = std::sqrt(
        (samples.row(j).array() - mean[j]).square().sum() / (draws - 1.0));
    const double se = sd / std::sqrt(static_cast<double>(draws));
    CHECK(std::abs(mean[j] - forecast[j]) <= 3.0 * se + 1e-12);
  }
}
