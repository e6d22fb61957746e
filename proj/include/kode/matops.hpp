#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kode/errors.hpp"
#include "kode/rng.hpp"
#include "kode/stats.hpp"

namespace kode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename Derived>
Matrix symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return 0.5 * (m + m.transpose());
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  if (m.rows() != m.cols()) return false;
  const Matrix d = m - m.transpose();
  return d.cwiseAbs().maxCoeff() <= tol * std::max(1.0, m.cwiseAbs().maxCoeff());
}

// Smallest eigenvalue of a symmetric matrix.
template <typename Derived>
double min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m),
                                           Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericError("min_eigenvalue: eigensolver failed");
  return es.eigenvalues().minCoeff();
}

// max |lambda| over the (generally complex) spectrum.
template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& m_expr) {
  const Matrix m = m_expr;
  if (m.rows() != m.cols())
    throw DimensionError("spectral_radius: matrix is not square");
  if (!m.allFinite())
    throw InputError("spectral_radius: non-finite entries");
  Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericError("spectral_radius: eigenvalue iteration failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// true iff min eigenvalue of (p_hi - p_lo) >= -tol.
template <typename DerivedA, typename DerivedB>
bool psd_dominates(const Eigen::MatrixBase<DerivedA>& p_hi,
                   const Eigen::MatrixBase<DerivedB>& p_lo, double tol) {
  if (p_hi.rows() != p_lo.rows() || p_hi.cols() != p_lo.cols() ||
      p_hi.rows() != p_hi.cols())
    throw DimensionError("psd_dominates: dimension mismatch");
  return min_eigenvalue(p_hi - p_lo) >= -tol;
}

// Symmetric PSD square root via eigendecomposition; tolerates eigenvalues
// down to -tol*scale, which are clamped to zero.
template <typename Derived>
Matrix psd_sqrt(const Eigen::MatrixBase<Derived>& m, double tol = 1e-9) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m));
  if (es.info() != Eigen::Success)
    throw NumericError("psd_sqrt: eigensolver failed");
  Vector lambda = es.eigenvalues();
  const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -tol * scale)
      throw ParameterError("psd_sqrt: matrix is not positive semidefinite");
    lambda[i] = std::sqrt(std::max(lambda[i], 0.0));
  }
  return es.eigenvectors() * lambda.asDiagonal() *
         es.eigenvectors().transpose();
}

// Solves Z = gamma * Z * gamma^T + q by the Kronecker vectorization
// (I - gamma (x) gamma) vec(Z) = vec(q). Exact up to the dense solve, so the
// residual is at rounding level for the small dimensions used here.
template <typename DerivedA, typename DerivedB>
Matrix solve_lyapunov(const Eigen::MatrixBase<DerivedA>& gamma_expr,
                      const Eigen::MatrixBase<DerivedB>& q_expr) {
  const Matrix gamma = gamma_expr;
  const Matrix q = q_expr;
  const Eigen::Index d = gamma.rows();
  if (gamma.cols() != d || q.rows() != d || q.cols() != d)
    throw DimensionError("solve_lyapunov: dimension mismatch");
  if (spectral_radius(gamma) >= 1.0)
    throw InstabilityError("solve_lyapunov: spectral radius >= 1");
  Matrix a = Matrix::Identity(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      a.block(i * d, j * d, d, d) -= gamma(i, j) * gamma;
  const Vector vec_q = q.reshaped();
  const Vector vec_z = a.partialPivLu().solve(vec_q);
  return symmetrized(vec_z.reshaped(d, d));
}

// One step of the difference Riccati equation
//   g(P, a) = gamma P gamma^T + Q - gamma P a (a^T P a + sigma2)^-1 a^T P gamma^T,
// returned symmetrized.
template <typename DerivedP, typename DerivedA, typename DerivedG,
          typename DerivedQ>
Matrix riccati_step(const Eigen::MatrixBase<DerivedP>& p_expr,
                    const Eigen::MatrixBase<DerivedA>& a_expr,
                    const Eigen::MatrixBase<DerivedG>& gamma_expr,
                    const Eigen::MatrixBase<DerivedQ>& q_expr, double sigma2) {
  const Matrix p = p_expr;
  const Vector a = a_expr;
  const Matrix gamma = gamma_expr;
  const Matrix q = q_expr;
  const Eigen::Index d = p.rows();
  if (p.cols() != d || a.size() != d || gamma.rows() != d ||
      gamma.cols() != d || q.rows() != d || q.cols() != d)
    throw DimensionError("riccati_step: dimension mismatch");
  if (sigma2 <= 0.0)
    throw ParameterError("riccati_step: sigma2 must be positive");
  const double innovation_var = a.dot(p * a) + sigma2;
  const Vector gpa = gamma * (p * a);
  const Matrix g = gamma * p * gamma.transpose() + q -
                   gpa * gpa.transpose() / innovation_var;
  return symmetrized(g);
}

// Steady-state error covariance for a fixed action: fixed point of g(., a)
// iterated from P0 = q. Returns the first iterate whose forward residual
// ||g(P, a) - P||_F is within tol.
template <typename DerivedG, typename DerivedQ, typename DerivedA>
Matrix solve_dare(const Eigen::MatrixBase<DerivedG>& gamma_expr,
                  const Eigen::MatrixBase<DerivedQ>& q_expr, double sigma2,
                  const Eigen::MatrixBase<DerivedA>& a_expr,
                  double tol = 1e-10, long max_iter = 1000000) {
  const Matrix gamma = gamma_expr;
  const Matrix q = q_expr;
  const Vector a = a_expr;
  if (tol <= 0.0) throw ParameterError("solve_dare: tol must be positive");
  if (spectral_radius(gamma) >= 1.0)
    throw InstabilityError("solve_dare: spectral radius >= 1");
  Matrix p = symmetrized(q);
  double residual = 0.0;
  for (long it = 0; it < max_iter; ++it) {
    const Matrix next = riccati_step(p, a, gamma, q, sigma2);
    residual = (next - p).norm();
    if (residual <= tol) return p;
    p = next;
  }
  throw ConvergenceError("solve_dare: no fixed point within max_iter, residual " +
                             std::to_string(residual),
                         residual);
}

// O(gamma, t0, t1) = sum_{tau=t0}^{t1} (gamma^T)^tau a_tau a_tau^T gamma^tau.
// `actions` is indexed by absolute round, so it must cover index t1.
template <typename Derived>
Matrix observability_gramian(const Eigen::MatrixBase<Derived>& gamma_expr,
                             std::span<const Vector> actions, long t0,
                             long t1) {
  const Matrix gamma = gamma_expr;
  const Eigen::Index d = gamma.rows();
  if (gamma.cols() != d)
    throw DimensionError("observability_gramian: matrix is not square");
  if (t0 > t1 || t0 < 0)
    throw InputError("observability_gramian: bad window [t0, t1]");
  if (static_cast<long>(actions.size()) <= t1)
    throw InputError("observability_gramian: missing action for some round");
  Matrix power = Matrix::Identity(d, d);
  for (long tau = 0; tau < t0; ++tau) power = gamma * power;
  Matrix gram = Matrix::Zero(d, d);
  for (long tau = t0; tau <= t1; ++tau) {
    const Vector& a = actions[static_cast<std::size_t>(tau)];
    if (a.size() != d)
      throw DimensionError("observability_gramian: action dimension mismatch");
    const Vector v = power.transpose() * a;
    gram.noalias() += v * v.transpose();
    power = gamma * power;
  }
  return symmetrized(gram);
}

// Coordinates adapted to what a single action can observe. The first
// obs_dim columns of `transform` span span{a, gamma^T a, ..., (gamma^T)^{d-1} a};
// in these coordinates gamma becomes block lower triangular.
struct ObservabilityDecomposition {
  Matrix transform;        // orthogonal, observable columns first
  Eigen::Index obs_dim;    // dimension of the observable subspace
  Matrix gamma_obs;        // observable block
  Matrix gamma_cross;      // coupling block (unobservable <- observable)
  Matrix gamma_unobs;      // unobservable block
  Vector a_obs;            // action expressed in the observable coordinates
};

template <typename DerivedG, typename DerivedA>
ObservabilityDecomposition observability_decompose(
    const Eigen::MatrixBase<DerivedG>& gamma_expr,
    const Eigen::MatrixBase<DerivedA>& a_expr) {
  const Matrix gamma = gamma_expr;
  const Vector a = a_expr;
  const Eigen::Index d = gamma.rows();
  if (gamma.cols() != d || a.size() != d)
    throw DimensionError("observability_decompose: dimension mismatch");
  if (std::abs(a.norm() - 1.0) > 1e-12)
    throw ParameterError("observability_decompose: action must be unit norm");

  Matrix krylov(d, d);
  Vector v = a;
  for (Eigen::Index j = 0; j < d; ++j) {
    krylov.col(j) = v;
    v = gamma.transpose() * v;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(krylov);
  qr.setThreshold(1e-10);
  const Eigen::Index r = qr.rank();

  ObservabilityDecomposition dec;
  dec.transform = qr.householderQ() * Matrix::Identity(d, d);
  dec.obs_dim = r;
  const auto t_obs = dec.transform.leftCols(r);
  const auto t_unobs = dec.transform.rightCols(d - r);
  dec.gamma_obs = t_obs.transpose() * gamma * t_obs;
  dec.gamma_cross = t_unobs.transpose() * gamma * t_obs;
  dec.gamma_unobs = t_unobs.transpose() * gamma * t_unobs;
  dec.a_obs = t_obs.transpose() * a;
  return dec;
}

// Empirical (1 - alpha)-quantile of w^T s w for w ~ N(0, I), i.e. the nu with
// P(w^T s w >= nu) = alpha up to Monte Carlo error. Deterministic given seed.
template <typename Derived>
double quadratic_form_quantile(const Eigen::MatrixBase<Derived>& s_expr,
                               double alpha, long samples,
                               std::uint64_t seed) {
  const Matrix s = s_expr;
  if (s.rows() != s.cols())
    throw DimensionError("quadratic_form_quantile: matrix is not square");
  if (!is_symmetric(s))
    throw ParameterError("quadratic_form_quantile: matrix is not symmetric");
  if (alpha <= 0.0 || alpha >= 1.0)
    throw ParameterError("quadratic_form_quantile: alpha outside (0,1)");
  if (samples < 10000)
    throw ParameterError("quadratic_form_quantile: need at least 1e4 samples");
  Rng rng(mix_seed({seed, stream::quantile}));
  std::vector<double> vals(static_cast<std::size_t>(samples));
  const Eigen::Index d = s.rows();
  for (auto& val : vals) {
    const Vector w = rng.normal_vector(d);
    val = w.dot(s * w);
  }
  return quantile_linear(std::move(vals), 1.0 - alpha);
}

}  // namespace kode
