#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "dynmln/rng.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Squared-exponential covariance on a fixed time grid:
//   Sigma[i][j] = exp(-kappa * (t_i - t_j)^2), unit diagonal.
inline Matrix sq_exp_cov(const Vector& grid, double kappa) {
  if (grid.size() < 1) throw std::invalid_argument("sq_exp_cov: empty grid");
  if (!(kappa > 0.0) || !std::isfinite(kappa))
    throw std::invalid_argument("sq_exp_cov: kappa must be positive and finite");
  for (Eigen::Index i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] < grid[i + 1]))
      throw std::invalid_argument("sq_exp_cov: grid must be strictly increasing");
  const Eigen::Index n = grid.size();
  Matrix sigma(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double d = grid[i] - grid[j];
      const double v = std::exp(-kappa * d * d);
      sigma(i, j) = v;
      sigma(j, i) = v;
    }
  }
  return sigma;
}

struct CholResult {
  Matrix L;       // lower-triangular factor of sigma + jitter*I
  double jitter;  // 0 when no ridge was needed
};

// Cholesky with an escalating diagonal ridge.  Dense squared-exponential
// matrices on fine grids are numerically rank-deficient, so a tiny ridge is
// routinely required; anything past 1e-6 is treated as a hard failure.
inline CholResult chol_jitter(const Matrix& sigma, const std::string& name = "matrix") {
  if (sigma.rows() != sigma.cols())
    throw std::invalid_argument("chol_jitter: matrix must be square");
  static const double ladder[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double j : ladder) {
    Matrix work = sigma;
    if (j > 0.0) work.diagonal().array() += j;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), j};
  }
  throw numeric_error("cholesky failed for " + name +
                      " even with jitter 1e-6; matrix is not numerically PSD");
}

// Draw from N(mean, L L^T) given the lower Cholesky factor L.
inline Vector mvn_sample(const Vector& mean, const Matrix& cholL, RngStream& rng) {
  if (cholL.rows() != cholL.cols() || mean.size() != cholL.rows())
    throw std::invalid_argument("mvn_sample: dimension mismatch");
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + cholL.template triangularView<Eigen::Lower>() * z;
}

// The three grid covariance matrices used by the model (baseline process,
// shared coordinates, layer coordinates) with factorizations and inverses
// computed once per run.
struct CovarianceSet {
  Vector grid;
  double kappa_mu = 0.0, kappa_xbar = 0.0, kappa_x = 0.0;
  Matrix sigma_mu, sigma_xbar, sigma_x;
  Matrix chol_mu, chol_xbar, chol_x;  // lower factors (jittered if needed)
  Matrix inv_mu, inv_xbar, inv_x;     // inverses of the jittered matrices

  static CovarianceSet build(const Vector& grid, double kappa_mu,
                             double kappa_xbar, double kappa_x) {
    CovarianceSet cs;
    cs.grid = grid;
    cs.kappa_mu = kappa_mu;
    cs.kappa_xbar = kappa_xbar;
    cs.kappa_x = kappa_x;
    cs.sigma_mu = sq_exp_cov(grid, kappa_mu);
    cs.sigma_xbar = sq_exp_cov(grid, kappa_xbar);
    cs.sigma_x = sq_exp_cov(grid, kappa_x);
    cs.chol_mu = prep(cs.sigma_mu, "baseline covariance", cs.inv_mu);
    cs.chol_xbar = prep(cs.sigma_xbar, "shared-coordinate covariance", cs.inv_xbar);
    cs.chol_x = prep(cs.sigma_x, "layer-coordinate covariance", cs.inv_x);
    return cs;
  }

 private:
  static Matrix prep(const Matrix& sigma, const std::string& name, Matrix& inv) {
    const CholResult cr = chol_jitter(sigma, name);
    // invert through the factor so inverse and factor stay consistent
    const Eigen::Index n = sigma.rows();
    Matrix eye = Matrix::Identity(n, n);
    Matrix half = cr.L.template triangularView<Eigen::Lower>().solve(eye);
    inv = half.transpose() * half;
    return cr.L;
  }
};

}  // namespace dynmln
