#include "dynmln/gp_kernel.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dynmln;

namespace {
Vector make_grid(int n, double step = 1.0, double start = 1.0) {
  Vector g(n);
  for (int i = 0; i < n; ++i) g[i] = start + i * step;
  return g;
}
}  // namespace

TEST(SqExpCov, KnownEntries) {
  const Matrix s = sq_exp_cov(make_grid(3), 0.05);
  EXPECT_DOUBLE_EQ(s(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s(1, 1), 1.0);
  // exp(-0.05 * 1^2) and exp(-0.05 * 2^2), frozen to full precision
  EXPECT_NEAR(s(0, 1), 0.951229424500714, 1e-15);
  EXPECT_NEAR(s(0, 2), 0.8187307530779818, 1e-15);
  EXPECT_DOUBLE_EQ(s(0, 1), s(1, 0));
}

TEST(SqExpCov, StationaryOnUniformGrid) {
  const Matrix s = sq_exp_cov(make_grid(6, 0.5), 0.3);
  for (int lag = 1; lag < 6; ++lag)
    for (int i = 0; i + lag < 6; ++i)
      ASSERT_DOUBLE_EQ(s(i, i + lag), s(0, lag)) << "lag " << lag;
}

TEST(SqExpCov, ShrinksWithDistanceAndKappa) {
  const Matrix a = sq_exp_cov(make_grid(4), 0.1);
  EXPECT_GT(a(0, 1), a(0, 2));
  EXPECT_GT(a(0, 2), a(0, 3));
  const Matrix b = sq_exp_cov(make_grid(4), 1.0);
  EXPECT_GT(a(0, 1), b(0, 1));
}

TEST(SqExpCov, RejectsBadInput) {
  EXPECT_THROW(sq_exp_cov(Vector(), 0.05), std::invalid_argument);
  Vector bad(3);
  bad << 1.0, 1.0, 2.0;
  EXPECT_THROW(sq_exp_cov(bad, 0.05), std::invalid_argument);
  Vector dec(2);
  dec << 2.0, 1.0;
  EXPECT_THROW(sq_exp_cov(dec, 0.05), std::invalid_argument);
  EXPECT_THROW(sq_exp_cov(make_grid(3), 0.0), std::invalid_argument);
  EXPECT_THROW(sq_exp_cov(make_grid(3), -1.0), std::invalid_argument);
}

TEST(CholJitter, FactorsWellConditionedMatrixExactly) {
  const Matrix s = sq_exp_cov(make_grid(5), 0.5);
  const CholResult cr = chol_jitter(s);
  EXPECT_EQ(cr.jitter, 0.0);
  const Matrix back = cr.L * cr.L.transpose();
  EXPECT_LT((back - s).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(CholJitter, RidgesNearSingularMatrix) {
  // fine grid, long length scale: numerically rank deficient
  const Matrix s = sq_exp_cov(make_grid(60, 0.05), 0.05);
  const CholResult cr = chol_jitter(s, "fine-grid covariance");
  EXPECT_GT(cr.jitter, 0.0);
  EXPECT_LE(cr.jitter, 1e-6);
  Matrix target = s;
  target.diagonal().array() += cr.jitter;
  EXPECT_LT((cr.L * cr.L.transpose() - target).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CholJitter, FailsOnIndefiniteMatrixNamingIt) {
  Matrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  try {
    chol_jitter(bad, "test matrix");
    FAIL() << "expected numeric_error";
  } catch (const numeric_error& e) {
    EXPECT_NE(std::string(e.what()).find("test matrix"), std::string::npos);
  }
  EXPECT_THROW(chol_jitter(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(MvnSample, MatchesTargetMoments) {
  Matrix s(2, 2);
  s << 1.0, 0.5, 0.5, 1.0;
  const CholResult cr = chol_jitter(s);
  Vector mean(2);
  mean << -1.0, 2.0;
  RngStream rng(4242);
  const int N = 200000;
  double m0 = 0.0, m1 = 0.0, v0 = 0.0, v1 = 0.0, c01 = 0.0;
  for (int i = 0; i < N; ++i) {
    const Vector x = mvn_sample(mean, cr.L, rng);
    m0 += x[0];
    m1 += x[1];
    v0 += (x[0] + 1.0) * (x[0] + 1.0);
    v1 += (x[1] - 2.0) * (x[1] - 2.0);
    c01 += (x[0] + 1.0) * (x[1] - 2.0);
  }
  const double se_mean = 4.0 / std::sqrt(static_cast<double>(N));
  EXPECT_NEAR(m0 / N, -1.0, se_mean);
  EXPECT_NEAR(m1 / N, 2.0, se_mean);
  EXPECT_NEAR(v0 / N, 1.0, 4.0 * std::sqrt(2.0 / N));
  EXPECT_NEAR(v1 / N, 1.0, 4.0 * std::sqrt(2.0 / N));
  // Var(x0 x1 products) = 1 + rho^2 for unit-variance components
  EXPECT_NEAR(c01 / N, 0.5, 4.0 * std::sqrt(1.25 / N));
}

TEST(MvnSample, RejectsMismatchedShapes) {
  RngStream rng(1);
  EXPECT_THROW(mvn_sample(Vector::Zero(3), Matrix::Identity(2, 2), rng),
               std::invalid_argument);
}

TEST(CovarianceSet, InversesAndFactorsAreConsistent) {
  const CovarianceSet cs = CovarianceSet::build(make_grid(4), 0.05, 0.1, 0.2);
  EXPECT_LT((cs.sigma_mu * cs.inv_mu - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_LT((cs.chol_xbar * cs.chol_xbar.transpose() - cs.sigma_xbar)
                .cwiseAbs()
                .maxCoeff(),
            1e-8);
  EXPECT_LT((cs.sigma_x * cs.inv_x - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_DOUBLE_EQ(cs.sigma_xbar(0, 1), std::exp(-0.1));
}
