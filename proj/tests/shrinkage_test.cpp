#include "dynmln/shrinkage.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dynmln/gp_kernel.hpp"
#include "dynmln/rng.hpp"

using namespace dynmln;

TEST(TauFromDelta, CumulativeProduct) {
  Vector d(3);
  d << 2.0, 3.0, 4.0;
  const Vector tau = tau_from_delta(d);
  EXPECT_DOUBLE_EQ(tau[0], 2.0);
  EXPECT_DOUBLE_EQ(tau[1], 6.0);
  EXPECT_DOUBLE_EQ(tau[2], 24.0);
  Vector bad(2);
  bad << 1.0, 0.0;
  EXPECT_THROW(tau_from_delta(bad), std::invalid_argument);
  EXPECT_EQ(tau_from_delta(Vector()).size(), 0);
}

TEST(QuadraticForms, IdentityPrecisionGivesSquaredNorms) {
  std::vector<Matrix> coords(3, Matrix(4, 2));
  double fill = 0.0;
  for (auto& c : coords)
    for (int i = 0; i < 4; ++i)
      for (int r = 0; r < 2; ++r) c(i, r) = (fill += 0.25);
  const Vector q = shrink_quadratic_forms(coords, Matrix::Identity(4, 4));
  for (int m = 0; m < 2; ++m) {
    double want = 0.0;
    for (const auto& c : coords) want += c.col(m).squaredNorm();
    EXPECT_NEAR(q[m], want, 1e-12);
  }
}

TEST(QuadraticForms, GeneralPrecision) {
  Matrix sigma_inv(2, 2);
  sigma_inv << 2.0, -1.0, -1.0, 3.0;
  std::vector<Matrix> coords(1, Matrix(2, 1));
  coords[0] << 1.0, 2.0;
  // [1 2] [2 -1; -1 3] [1; 2] = [1 2] [0; 5] = 10
  const Vector q = shrink_quadratic_forms(coords, sigma_inv);
  EXPECT_NEAR(q[0], 10.0, 1e-14);
}

TEST(UpdateDeltas, MatchesIndependentConditionalDerivation) {
  // same substream consumed by library and by a from-scratch implementation
  // of the increment sweep: shapes, rates and draws must coincide exactly
  const int V = 3, n = 2, R = 3;
  const double a1 = 2.0, a2 = 2.5;
  RngStream coord_rng(88);
  std::vector<Matrix> coords(V, Matrix(n, R));
  for (auto& c : coords)
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < R; ++r) c(i, r) = coord_rng.normal();
  Matrix sigma_inv(2, 2);
  sigma_inv << 1.5, -0.25, -0.25, 1.25;
  const Vector q = shrink_quadratic_forms(coords, sigma_inv);

  ShrinkState st;
  st.a1 = a1;
  st.a2 = a2;
  st.delta_shared.resize(R);
  st.delta_shared << 1.1, 0.9, 1.4;
  Vector mine = st.delta_shared;

  RngStream lib_rng(314), ref_rng(314);
  update_shared_deltas(st, coords, sigma_inv, lib_rng);

  for (int r = 0; r < R; ++r) {
    const double shape = (r == 0 ? a1 : a2) + 0.5 * V * n * (R - r);
    double rate = 1.0;
    for (int m = r; m < R; ++m) {
      double prod = 1.0;
      for (int t = 0; t <= m; ++t)
        if (t != r) prod *= mine[t];
      rate += 0.5 * prod * q[m];
    }
    mine[r] = ref_rng.gamma(shape, rate);
  }
  for (int r = 0; r < R; ++r)
    ASSERT_DOUBLE_EQ(st.delta_shared[r], mine[r]) << "r = " << r;
}

TEST(UpdateDeltas, ZeroCoordinatesReduceToPureGammaDraws) {
  // with q = 0 every conditional is Gamma(shape, 1); check the Monte Carlo
  // mean of each increment against its shape
  const int V = 4, n = 3, R = 2;
  const double a1 = 2.0, a2 = 2.5;
  const std::vector<Matrix> coords(V, Matrix::Zero(n, R));
  const Matrix sigma_inv = Matrix::Identity(n, n);
  const int N = 20000;
  double s0 = 0.0, s1 = 0.0;
  RngStream rng(999);
  for (int it = 0; it < N; ++it) {
    ShrinkState st;
    st.a1 = a1;
    st.a2 = a2;
    st.delta_shared = Vector::Ones(R);
    update_shared_deltas(st, coords, sigma_inv, rng);
    s0 += st.delta_shared[0];
    s1 += st.delta_shared[1];
  }
  const double shape0 = a1 + 0.5 * V * n * R;       // 14
  const double shape1 = a2 + 0.5 * V * n * (R - 1);  // 8.5
  EXPECT_NEAR(s0 / N, shape0, 4.0 * std::sqrt(shape0 / N));
  EXPECT_NEAR(s1 / N, shape1, 4.0 * std::sqrt(shape1 / N));
}

TEST(UpdateDeltas, LayerSweepIsDeterministicPerStream) {
  const int V = 2, n = 2, H = 2;
  RngStream coord_rng(5);
  std::vector<Matrix> x(V, Matrix(n, H));
  for (auto& c : x)
    for (int i = 0; i < n; ++i)
      for (int h = 0; h < H; ++h) c(i, h) = coord_rng.normal();
  auto run = [&](std::uint64_t seed) {
    ShrinkState st;
    st.delta_layer.assign(2, Vector::Ones(H));
    RngStream rng(seed);
    update_layer_deltas(st, 1, x, Matrix::Identity(n, n), rng);
    return st;
  };
  const ShrinkState a = run(42), b = run(42), c = run(43);
  EXPECT_TRUE(a.delta_layer[1] == b.delta_layer[1]);
  EXPECT_FALSE(a.delta_layer[1] == c.delta_layer[1]);
  EXPECT_TRUE(a.delta_layer[0] == b.delta_layer[0]);  // untouched layer
}

TEST(UpdateDeltas, EmptyDimensionIsNoOp) {
  ShrinkState st;
  st.delta_shared = Vector();
  st.delta_layer.assign(1, Vector());
  RngStream rng(1);
  update_shared_deltas(st, {Matrix::Zero(2, 0)}, Matrix::Identity(2, 2), rng);
  update_layer_deltas(st, 0, {Matrix::Zero(2, 0)}, Matrix::Identity(2, 2), rng);
  EXPECT_EQ(st.delta_shared.size(), 0);
  RngStream untouched(1);
  EXPECT_EQ(rng.raw(), untouched.raw());  // no draws were consumed
}

TEST(UpdateDeltas, GrowingIncrementsShrinkLaterDimensions) {
  // with many informative dimensions of shrinking scale, E[tau_r] grows in r;
  // check the prior-style behavior through repeated sweeps at fixed q
  const int R = 4;
  std::vector<Matrix> coords(5, Matrix::Zero(3, R));
  ShrinkState st;
  st.delta_shared = Vector::Ones(R);
  RngStream rng(7);
  Vector tau_sum = Vector::Zero(R);
  const int N = 5000;
  for (int it = 0; it < N; ++it) {
    update_shared_deltas(st, coords, Matrix::Identity(3, 3), rng);
    tau_sum += st.tau_shared();
  }
  for (int r = 1; r < R; ++r) EXPECT_GT(tau_sum[r], tau_sum[r - 1]);
}
