#include "dynmln/gibbs.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dynmln/gp_kernel.hpp"
#include "dynmln/net_data.hpp"
#include "dynmln/rng.hpp"

using namespace dynmln;

namespace {

Vector make_grid(int n) {
  Vector g(n);
  for (int i = 0; i < n; ++i) g[i] = 1.0 + 0.5 * i;
  return g;
}

DynMultiNet random_net(int V, int K, int n, std::uint64_t seed,
                       double p_missing = 0.0) {
  DynMultiNet net = DynMultiNet::zeros(V, K, n, make_grid(n));
  RngStream rng(seed);
  for (auto& c : net.obs) {
    const double u = rng.uniform();
    c = u < p_missing ? kMissing : (u < p_missing + 0.5 ? int8_t(1) : int8_t(0));
  }
  return net;
}

// A state with fully randomized components and arbitrary positive weights,
// standing in for a mid-chain configuration.
LatentState random_state(const DynMultiNet& net, const FitConfig& cfg,
                         const CovarianceSet& covs, std::uint64_t seed) {
  RngStream rng(seed);
  LatentState st = init_state(net, cfg, covs, rng);
  for (size_t c = 0; c < st.omega.size(); ++c)
    st.omega[c] = st.cur[c] == kMissing ? 0.0 : rng.uniform(0.1, 1.2);
  return st;
}

}  // namespace

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(3.0), 1.0 / (1.0 + std::exp(-3.0)), 1e-15);
  EXPECT_NEAR(sigmoid(-3.0), 1.0 - sigmoid(3.0), 1e-15);
  EXPECT_GT(sigmoid(-700.0), 0.0);        // exp(-700) is still representable
  EXPECT_DOUBLE_EQ(sigmoid(-800.0), 0.0);  // underflows past the denormals
  EXPECT_LE(sigmoid(800.0), 1.0);
  EXPECT_DOUBLE_EQ(sigmoid(800.0), 1.0);  // saturates; clamp handles recording
}

TEST(ClampProb, KeepsRecordedProbabilitiesInsideOpenInterval) {
  EXPECT_EQ(clamp_prob(0.0), 1e-300);
  EXPECT_LT(clamp_prob(1.0), 1.0);
  EXPECT_GT(clamp_prob(1.0), 1.0 - 1e-15);
  EXPECT_DOUBLE_EQ(clamp_prob(0.5), 0.5);
}

TEST(LogOdds, MatchesScalarRecomputation) {
  const DynMultiNet net = random_net(4, 2, 3, 11);
  const FitConfig cfg{.R = 2, .H = 2, .seed = 5};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.1, 0.2);
  RngStream rng(3);
  const LatentState st = init_state(net, cfg, covs, rng);
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i)
      for (int v = 1; v < 4; ++v)
        for (int u = 0; u < v; ++u) {
          double want = st.mu[i];
          for (int r = 0; r < 2; ++r)
            want += st.xbar[v](i, r) * st.xbar[u](i, r);
          for (int h = 0; h < 2; ++h)
            want += st.x[k][v](i, h) * st.x[k][u](i, h);
          ASSERT_NEAR(logodds(st, k, i, v, u), want, 1e-12);
          ASSERT_DOUBLE_EQ(logodds(st, k, i, v, u), logodds(st, k, i, u, v));
        }
}

TEST(LogOdds, InvariantUnderSharedRotation) {
  const DynMultiNet net = random_net(5, 2, 3, 21);
  const FitConfig cfg{.R = 3, .H = 1, .seed = 8};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  RngStream rng(9);
  LatentState st = init_state(net, cfg, covs, rng);

  Matrix m(3, 3);
  RngStream qr(17);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = qr.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(m).householderQ();

  LatentState rotated = st;
  for (auto& xb : rotated.xbar) xb = xb * q;
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 3; ++i)
      for (int v = 1; v < 5; ++v)
        for (int u = 0; u < v; ++u)
          ASSERT_NEAR(logodds(st, k, i, v, u), logodds(rotated, k, i, v, u), 1e-10);
}

TEST(InitState, PriorShapesAndMoments) {
  DynMultiNet net = random_net(3, 2, 2, 1);
  net.obs[0] = kMissing;
  const FitConfig cfg{.R = 2, .H = 1, .seed = 0};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);

  const int N = 20000;
  double mu_sum = 0.0, mu_sq = 0.0, ones = 0.0;
  double std_sq = 0.0;
  long std_n = 0;
  RngStream rng(2718);
  for (int it = 0; it < N; ++it) {
    const LatentState st = init_state(net, cfg, covs, rng);
    ASSERT_EQ(st.mu.size(), 2);
    ASSERT_EQ(st.xbar.size(), 3u);
    ASSERT_EQ(st.R(), 2);
    ASSERT_EQ(st.H(), 1);
    ASSERT_NE(st.cur[0], kMissing);  // fair-coin imputation at startup
    ones += st.cur[0];
    mu_sum += st.mu[0];
    mu_sq += st.mu[0] * st.mu[0];
    // one time point per trajectory keeps the standardized values independent
    const Vector tau = st.shrink.tau_shared();
    for (int v = 0; v < 3; ++v)
      for (int r = 0; r < 2; ++r) {
        const double z = st.xbar[v](0, r) * std::sqrt(tau[r]);
        std_sq += z * z;
        ++std_n;
      }
  }
  EXPECT_NEAR(mu_sum / N, 0.0, 4.0 / std::sqrt(N));
  EXPECT_NEAR(mu_sq / N, 1.0, 4.0 * std::sqrt(2.0 / N));
  EXPECT_NEAR(ones / N, 0.5, 4.0 * std::sqrt(0.25 / N));
  // coordinates standardized by their own precision are unit normals
  EXPECT_NEAR(std_sq / std_n, 1.0, 4.0 * std::sqrt(2.0 / std_n));
}

TEST(InitState, CanLeaveMissingCellsUnimputed) {
  DynMultiNet net = random_net(3, 1, 2, 4);
  net.obs[2] = kMissing;
  const FitConfig cfg{.R = 1, .H = 0, .seed = 1};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  RngStream rng(1);
  const LatentState st = init_state(net, cfg, covs, rng, false);
  EXPECT_EQ(st.cur[2], kMissing);
}

TEST(MuConditional, MatchesDenseRegressionConstruction) {
  const DynMultiNet net = random_net(4, 2, 3, 33, 0.15);
  const FitConfig cfg{.R = 2, .H = 1, .seed = 2};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.15, 0.4);
  const LatentState st = random_state(net, cfg, covs, 77);
  const Dims d = net.dims();

  Matrix prec = covs.inv_mu;
  Vector eta = Vector::Zero(d.n);
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i)
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u) {
          const long idx = d.flat(k, i, pair_index(v, u));
          if (st.cur[idx] == kMissing) continue;
          const double offset = st.xbar[v].row(i).dot(st.xbar[u].row(i)) +
                                st.x[k][v].row(i).dot(st.x[k][u].row(i));
          prec(i, i) += st.omega[idx];
          eta[i] += (st.cur[idx] - 0.5) - st.omega[idx] * offset;
        }

  const GaussianConditional gc = mu_conditional(st, net, covs);
  EXPECT_LT((gc.precision - prec).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((gc.eta - eta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MuConditional, SingleCellHandCase) {
  // V=2, K=1, n=1: precision = 1/sigma + omega, eta = y - 1/2 (no coordinates)
  DynMultiNet net = DynMultiNet::zeros(2, 1, 1, Vector::Ones(1));
  net.obs[0] = 1;
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  LatentState st;
  st.mu = Vector::Zero(1);
  st.omega = {0.4};
  st.cur = net.obs;
  const GaussianConditional gc = mu_conditional(st, net, covs);
  EXPECT_NEAR(gc.precision(0, 0), 1.0 + 0.4, 1e-12);
  EXPECT_NEAR(gc.eta[0], 0.5, 1e-12);
}

TEST(SharedConditional, MatchesDenseRegressionConstruction) {
  const DynMultiNet net = random_net(4, 2, 3, 51, 0.15);
  const FitConfig cfg{.R = 2, .H = 1, .seed = 3};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.15, 0.4);
  const LatentState st = random_state(net, cfg, covs, 91);
  const Dims d = net.dims();
  const int R = 2, n = d.n;

  for (int v = 0; v < d.V; ++v) {
    Matrix prec = Matrix::Zero(n * R, n * R);
    const Vector tau = st.shrink.tau_shared();
    for (int r = 0; r < R; ++r)
      prec.block(r * n, r * n, n, n) = tau[r] * covs.inv_xbar;
    Vector eta = Vector::Zero(n * R);
    for (int k = 0; k < d.K; ++k)
      for (int i = 0; i < n; ++i)
        for (int u = 0; u < d.V; ++u) {
          if (u == v) continue;
          const long idx = d.flat(k, i, pair_index(std::max(v, u), std::min(v, u)));
          if (st.cur[idx] == kMissing) continue;
          Vector phi = Vector::Zero(n * R);
          for (int r = 0; r < R; ++r) phi[r * n + i] = st.xbar[u](i, r);
          const double offset =
              st.mu[i] + st.x[k][v].row(i).dot(st.x[k][u].row(i));
          prec += st.omega[idx] * phi * phi.transpose();
          eta += phi * ((st.cur[idx] - 0.5) - st.omega[idx] * offset);
        }
    const GaussianConditional gc = shared_conditional(st, net, covs, v);
    ASSERT_LT((gc.precision - prec).cwiseAbs().maxCoeff(), 1e-10) << "actor " << v;
    ASSERT_LT((gc.eta - eta).cwiseAbs().maxCoeff(), 1e-10) << "actor " << v;
  }
}

TEST(LayerConditional, MatchesDenseRegressionConstruction) {
  const DynMultiNet net = random_net(4, 2, 3, 61, 0.15);
  const FitConfig cfg{.R = 2, .H = 2, .seed = 4};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.15, 0.4);
  const LatentState st = random_state(net, cfg, covs, 13);
  const Dims d = net.dims();
  const int H = 2, n = d.n;

  for (int k = 0; k < d.K; ++k)
    for (int v = 0; v < d.V; ++v) {
      Matrix prec = Matrix::Zero(n * H, n * H);
      const Vector tau = st.shrink.tau_layer(k);
      for (int h = 0; h < H; ++h)
        prec.block(h * n, h * n, n, n) = tau[h] * covs.inv_x;
      Vector eta = Vector::Zero(n * H);
      for (int i = 0; i < n; ++i)
        for (int u = 0; u < d.V; ++u) {
          if (u == v) continue;
          const long idx = d.flat(k, i, pair_index(std::max(v, u), std::min(v, u)));
          if (st.cur[idx] == kMissing) continue;
          Vector phi = Vector::Zero(n * H);
          for (int h = 0; h < H; ++h) phi[h * n + i] = st.x[k][u](i, h);
          const double offset =
              st.mu[i] + st.xbar[v].row(i).dot(st.xbar[u].row(i));
          prec += st.omega[idx] * phi * phi.transpose();
          eta += phi * ((st.cur[idx] - 0.5) - st.omega[idx] * offset);
        }
      const GaussianConditional gc = layer_conditional(st, net, covs, k, v);
      ASSERT_LT((gc.precision - prec).cwiseAbs().maxCoeff(), 1e-10)
          << "layer " << k << " actor " << v;
      ASSERT_LT((gc.eta - eta).cwiseAbs().maxCoeff(), 1e-10)
          << "layer " << k << " actor " << v;
    }
}

TEST(Conditionals, SharedAndLayerRolesCoincideOnSingleLayer) {
  // with one layer and matching priors, the layer update is the shared update
  // with the coordinate roles exchanged
  const DynMultiNet net = random_net(4, 1, 3, 71, 0.1);
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.2, 0.2);
  const Dims d = net.dims();

  const FitConfig cfg_l{.R = 0, .H = 2, .seed = 6};
  LatentState layer_st = random_state(net, cfg_l, covs, 41);

  LatentState shared_st = layer_st;
  shared_st.xbar = layer_st.x[0];
  shared_st.x.clear();
  shared_st.shrink.delta_shared = layer_st.shrink.delta_layer[0];
  shared_st.shrink.delta_layer.clear();

  for (int v = 0; v < d.V; ++v) {
    const GaussianConditional a = layer_conditional(layer_st, net, covs, 0, v);
    const GaussianConditional b = shared_conditional(shared_st, net, covs, v);
    ASSERT_LT((a.precision - b.precision).cwiseAbs().maxCoeff(), 1e-12);
    ASSERT_LT((a.eta - b.eta).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Conditionals, MissingCellsCarryNoInformation) {
  DynMultiNet net = random_net(3, 1, 2, 81, 0.0);
  net.obs[net.flat(0, 0, 1, 0)] = kMissing;
  const FitConfig cfg{.R = 1, .H = 1, .seed = 7};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  LatentState st = random_state(net, cfg, covs, 10);
  st.cur[net.flat(0, 0, 1, 0)] = kMissing;

  const GaussianConditional before = mu_conditional(st, net, covs);
  const GaussianConditional before_s = shared_conditional(st, net, covs, 0);
  st.omega[net.flat(0, 0, 1, 0)] = 1e6;  // must be ignored entirely
  const GaussianConditional after = mu_conditional(st, net, covs);
  const GaussianConditional after_s = shared_conditional(st, net, covs, 0);
  EXPECT_TRUE(before.precision == after.precision);
  EXPECT_TRUE(before.eta == after.eta);
  EXPECT_TRUE(before_s.precision == after_s.precision);
  EXPECT_TRUE(before_s.eta == after_s.eta);
}

TEST(StepShared, OverwhelmingShrinkagePinsCoordinatesNearZero) {
  const DynMultiNet net = random_net(4, 1, 3, 91);
  const FitConfig cfg{.R = 1, .H = 0, .seed = 12};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  LatentState st = random_state(net, cfg, covs, 12);
  st.shrink.delta_shared[0] = 1e8;
  RngStream rng(55);
  step_shared(st, net, covs, rng);
  double mx = 0.0;
  for (const auto& xb : st.xbar) mx = std::max(mx, xb.cwiseAbs().maxCoeff());
  EXPECT_LT(mx, 1e-3);
}

TEST(StepImpute, OnlyTouchesUnobservedCells) {
  DynMultiNet net = random_net(4, 2, 2, 101, 0.0);
  const long hole = net.flat(1, 1, 2, 0);
  net.obs[hole] = kMissing;
  const FitConfig cfg{.R = 1, .H = 1, .seed = 14};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  LatentState st = random_state(net, cfg, covs, 14);
  const std::vector<int8_t> before = st.cur;
  RngStream rng(21);
  step_impute(st, net, rng);
  for (size_t c = 0; c < st.cur.size(); ++c) {
    if (static_cast<long>(c) == hole) {
      ASSERT_NE(st.cur[c], kMissing);
    } else {
      ASSERT_EQ(st.cur[c], before[c]);
    }
  }
}

TEST(StepImpute, FollowsCurrentEdgeProbability) {
  DynMultiNet net = DynMultiNet::zeros(2, 1, 1, Vector::Ones(1));
  net.obs[0] = kMissing;
  LatentState st;
  st.mu = Vector::Zero(1);
  st.mu[0] = 2.0;  // p = sigmoid(2) ~ 0.8808
  st.omega = {0.0};
  st.cur = {kMissing};
  RngStream rng(31);
  const int N = 50000;
  double ones = 0.0;
  for (int it = 0; it < N; ++it) {
    step_impute(st, net, rng);
    ones += st.cur[0];
    st.cur[0] = kMissing;
  }
  const double p = sigmoid(2.0);
  EXPECT_NEAR(ones / N, p, 4.0 * std::sqrt(p * (1 - p) / N));
}

TEST(DrawEdges, FairAtZeroLogOdds) {
  DynMultiNet net = DynMultiNet::zeros(4, 1, 2, make_grid(2));
  LatentState st;
  st.mu = Vector::Zero(2);
  st.omega.assign(net.dims().cells(), 0.0);
  st.cur = net.obs;
  RngStream rng(61);
  long ones = 0, total = 0;
  for (int it = 0; it < 500; ++it) {
    draw_edges(st, net, rng);
    for (auto c : net.obs) {
      ones += c;
      ++total;
    }
  }
  EXPECT_NEAR(static_cast<double>(ones) / total, 0.5,
              4.0 * std::sqrt(0.25 / total));
}

TEST(GibbsSweep, DeterministicAndParallelAgnostic) {
  const DynMultiNet net = random_net(4, 3, 3, 111, 0.1);
  FitConfig cfg{.R = 2, .H = 2, .seed = 2025};
  const CovarianceSet covs = CovarianceSet::build(net.grid, 0.05, 0.05, 0.05);
  RngStream ra = substream(cfg.seed, 0, 0);
  LatentState a = init_state(net, cfg, covs, ra);
  LatentState b = a;
  LatentState c = a;

  FitConfig seq = cfg;
  seq.parallel_layers = false;
  for (int s = 1; s <= 3; ++s) {
    gibbs_sweep(a, net, covs, cfg, s);
    gibbs_sweep(b, net, covs, cfg, s);
    gibbs_sweep(c, net, covs, seq, s);
  }
  EXPECT_TRUE(a.mu == b.mu);
  EXPECT_TRUE(a.mu == c.mu);
  for (int v = 0; v < 4; ++v) {
    ASSERT_TRUE(a.xbar[v] == b.xbar[v]);
    ASSERT_TRUE(a.xbar[v] == c.xbar[v]);
    for (int k = 0; k < 3; ++k) {
      ASSERT_TRUE(a.x[k][v] == b.x[k][v]);
      ASSERT_TRUE(a.x[k][v] == c.x[k][v]);
    }
  }
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_EQ(a.omega, c.omega);
  EXPECT_EQ(a.cur, c.cur);
  EXPECT_TRUE(a.shrink.delta_shared == c.shrink.delta_shared);
}

TEST(FitConfigTest, ValidationGuardsEveryKnob) {
  const Dims d{4, 2, 3};
  FitConfig ok{.R = 2, .H = 2, .iterations = 100, .burn_in = 20, .seed = 1};
  ok.validate(d);
  EXPECT_EQ(ok.retained(), 80);

  auto expect_bad = [&](auto mutate) {
    FitConfig c = ok;
    mutate(c);
    EXPECT_THROW(c.validate(d), config_error);
  };
  expect_bad([](FitConfig& c) { c.R = 0; c.H = 0; });
  expect_bad([](FitConfig& c) { c.R = -1; });
  expect_bad([](FitConfig& c) { c.variant = Variant::Collapsed; });  // H != 0
  expect_bad([](FitConfig& c) { c.burn_in = 100; });
  expect_bad([](FitConfig& c) { c.burn_in = -1; });
  expect_bad([](FitConfig& c) { c.iterations = 0; c.burn_in = 0; });
  expect_bad([](FitConfig& c) { c.thin = 0; });
  expect_bad([](FitConfig& c) { c.thin = 3; });  // 80 % 3 != 0
  expect_bad([](FitConfig& c) { c.kappa_mu = 0.0; });
  expect_bad([](FitConfig& c) { c.kappa_x = -0.3; });
  expect_bad([](FitConfig& c) { c.a1 = 0.0; });
  expect_bad([](FitConfig& c) { c.a2 = -1.0; });
  EXPECT_THROW(ok.validate(Dims{1, 1, 1}), config_error);

  FitConfig col = ok;
  col.variant = Variant::Collapsed;
  col.H = 0;
  col.validate(d);
  EXPECT_THROW(parse_variant("bogus"), config_error);
  EXPECT_EQ(variant_name(parse_variant("separate")), "separate");
}

TEST(RunChain, LearnsBlockStructureAndTracksRetention) {
  // two blocks of actors with dense within / sparse between contact
  const int V = 5, K = 2, n = 4;
  DynMultiNet net = DynMultiNet::zeros(V, K, n, make_grid(n));
  RngStream gen(505);
  auto block = [](int v) { return v < 3 ? 0 : 1; };
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n; ++i)
      for (int v = 1; v < V; ++v)
        for (int u = 0; u < v; ++u)
          net.set(k, i, v, u,
                  gen.bernoulli(block(v) == block(u) ? 0.85 : 0.15) ? 1 : 0);

  FitConfig cfg{.R = 2, .H = 1, .iterations = 300, .burn_in = 100, .seed = 7};
  cfg.parallel_layers = false;
  int calls = 0;
  const PosteriorChain chain =
      run_chain(net, cfg, [&](int s, int total) {
        ++calls;
        EXPECT_EQ(total, 300);
        EXPECT_GE(s, 1);
      });
  EXPECT_EQ(calls, 300);
  EXPECT_EQ(chain.retained(), 200);
  EXPECT_EQ(chain.sweeps.front(), 101);
  EXPECT_EQ(chain.sweeps.back(), 300);
  EXPECT_TRUE(chain.missing.empty());
  for (double p : chain.pi) {
    ASSERT_GT(p, 0.0);
    ASSERT_LT(p, 1.0);
  }
  double within = 0.0, between = 0.0;
  long nw = 0, nb = 0;
  const int S = chain.retained();
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < K; ++k)
      for (int i = 0; i < n; ++i)
        for (int v = 1; v < V; ++v)
          for (int u = 0; u < v; ++u) {
            const double p = chain.at(s, net.dims().flat(k, i, pair_index(v, u)));
            if (block(v) == block(u)) {
              within += p;
              ++nw;
            } else {
              between += p;
              ++nb;
            }
          }
  EXPECT_GT(within / nw, between / nb + 0.2);
}

TEST(RunChain, ThinningKeepsEveryThirdSweep) {
  const DynMultiNet net = random_net(3, 1, 2, 121);
  FitConfig cfg{.R = 1, .H = 0, .iterations = 50, .burn_in = 20, .thin = 3,
                .seed = 3};
  cfg.variant = Variant::Collapsed;
  const PosteriorChain chain = run_chain(net, cfg);
  EXPECT_EQ(chain.retained(), 10);
  EXPECT_EQ(chain.sweeps.front(), 23);
  EXPECT_EQ(chain.sweeps.back(), 50);
}

TEST(RunChain, RecordsMissingCellsInFileOrder) {
  DynMultiNet net = random_net(4, 2, 2, 131);
  net.obs[net.flat(0, 1, 2, 1)] = kMissing;
  net.obs[net.flat(1, 0, 3, 0)] = kMissing;
  FitConfig cfg{.R = 1, .H = 1, .iterations = 20, .burn_in = 10, .seed = 4};
  const PosteriorChain chain = run_chain(net, cfg);
  ASSERT_EQ(chain.missing.size(), 2u);
  EXPECT_EQ(chain.missing[0].k, 0);
  EXPECT_EQ(chain.missing[0].i, 1);
  EXPECT_EQ(chain.missing[0].v, 2);
  EXPECT_EQ(chain.missing[0].u, 1);
  EXPECT_EQ(chain.missing[1].k, 1);
}

TEST(RunChain, SeparateVariantEqualsIndependentSingleLayerFits) {
  const DynMultiNet net = random_net(4, 2, 3, 141, 0.1);
  FitConfig cfg{.R = 2, .H = 0, .iterations = 30, .burn_in = 10, .seed = 77};
  cfg.variant = Variant::Separate;
  const PosteriorChain whole = run_chain(net, cfg);
  const Dims d = net.dims();
  const long per_layer = static_cast<long>(d.n) * d.pairs();

  for (int k = 0; k < 2; ++k) {
    DynMultiNet slice = DynMultiNet::zeros(d.V, 1, d.n, net.grid);
    for (int i = 0; i < d.n; ++i)
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u)
          slice.set(0, i, v, u, net.at(k, i, v, u));
    FitConfig sub = cfg;
    sub.seed = substream_seed(cfg.seed, 0x534550ull, static_cast<std::uint64_t>(k));
    const PosteriorChain part = run_chain(slice, sub);
    for (int s = 0; s < whole.retained(); ++s)
      for (long c = 0; c < per_layer; ++c)
        ASSERT_EQ(whole.pi[static_cast<size_t>(s) * d.cells() + k * per_layer + c],
                  part.pi[static_cast<size_t>(s) * per_layer + c])
            << "layer " << k;
    // the two layers must not share randomness
    if (k == 1)
      EXPECT_NE(whole.pi[0], whole.pi[per_layer]);
  }
}

TEST(MonitorCells, StridedDistinctAndComplete) {
  const Dims d{30, 2, 17};
  const auto cells = monitor_cells(d, 50);
  ASSERT_EQ(cells.size(), 50u);
  for (size_t j = 1; j < cells.size(); ++j) ASSERT_GT(cells[j], cells[j - 1]);
  EXPECT_GE(cells.front(), 0);
  EXPECT_LT(cells.back(), d.cells());

  const Dims tiny{3, 1, 2};
  const auto all = monitor_cells(tiny, 50);
  ASSERT_EQ(all.size(), static_cast<size_t>(tiny.cells()));
  EXPECT_EQ(all.front(), 0);
  EXPECT_EQ(all.back(), tiny.cells() - 1);
}

TEST(EdgeProbs, ClampedAndOrdered) {
  DynMultiNet net = DynMultiNet::zeros(2, 1, 1, Vector::Ones(1));
  LatentState st;
  st.mu = Vector::Zero(1);
  st.mu[0] = 1000.0;
  st.omega = {0.0};
  st.cur = {0};
  auto probs = edge_probs(st, net.dims());
  ASSERT_EQ(probs.size(), 1u);
  EXPECT_LT(probs[0], 1.0);
  st.mu[0] = -1000.0;
  probs = edge_probs(st, net.dims());
  EXPECT_GT(probs[0], 0.0);
}
