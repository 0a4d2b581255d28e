#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include "dynmln/gp_kernel.hpp"
#include "dynmln/net_data.hpp"
#include "dynmln/polya_gamma.hpp"
#include "dynmln/rng.hpp"
#include "dynmln/shrinkage.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Model variants: the full model, the single-network collapse (no layer
// coordinates), and fully independent per-layer fits.
enum class Variant { Joint, Collapsed, Separate };

inline Variant parse_variant(const std::string& s) {
  if (s == "joint") return Variant::Joint;
  if (s == "collapsed") return Variant::Collapsed;
  if (s == "separate") return Variant::Separate;
  throw config_error("unknown variant '" + s + "' (expected joint, collapsed or separate)");
}

inline std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Joint: return "joint";
    case Variant::Collapsed: return "collapsed";
    default: return "separate";
  }
}

struct FitConfig {
  Variant variant = Variant::Joint;
  int R = 5;                    // shared latent dimensions
  int H = 5;                    // layer-specific latent dimensions
  int iterations = 5000;
  int burn_in = 1000;
  int thin = 1;
  std::uint64_t seed = 0;
  double kappa_mu = 0.05;
  double kappa_xbar = 0.05;
  double kappa_x = 0.05;
  double a1 = 2.0;
  double a2 = 2.5;
  bool parallel_layers = true;

  int retained() const { return (iterations - burn_in) / thin; }

  void validate(const Dims& d) const {
    if (d.V < 2 || d.K < 1 || d.n < 1) throw config_error("degenerate network dimensions");
    if (R < 0 || H < 0 || R + H < 1)
      throw config_error("need at least one latent dimension (R + H >= 1)");
    if (variant != Variant::Joint && H != 0)
      throw config_error("variant '" + variant_name(variant) + "' requires H = 0");
    if (iterations < 1) throw config_error("iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
      throw config_error("burn-in must lie in [0, iterations)");
    if (thin < 1) throw config_error("thinning must be >= 1");
    if ((iterations - burn_in) % thin != 0)
      throw config_error("retained span (iterations - burn_in) must be a multiple of thin");
    for (double kp : {kappa_mu, kappa_xbar, kappa_x})
      if (!(kp > 0.0) || !std::isfinite(kp))
        throw config_error("length-scale parameters must be positive and finite");
    if (!(a1 > 0.0) || !(a2 > 0.0))
      throw config_error("shrinkage shape parameters must be positive");
  }
};

// Numerically safe logistic function.
inline double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Clamp a probability strictly inside (0,1) for recording.
inline double clamp_prob(double p) {
  static const double hi = std::nextafter(1.0, 0.0);
  if (p < 1e-300) return 1e-300;
  if (p > hi) return hi;
  return p;
}

// Full latent state of one sampler.
struct LatentState {
  Vector mu;                            // n
  std::vector<Matrix> xbar;             // V matrices, n x R
  std::vector<std::vector<Matrix>> x;   // K x V matrices, n x H
  ShrinkState shrink;
  std::vector<double> omega;            // per cell; only set for present cells
  std::vector<int8_t> cur;              // observed or imputed edges; -1 = absent

  int R() const { return xbar.empty() ? 0 : static_cast<int>(xbar[0].cols()); }
  int H() const {
    return (x.empty() || x[0].empty()) ? 0 : static_cast<int>(x[0][0].cols());
  }
};

inline double shared_dot(const LatentState& st, int i, int v, int u) {
  return st.xbar.empty() ? 0.0 : st.xbar[v].row(i).dot(st.xbar[u].row(i));
}

inline double layer_dot(const LatentState& st, int k, int i, int v, int u) {
  return st.x.empty() ? 0.0 : st.x[k][v].row(i).dot(st.x[k][u].row(i));
}

// Log-odds of an edge between v and u in layer k at time index i; symmetric
// in (v,u).
inline double logodds(const LatentState& st, int k, int i, int v, int u) {
  return st.mu[i] + shared_dot(st, i, v, u) + layer_dot(st, k, i, v, u);
}

// Edge probabilities for every cell, clamped strictly inside (0,1); this is
// the quantity recorded per retained sweep.
inline std::vector<double> edge_probs(const LatentState& st, const Dims& d) {
  std::vector<double> out(d.cells());
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx)
          out[idx] = clamp_prob(sigmoid(logodds(st, k, i, v, u)));
    }
  return out;
}

// Draw an initial state from the prior: gamma increments first, then the
// baseline and coordinate trajectories given the implied precisions; missing
// cells are imputed by a fair coin until the first imputation step.
inline LatentState init_state(const DynMultiNet& net, const FitConfig& cfg,
                              const CovarianceSet& covs, RngStream& rng,
                              bool impute_missing = true) {
  const Dims d = net.dims();
  LatentState st;
  st.shrink.a1 = cfg.a1;
  st.shrink.a2 = cfg.a2;
  st.shrink.delta_shared.resize(cfg.R);
  for (int r = 0; r < cfg.R; ++r)
    st.shrink.delta_shared[r] = rng.gamma(r == 0 ? cfg.a1 : cfg.a2, 1.0);
  st.shrink.delta_layer.resize(d.K);
  for (int k = 0; k < d.K; ++k) {
    st.shrink.delta_layer[k].resize(cfg.H);
    for (int h = 0; h < cfg.H; ++h)
      st.shrink.delta_layer[k][h] = rng.gamma(h == 0 ? cfg.a1 : cfg.a2, 1.0);
  }

  st.mu = mvn_sample(Vector::Zero(d.n), covs.chol_mu, rng);

  const Vector tau_s = st.shrink.tau_shared();
  st.xbar.assign(d.V, Matrix(d.n, cfg.R));
  for (int v = 0; v < d.V; ++v)
    for (int r = 0; r < cfg.R; ++r)
      st.xbar[v].col(r) =
          mvn_sample(Vector::Zero(d.n), covs.chol_xbar, rng) / std::sqrt(tau_s[r]);

  st.x.assign(d.K, std::vector<Matrix>(d.V, Matrix(d.n, cfg.H)));
  for (int k = 0; k < d.K; ++k) {
    const Vector tau_k = st.shrink.tau_layer(k);
    for (int v = 0; v < d.V; ++v)
      for (int h = 0; h < cfg.H; ++h)
        st.x[k][v].col(h) =
            mvn_sample(Vector::Zero(d.n), covs.chol_x, rng) / std::sqrt(tau_k[h]);
  }

  st.omega.assign(d.cells(), 0.0);
  st.cur = net.obs;
  if (impute_missing) {
    for (auto& c : st.cur)
      if (c == kMissing) c = rng.bernoulli(0.5) ? 1 : 0;
  }
  return st;
}

// Draw a fresh edge realization for every cell given the current state
// (posterior-predictive generation; overwrites net.obs and st.cur).
inline void draw_edges(LatentState& st, DynMultiNet& net, RngStream& rng) {
  const Dims d = net.dims();
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx) {
          const int8_t y =
              rng.bernoulli(sigmoid(logodds(st, k, i, v, u))) ? 1 : 0;
          net.obs[idx] = y;
          st.cur[idx] = y;
        }
    }
}

// Precision/linear-term pair of a Gaussian full conditional:
// distribution is N(precision^{-1} eta, precision^{-1}).
struct GaussianConditional {
  Matrix precision;
  Vector eta;
};

namespace gibbs_detail {

// Bilinear layer contribution for every cell (fixed during the shared update).
inline std::vector<double> layer_dots(const LatentState& st, const Dims& d) {
  std::vector<double> out(d.cells(), 0.0);
  if (st.H() == 0) return out;
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx)
          out[idx] = layer_dot(st, k, i, v, u);
    }
  return out;
}

// Shared contribution per (time, pair) (fixed during the layer updates).
inline std::vector<double> shared_dots(const LatentState& st, const Dims& d) {
  std::vector<double> out(static_cast<size_t>(d.n) * d.pairs(), 0.0);
  if (st.R() == 0) return out;
  for (int i = 0; i < d.n; ++i) {
    size_t idx = static_cast<size_t>(i) * d.pairs();
    for (int v = 1; v < d.V; ++v)
      for (int u = 0; u < v; ++u, ++idx)
        out[idx] = shared_dot(st, i, v, u);
  }
  return out;
}

// Sample from N(prec^{-1} eta, prec^{-1}) via Cholesky of the precision.
inline Vector sample_by_precision(const Matrix& prec, const Vector& eta,
                                  RngStream& rng, const char* what) {
  Eigen::LLT<Matrix> llt(prec);
  if (llt.info() != Eigen::Success) {
    Matrix work = prec;
    bool ok = false;
    for (double j : {1e-10, 1e-8, 1e-6}) {
      work = prec;
      work.diagonal().array() += j;
      llt.compute(work);
      if (llt.info() == Eigen::Success) {
        ok = true;
        break;
      }
    }
    if (!ok)
      throw numeric_error(std::string("conditional precision for ") + what +
                          " is not positive definite");
  }
  Vector mean = llt.solve(eta);
  Vector z(eta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + llt.matrixU().solve(z);
}

// Shared-coordinate conditional for actor v given the cached layer offsets.
// The stacked vector is column-major over the n x R trajectory matrix
// (dimension-major blocks of length n).
inline void accumulate_shared(const LatentState& st, const DynMultiNet& net,
                              const CovarianceSet& covs, int v,
                              const std::vector<double>& ldots, Matrix& prec,
                              Vector& eta) {
  const Dims d = net.dims();
  const int R = st.R();
  const int nn = d.n;
  prec.setZero(nn * R, nn * R);
  eta.setZero(nn * R);
  const Vector tau = st.shrink.tau_shared();
  for (int r = 0; r < R; ++r)
    prec.block(r * nn, r * nn, nn, nn) = tau[r] * covs.inv_xbar;

  Matrix A(R, R);
  Vector b(R), xu(R);
  for (int i = 0; i < nn; ++i) {
    A.setZero();
    b.setZero();
    for (int u = 0; u < d.V; ++u) {
      if (u == v) continue;
      const int p = pair_index(std::max(v, u), std::min(v, u));
      double wsum = 0.0, rsum = 0.0;
      for (int k = 0; k < d.K; ++k) {
        const long idx = d.flat(k, i, p);
        if (st.cur[idx] == kMissing) continue;
        const double w = st.omega[idx];
        wsum += w;
        rsum += (st.cur[idx] - 0.5) - w * (st.mu[i] + ldots[idx]);
      }
      if (wsum == 0.0 && rsum == 0.0) continue;
      xu = st.xbar[u].row(i);
      A.selfadjointView<Eigen::Lower>().rankUpdate(xu, wsum);
      b += rsum * xu;
    }
    for (int r = 0; r < R; ++r) {
      eta[r * nn + i] += b[r];
      for (int rp = 0; rp <= r; ++rp) {
        const double a = A(r, rp);
        prec(r * nn + i, rp * nn + i) += a;
        if (rp != r) prec(rp * nn + i, r * nn + i) += a;
      }
    }
  }
}

// Layer-coordinate conditional for actor v in layer k given the cached shared
// offsets (indexed per (time, pair)).
inline void accumulate_layer(const LatentState& st, const DynMultiNet& net,
                             const CovarianceSet& covs, int k, int v,
                             const std::vector<double>& sdots, Matrix& prec,
                             Vector& eta) {
  const Dims d = net.dims();
  const int H = st.H();
  const int nn = d.n;
  prec.setZero(nn * H, nn * H);
  eta.setZero(nn * H);
  const Vector tau = st.shrink.tau_layer(k);
  for (int h = 0; h < H; ++h)
    prec.block(h * nn, h * nn, nn, nn) = tau[h] * covs.inv_x;

  Matrix A(H, H);
  Vector b(H), xu(H);
  for (int i = 0; i < nn; ++i) {
    A.setZero();
    b.setZero();
    for (int u = 0; u < d.V; ++u) {
      if (u == v) continue;
      const int p = pair_index(std::max(v, u), std::min(v, u));
      const long idx = d.flat(k, i, p);
      if (st.cur[idx] == kMissing) continue;
      const double w = st.omega[idx];
      const double resid =
          (st.cur[idx] - 0.5) - w * (st.mu[i] + sdots[static_cast<size_t>(i) * d.pairs() + p]);
      xu = st.x[k][u].row(i);
      A.selfadjointView<Eigen::Lower>().rankUpdate(xu, w);
      b += resid * xu;
    }
    for (int h = 0; h < H; ++h) {
      eta[h * nn + i] += b[h];
      for (int hp = 0; hp <= h; ++hp) {
        const double a = A(h, hp);
        prec(h * nn + i, hp * nn + i) += a;
        if (hp != h) prec(hp * nn + i, h * nn + i) += a;
      }
    }
  }
}

inline void unstack_into(Matrix& traj, const Vector& stacked) {
  const Eigen::Index nn = traj.rows();
  for (Eigen::Index r = 0; r < traj.cols(); ++r)
    traj.col(r) = stacked.segment(r * nn, nn);
}

}  // namespace gibbs_detail

// Baseline full conditional.
inline GaussianConditional mu_conditional(const LatentState& st,
                                          const DynMultiNet& net,
                                          const CovarianceSet& covs) {
  const Dims d = net.dims();
  GaussianConditional gc;
  gc.precision = covs.inv_mu;
  gc.eta = Vector::Zero(d.n);
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      double wsum = 0.0, esum = 0.0;
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx) {
          if (st.cur[idx] == kMissing) continue;
          const double w = st.omega[idx];
          wsum += w;
          esum += (st.cur[idx] - 0.5) -
                  w * (shared_dot(st, i, v, u) + layer_dot(st, k, i, v, u));
        }
      gc.precision(i, i) += wsum;
      gc.eta[i] += esum;
    }
  return gc;
}

// Shared-coordinate full conditional for actor v (stacked dimension-major).
inline GaussianConditional shared_conditional(const LatentState& st,
                                              const DynMultiNet& net,
                                              const CovarianceSet& covs, int v) {
  GaussianConditional gc;
  const auto ldots = gibbs_detail::layer_dots(st, net.dims());
  gibbs_detail::accumulate_shared(st, net, covs, v, ldots, gc.precision, gc.eta);
  return gc;
}

// Layer-coordinate full conditional for actor v in layer k.
inline GaussianConditional layer_conditional(const LatentState& st,
                                             const DynMultiNet& net,
                                             const CovarianceSet& covs, int k,
                                             int v) {
  GaussianConditional gc;
  const auto sdots = gibbs_detail::shared_dots(st, net.dims());
  gibbs_detail::accumulate_layer(st, net, covs, k, v, sdots, gc.precision, gc.eta);
  return gc;
}

// --- sweep steps ------------------------------------------------------------

inline void step_augment(LatentState& st, const DynMultiNet& net, RngStream& rng) {
  const Dims d = net.dims();
  for (int i = 0; i < d.n; ++i) {
    int p = 0;
    for (int v = 1; v < d.V; ++v)
      for (int u = 0; u < v; ++u, ++p) {
        const double sd = shared_dot(st, i, v, u);
        for (int k = 0; k < d.K; ++k) {
          const long idx = d.flat(k, i, p);
          if (st.cur[idx] == kMissing) continue;
          st.omega[idx] = sample_pg1(st.mu[i] + sd + layer_dot(st, k, i, v, u), rng);
        }
      }
  }
}

inline void step_impute(LatentState& st, const DynMultiNet& net, RngStream& rng) {
  const Dims d = net.dims();
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx)
          if (net.obs[idx] == kMissing)
            st.cur[idx] = rng.bernoulli(sigmoid(logodds(st, k, i, v, u))) ? 1 : 0;
    }
}

inline void step_mu(LatentState& st, const DynMultiNet& net,
                    const CovarianceSet& covs, RngStream& rng) {
  const GaussianConditional gc = mu_conditional(st, net, covs);
  st.mu = gibbs_detail::sample_by_precision(gc.precision, gc.eta, rng, "baseline");
}

inline void step_shared(LatentState& st, const DynMultiNet& net,
                        const CovarianceSet& covs, RngStream& rng) {
  if (st.R() == 0) return;
  const Dims d = net.dims();
  const auto ldots = gibbs_detail::layer_dots(st, d);
  Matrix prec;
  Vector eta;
  for (int v = 0; v < d.V; ++v) {
    gibbs_detail::accumulate_shared(st, net, covs, v, ldots, prec, eta);
    const Vector s = gibbs_detail::sample_by_precision(prec, eta, rng, "shared coordinates");
    gibbs_detail::unstack_into(st.xbar[v], s);
  }
}

inline void step_layer_one(LatentState& st, const DynMultiNet& net,
                           const CovarianceSet& covs, int k,
                           const std::vector<double>& sdots, RngStream& rng) {
  const Dims d = net.dims();
  Matrix prec;
  Vector eta;
  for (int v = 0; v < d.V; ++v) {
    gibbs_detail::accumulate_layer(st, net, covs, k, v, sdots, prec, eta);
    const Vector s = gibbs_detail::sample_by_precision(prec, eta, rng, "layer coordinates");
    gibbs_detail::unstack_into(st.x[k][v], s);
  }
}

// Layer coordinates are conditionally independent across layers, so each
// layer runs on its own substream; results are identical whether layers are
// processed in parallel or sequentially.
inline void step_layer(LatentState& st, const DynMultiNet& net,
                       const CovarianceSet& covs, std::uint64_t seed, int sweep,
                       bool parallel) {
  if (st.H() == 0) return;
  const Dims d = net.dims();
  const auto sdots = gibbs_detail::shared_dots(st, d);
  if (parallel && d.K > 1) {
    std::vector<std::future<void>> jobs;
    jobs.reserve(d.K);
    for (int k = 0; k < d.K; ++k)
      jobs.push_back(std::async(std::launch::async, [&, k] {
        RngStream rng = substream(seed, sweep, 4, k);
        step_layer_one(st, net, covs, k, sdots, rng);
      }));
    for (auto& j : jobs) j.get();
  } else {
    for (int k = 0; k < d.K; ++k) {
      RngStream rng = substream(seed, sweep, 4, k);
      step_layer_one(st, net, covs, k, sdots, rng);
    }
  }
}

// One full sweep.  Step substreams are derived from (seed, sweep, step
// [, layer]) so every step is reproducible in isolation.
inline void gibbs_sweep(LatentState& st, const DynMultiNet& net,
                        const CovarianceSet& covs, const FitConfig& cfg,
                        int sweep) {
  const Dims d = net.dims();
  {
    RngStream rng = substream(cfg.seed, sweep, 1);
    step_augment(st, net, rng);
  }
  {
    RngStream rng = substream(cfg.seed, sweep, 8);
    step_impute(st, net, rng);
  }
  {
    RngStream rng = substream(cfg.seed, sweep, 2);
    step_mu(st, net, covs, rng);
  }
  if (st.R() > 0) {
    RngStream rng = substream(cfg.seed, sweep, 3);
    step_shared(st, net, covs, rng);
  }
  step_layer(st, net, covs, cfg.seed, sweep, cfg.parallel_layers);
  if (st.R() > 0) {
    RngStream rng = substream(cfg.seed, sweep, 5);
    update_shared_deltas(st.shrink, st.xbar, covs.inv_xbar, rng);
  }
  if (st.H() > 0) {
    for (int k = 0; k < d.K; ++k) {
      RngStream rng = substream(cfg.seed, sweep, 6, k);
      update_layer_deltas(st.shrink, k, st.x[k], covs.inv_x, rng);
    }
  }
}

// Retained draws of the edge-probability tensor plus everything needed to
// persist and reuse the run.
struct PosteriorChain {
  Dims dims;
  Vector grid;
  FitConfig cfg;
  std::vector<int> sweeps;        // retained sweep numbers, 1-based
  std::vector<double> pi;         // retained x cells, sweep-major
  std::vector<CellRef> missing;   // cells imputed during the fit
  std::string rng_provenance;

  int retained() const { return static_cast<int>(sweeps.size()); }
  double at(int s, long cell) const {
    return pi[static_cast<size_t>(s) * dims.cells() + cell];
  }
};

using ProgressFn = std::function<void(int sweep, int total)>;

namespace gibbs_detail {

inline PosteriorChain single_chain(const DynMultiNet& net, const FitConfig& cfg,
                                   const ProgressFn& progress) {
  const Dims d = net.dims();
  const CovarianceSet covs =
      CovarianceSet::build(net.grid, cfg.kappa_mu, cfg.kappa_xbar, cfg.kappa_x);
  RngStream init_rng = substream(cfg.seed, 0, 0);
  LatentState st = init_state(net, cfg, covs, init_rng);

  PosteriorChain chain;
  chain.dims = d;
  chain.grid = net.grid;
  chain.cfg = cfg;
  chain.rng_provenance =
      "mt19937_64 substreams hashed from (seed, sweep, step, layer, actor); master seed " +
      std::to_string(cfg.seed);
  chain.pi.reserve(static_cast<size_t>(cfg.retained()) * d.cells());
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < d.V; ++v)
        for (int u = 0; u < v; ++u, ++idx)
          if (net.obs[idx] == kMissing) chain.missing.push_back({k, i, v, u});
    }

  for (int s = 1; s <= cfg.iterations; ++s) {
    try {
      gibbs_sweep(st, net, covs, cfg, s);
    } catch (const numeric_error& e) {
      throw numeric_error("sweep " + std::to_string(s) + ": " + e.what());
    }
    if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.thin == 0) {
      const auto probs = edge_probs(st, d);
      chain.pi.insert(chain.pi.end(), probs.begin(), probs.end());
      chain.sweeps.push_back(s);
    }
    if (progress) progress(s, cfg.iterations);
  }
  return chain;
}

inline DynMultiNet slice_layer(const DynMultiNet& net, int k) {
  DynMultiNet out = DynMultiNet::zeros(net.V, 1, net.n, net.grid);
  const long cells_per_layer = static_cast<long>(net.n) * net.dims().pairs();
  std::copy(net.obs.begin() + k * cells_per_layer,
            net.obs.begin() + (k + 1) * cells_per_layer, out.obs.begin());
  return out;
}

}  // namespace gibbs_detail

// Run the sampler.  The separate variant fits each layer independently (with
// layer-derived seeds) and reassembles the per-layer draws into one chain.
inline PosteriorChain run_chain(const DynMultiNet& net, const FitConfig& cfg,
                                const ProgressFn& progress = {}) {
  net.validate();
  const Dims d = net.dims();
  cfg.validate(d);

  if (cfg.variant == Variant::Separate && d.K > 1) {
    PosteriorChain chain;
    chain.dims = d;
    chain.grid = net.grid;
    chain.cfg = cfg;
    chain.rng_provenance =
        "per-layer mt19937_64 substreams; layer seeds hashed from master seed " +
        std::to_string(cfg.seed);
    const long cells_per_layer = static_cast<long>(d.n) * d.pairs();
    chain.pi.assign(static_cast<size_t>(cfg.retained()) * d.cells(), 0.0);
    for (int k = 0; k < d.K; ++k) {
      const DynMultiNet slice = gibbs_detail::slice_layer(net, k);
      FitConfig sub = cfg;
      sub.seed = substream_seed(cfg.seed, 0x534550ull, static_cast<std::uint64_t>(k));
      const PosteriorChain part = gibbs_detail::single_chain(
          slice, sub,
          progress ? ProgressFn([&](int s, int total) {
            progress(k * total + s, d.K * total);
          })
                   : ProgressFn());
      if (k == 0) chain.sweeps = part.sweeps;
      for (int s = 0; s < part.retained(); ++s)
        std::copy(part.pi.begin() + static_cast<size_t>(s) * cells_per_layer,
                  part.pi.begin() + static_cast<size_t>(s + 1) * cells_per_layer,
                  chain.pi.begin() + static_cast<size_t>(s) * d.cells() +
                      k * cells_per_layer);
      for (const auto& c : part.missing)
        chain.missing.push_back({k, c.i, c.v, c.u});
    }
    // restore the canonical (k,i,v,u) order across layers
    std::sort(chain.missing.begin(), chain.missing.end(),
              [&](const CellRef& a, const CellRef& b) {
                return d.flat(a.k, a.i, pair_index(a.v, a.u)) <
                       d.flat(b.k, b.i, pair_index(b.v, b.u));
              });
    return chain;
  }
  return gibbs_detail::single_chain(net, cfg, progress);
}

// Deterministic strided subset of cells whose probability series are kept as
// mixing monitors.
inline std::vector<long> monitor_cells(const Dims& d, int count = 50) {
  const long cells = d.cells();
  if (count >= cells) {
    std::vector<long> all(cells);
    for (long i = 0; i < cells; ++i) all[i] = i;
    return all;
  }
  std::vector<long> out(count);
  for (int j = 0; j < count; ++j)
    out[j] = static_cast<long>((static_cast<double>(j) + 0.5) * cells / count);
  return out;
}

}  // namespace dynmln
