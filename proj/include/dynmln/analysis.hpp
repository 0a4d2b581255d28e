#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dynmln/gibbs.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Equal-tailed quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0,1]");
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * p;
  const auto lo = static_cast<size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + (h - lo) * (xs[lo + 1] - xs[lo]);
}

// Posterior mean edge probability per cell.
inline std::vector<double> edge_prob_mean(const PosteriorChain& chain) {
  const long cells = chain.dims.cells();
  const int S = chain.retained();
  if (S == 0) throw std::invalid_argument("edge_prob_mean: empty chain");
  std::vector<double> mean(cells, 0.0);
  for (int s = 0; s < S; ++s) {
    const double* row = chain.pi.data() + static_cast<size_t>(s) * cells;
    for (long c = 0; c < cells; ++c) mean[c] += row[c];
  }
  for (long c = 0; c < cells; ++c) mean[c] /= S;
  return mean;
}

// Posterior-mean scores for specific cells (used for imputation/forecast
// reporting).
inline std::vector<double> predict_edges(const PosteriorChain& chain,
                                         const std::vector<CellRef>& cells) {
  const auto mean = edge_prob_mean(chain);
  std::vector<double> out;
  out.reserve(cells.size());
  for (const auto& c : cells) {
    if (c.k < 0 || c.k >= chain.dims.K || c.i < 0 || c.i >= chain.dims.n ||
        c.v <= c.u || c.u < 0 || c.v >= chain.dims.V)
      throw std::invalid_argument("predict_edges: cell out of range");
    out.push_back(mean[chain.dims.flat(c.k, c.i, pair_index(c.v, c.u))]);
  }
  return out;
}

// Posterior mean and equal-tailed band per (layer, time).
struct TrajectorySummary {
  Matrix mean, lo, hi;  // each K x n
};

namespace analysis_detail {

// Reduce each retained draw to one number per (layer, time) and summarize.
template <typename Reduce>
TrajectorySummary summarize_per_time(const PosteriorChain& chain, double level,
                                     Reduce reduce) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("credible level must lie in (0,1)");
  const Dims d = chain.dims;
  const int S = chain.retained();
  if (S == 0) throw std::invalid_argument("empty chain");
  TrajectorySummary ts;
  ts.mean.resize(d.K, d.n);
  ts.lo.resize(d.K, d.n);
  ts.hi.resize(d.K, d.n);
  std::vector<double> vals(S);
  for (int k = 0; k < d.K; ++k)
    for (int i = 0; i < d.n; ++i) {
      for (int s = 0; s < S; ++s) {
        const double* row = chain.pi.data() + static_cast<size_t>(s) * d.cells();
        vals[s] = reduce(row + d.flat(k, i, 0), k, i);
      }
      double m = 0.0;
      for (double v : vals) m += v;
      ts.mean(k, i) = m / S;
      ts.lo(k, i) = quantile(vals, 0.5 * (1.0 - level));
      ts.hi(k, i) = quantile(vals, 1.0 - 0.5 * (1.0 - level));
    }
  return ts;
}

}  // namespace analysis_detail

// Network density: average edge probability over all pairs.
inline TrajectorySummary density_trajectory(const PosteriorChain& chain,
                                            double level = 0.95) {
  const int P = chain.dims.pairs();
  return analysis_detail::summarize_per_time(
      chain, level, [P](const double* slice, int, int) {
        double s = 0.0;
        for (int p = 0; p < P; ++p) s += slice[p];
        return s / P;
      });
}

// Expected degree of one actor: sum of edge probabilities to all others.
inline TrajectorySummary degree_trajectory(const PosteriorChain& chain, int actor,
                                           double level = 0.95) {
  const int V = chain.dims.V;
  if (actor < 0 || actor >= V)
    throw std::invalid_argument("degree_trajectory: actor out of range");
  return analysis_detail::summarize_per_time(
      chain, level, [V, actor](const double* slice, int, int) {
        double s = 0.0;
        for (int u = 0; u < V; ++u) {
          if (u == actor) continue;
          s += slice[pair_index(std::max(actor, u), std::min(actor, u))];
        }
        return s;
      });
}

// Average posterior-mean edge probability between (or within) labeled
// groups, per (layer, time).  Keys are label pairs with first <= second;
// label pairs spanning no actor pair (e.g. within a singleton group) are
// absent rather than zero.
inline std::map<std::pair<std::string, std::string>, Matrix>
group_contact_trajectory(const PosteriorChain& chain,
                         const std::vector<std::string>& labels) {
  const Dims d = chain.dims;
  if (static_cast<int>(labels.size()) != d.V)
    throw std::invalid_argument("group labels must cover every actor");
  std::map<std::pair<std::string, std::string>, std::vector<int>> members;
  for (int v = 1; v < d.V; ++v)
    for (int u = 0; u < v; ++u) {
      auto key = std::minmax(labels[v], labels[u]);
      members[{key.first, key.second}].push_back(pair_index(v, u));
    }
  const auto mean = edge_prob_mean(chain);
  std::map<std::pair<std::string, std::string>, Matrix> out;
  for (const auto& [key, ps] : members) {
    Matrix m(d.K, d.n);
    for (int k = 0; k < d.K; ++k)
      for (int i = 0; i < d.n; ++i) {
        double s = 0.0;
        for (int p : ps) s += mean[d.flat(k, i, p)];
        m(k, i) = s / static_cast<double>(ps.size());
      }
    out[key] = m;
  }
  return out;
}

// Mean-squared-error split of recovered edge probabilities around a known
// generating truth, averaged over cells: total = sq_bias + variance exactly.
struct Concentration {
  double sq_bias = 0.0;
  double variance = 0.0;
  double total = 0.0;
};

inline Concentration concentration_metrics(const PosteriorChain& chain,
                                           const std::vector<double>& pi0) {
  const long cells = chain.dims.cells();
  const int S = chain.retained();
  if (static_cast<long>(pi0.size()) != cells)
    throw std::invalid_argument("concentration_metrics: truth size mismatch");
  if (S == 0) throw std::invalid_argument("concentration_metrics: empty chain");
  const auto mean = edge_prob_mean(chain);
  Concentration out;
  for (long c = 0; c < cells; ++c) {
    const double b = mean[c] - pi0[c];
    out.sq_bias += b * b;
    double var = 0.0, tot = 0.0;
    for (int s = 0; s < S; ++s) {
      const double x = chain.at(s, c);
      var += (x - mean[c]) * (x - mean[c]);
      tot += (x - pi0[c]) * (x - pi0[c]);
    }
    out.variance += var / S;
    out.total += tot / S;
  }
  out.sq_bias /= cells;
  out.variance /= cells;
  out.total /= cells;
  return out;
}

// Area under the ROC curve by the rank-sum (Mann-Whitney) identity; tied
// scores count one half.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores and labels differ in length");
  const size_t N = scores.size();
  size_t n1 = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw std::invalid_argument("auc: labels must be 0/1");
    n1 += static_cast<size_t>(l);
  }
  const size_t n0 = N - n1;
  if (n1 == 0 || n0 == 0)
    throw std::invalid_argument("auc: need both positive and negative labels");
  std::vector<size_t> ord(N);
  for (size_t i = 0; i < N; ++i) ord[i] = i;
  std::sort(ord.begin(), ord.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < N) {
    size_t j = i;
    while (j + 1 < N && scores[ord[j + 1]] == scores[ord[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (size_t t = i; t <= j; ++t)
      if (labels[ord[t]] == 1) rank_sum_pos += avg_rank;
    i = j + 1;
  }
  const double U = rank_sum_pos - 0.5 * static_cast<double>(n1) * (static_cast<double>(n1) + 1.0);
  return U / (static_cast<double>(n1) * static_cast<double>(n0));
}

// Effective sample size by the initial-positive-sequence rule on paired
// autocorrelations; flagged when the series is (numerically) constant or the
// estimate was clipped into (0, N].
struct EssResult {
  double value = 0.0;
  bool flagged = false;
};

inline EssResult ess(std::span<const double> series) {
  const size_t N = series.size();
  if (N < 10) throw std::invalid_argument("ess: need at least 10 points");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(N);
  std::vector<double> cent(N);
  for (size_t i = 0; i < N; ++i) cent[i] = series[i] - mean;
  auto gamma_at = [&](size_t lag) {
    double s = 0.0;
    for (size_t i = 0; i + lag < N; ++i) s += cent[i] * cent[i + lag];
    return s / static_cast<double>(N);
  };
  const double g0 = gamma_at(0);
  if (!(g0 > 0.0)) return {static_cast<double>(N), true};
  double tau = 0.0;
  bool truncated = false;
  for (size_t m = 0;; ++m) {
    const size_t l1 = 2 * m, l2 = 2 * m + 1;
    if (l1 >= N - 1) {
      truncated = true;
      break;
    }
    const double pair_sum =
        gamma_at(l1) / g0 + (l2 < N - 1 ? gamma_at(l2) / g0 : 0.0);
    if (pair_sum <= 0.0) break;
    tau += 2.0 * pair_sum;
  }
  tau -= 1.0;
  (void)truncated;
  double e = static_cast<double>(N) / tau;
  bool flagged = false;
  if (!(tau >= 1.0)) {  // covers tau < 1 and non-finite
    e = static_cast<double>(N);
    flagged = true;
  }
  return {e, flagged};
}

// Closed-form prior covariances of the cell log-odds process, used as the
// reference values for Monte Carlo verification of the sampler's prior.
enum class PriorCovCase {
  SameCell,       // same layer, same pair, lag apart
  CrossLayer,     // different layers, same pair
  DistinctPair    // pairs sharing no actor
};

inline double prior_logodds_cov(const Vector& tau_shared, const Vector& tau_layer,
                                double kappa_mu, double kappa_xbar, double kappa_x,
                                double lag, PriorCovCase which) {
  const double d2 = lag * lag;
  double c = std::exp(-kappa_mu * d2);
  if (which == PriorCovCase::DistinctPair) return c;
  double shared = 0.0;
  for (Eigen::Index r = 0; r < tau_shared.size(); ++r)
    shared += 1.0 / (tau_shared[r] * tau_shared[r]);
  c += shared * std::exp(-2.0 * kappa_xbar * d2);
  if (which == PriorCovCase::CrossLayer) return c;
  double layer = 0.0;
  for (Eigen::Index h = 0; h < tau_layer.size(); ++h)
    layer += 1.0 / (tau_layer[h] * tau_layer[h]);
  return c + layer * std::exp(-2.0 * kappa_x * d2);
}

}  // namespace dynmln
