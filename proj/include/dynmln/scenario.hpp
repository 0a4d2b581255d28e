#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "dynmln/net_data.hpp"
#include "dynmln/rng.hpp"
#include "dynmln/text.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Contact-probability levels used by the default household scenario.  The
// qualitative structure (blocks, meals, work, sickness) is fixed; the levels
// are overridable and recorded in the scenario manifest.
struct ScenarioLevels {
  double within = 0.8;      // same socio-demographic block
  double between = 0.1;     // different blocks
  double moderate = 0.4;    // caregiver contact (women to others at meals etc.)
  double elevated = 0.7;    // sick individual with caregiver
  double suppressed = 0.05; // sick individual kept apart
};

// Piecewise-linear edge-probability process: anchor matrices per layer at a
// subset of grid indices, interpolated in between.
struct ScenarioSpec {
  int V = 0, K = 0, n = 0;
  Vector grid;
  std::vector<int> anchor_times;                  // 0-based grid indices, ascending
  std::vector<std::vector<Matrix>> anchor_probs;  // [layer][anchor], V x V symmetric
  bool kink_rule = true;                          // t4/t6 take the t5 matrix
  ScenarioLevels levels;

  void validate() const {
    if (V < 2 || K < 1 || n < 1) throw config_error("scenario: degenerate dimensions");
    if (grid.size() != n) throw config_error("scenario: grid length mismatch");
    if (anchor_times.empty() || anchor_times.front() != 0 || anchor_times.back() != n - 1)
      throw config_error("scenario: anchors must cover the first and last grid point");
    for (size_t a = 0; a + 1 < anchor_times.size(); ++a)
      if (anchor_times[a] >= anchor_times[a + 1])
        throw config_error("scenario: anchor times must be strictly increasing");
    if (static_cast<int>(anchor_probs.size()) != K)
      throw config_error("scenario: anchor matrices must cover every layer");
    for (const auto& per_layer : anchor_probs) {
      if (per_layer.size() != anchor_times.size())
        throw config_error("scenario: anchor matrices must cover every anchor time");
      for (const auto& m : per_layer) {
        if (m.rows() != V || m.cols() != V)
          throw config_error("scenario: anchor matrix has wrong shape");
        for (int v = 1; v < V; ++v)
          for (int u = 0; u < v; ++u) {
            if (m(v, u) != m(u, v)) throw config_error("scenario: anchor matrix not symmetric");
            if (!(m(v, u) > 0.0 && m(v, u) < 1.0))
              throw config_error("scenario: anchor probabilities must lie in (0,1)");
          }
      }
    }
  }
};

// Household contact scenario: V=30 actors in three blocks over n=17 times and
// K=2 days.  Block 1 (actors 1-10) young, block 2 (11-20) adult women,
// block 3 (21-30) adult men.  Anchors at t1/t9/t17 are meals, t5 is the
// morning (school / house / two workplaces), t13 the afternoon.  Day 2
// repeats day 1 except five sick young at t5 and five sick men at t13 stay
// home with elevated caregiver contact and suppressed contact to everyone
// else.
inline ScenarioSpec build_default_scenario(const ScenarioLevels& levels = {},
                                           bool kink_rule = true) {
  ScenarioSpec spec;
  spec.V = 30;
  spec.K = 2;
  spec.n = 17;
  spec.grid.resize(17);
  for (int i = 0; i < 17; ++i) spec.grid[i] = i + 1;
  spec.anchor_times = {0, 4, 8, 12, 16};
  spec.kink_rule = kink_rule;
  spec.levels = levels;

  const auto block = [](int v) { return v / 10; };  // 0 young, 1 women, 2 men
  const auto work_group = [](int v) { return v / 5; };  // men: 4 vs 5
  const auto sick_young = [](int v) { return v < 5; };
  const auto sick_man = [](int v) { return v >= 20 && v < 25; };

  auto fill = [&](auto prob_fn) {
    Matrix m = Matrix::Zero(30, 30);
    for (int v = 1; v < 30; ++v)
      for (int u = 0; u < v; ++u) {
        const double p = prob_fn(v, u);
        m(v, u) = p;
        m(u, v) = p;
      }
    return m;
  };

  // meals: block homophily plus moderate caregiver contact from adult women
  const Matrix meal = fill([&](int v, int u) {
    if (block(v) == block(u)) return levels.within;
    if (block(v) == 1 || block(u) == 1) return levels.moderate;
    return levels.between;
  });

  // morning: school / house / two separate workplaces
  const Matrix morning1 = fill([&](int v, int u) {
    if (block(v) != block(u)) return levels.between;
    if (block(v) == 2 && work_group(v) != work_group(u)) return levels.between;
    return levels.within;
  });

  // afternoon: like the morning, with young and women sharing the house
  const Matrix afternoon1 = fill([&](int v, int u) {
    if (block(v) != block(u))
      return (block(v) + block(u) == 1) ? levels.moderate : levels.between;
    if (block(v) == 2 && work_group(v) != work_group(u)) return levels.between;
    return levels.within;
  });

  // day-2 morning: five sick young stay home with the adult women
  const Matrix morning2 = fill([&](int v, int u) {
    if (sick_young(v) || sick_young(u)) {
      const int other = sick_young(v) ? u : v;
      if (sick_young(v) && sick_young(u)) return levels.suppressed;
      if (block(other) == 1) return levels.elevated;
      return levels.suppressed;
    }
    if (block(v) != block(u)) return levels.between;
    if (block(v) == 2 && work_group(v) != work_group(u)) return levels.between;
    return levels.within;
  });

  // day-2 afternoon: five sick adult men stay home with the adult women
  const Matrix afternoon2 = fill([&](int v, int u) {
    if (sick_man(v) || sick_man(u)) {
      const int other = sick_man(v) ? u : v;
      if (sick_man(v) && sick_man(u)) return levels.suppressed;
      if (block(other) == 1) return levels.elevated;
      return levels.suppressed;
    }
    if (block(v) != block(u))
      return (block(v) + block(u) == 1) ? levels.moderate : levels.between;
    if (block(v) == 2 && work_group(v) != work_group(u)) return levels.between;
    return levels.within;
  });

  spec.anchor_probs = {{meal, morning1, meal, afternoon1, meal},
                       {meal, morning2, meal, afternoon2, meal}};
  spec.validate();
  return spec;
}

// Full per-cell probability tensor: anchors verbatim, convex combination by
// index distance in between, and (optionally) the rapid-variation override
// that copies the t5 anchor onto t4 and t6.
inline std::vector<double> interpolate_probs(const ScenarioSpec& spec) {
  spec.validate();
  const Dims d{spec.V, spec.K, spec.n};
  std::vector<double> out(d.cells());
  for (int k = 0; k < spec.K; ++k)
    for (int i = 0; i < spec.n; ++i) {
      Matrix m;
      size_t a = 0;
      while (a + 1 < spec.anchor_times.size() && spec.anchor_times[a + 1] <= i) ++a;
      if (spec.anchor_times[a] == i) {
        m = spec.anchor_probs[k][a];
      } else {
        const int ia = spec.anchor_times[a], ib = spec.anchor_times[a + 1];
        const double w = static_cast<double>(ib - i) / static_cast<double>(ib - ia);
        m = w * spec.anchor_probs[k][a] + (1.0 - w) * spec.anchor_probs[k][a + 1];
      }
      if (spec.kink_rule && (i == 3 || i == 5)) {
        for (size_t b = 0; b < spec.anchor_times.size(); ++b)
          if (spec.anchor_times[b] == 4) m = spec.anchor_probs[k][b];
      }
      long idx = d.flat(k, i, 0);
      for (int v = 1; v < spec.V; ++v)
        for (int u = 0; u < v; ++u, ++idx) out[idx] = m(v, u);
    }
  return out;
}

// Independent Bernoulli replicates of a probability tensor; each replicate
// has its own derived substream, so any subset is reproducible on its own.
inline std::vector<DynMultiNet> sample_networks(const std::vector<double>& pi0,
                                                const Dims& d, const Vector& grid,
                                                std::uint64_t seed, int replicates) {
  if (static_cast<long>(pi0.size()) != d.cells())
    throw std::invalid_argument("sample_networks: tensor size mismatch");
  for (double p : pi0)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("sample_networks: probabilities must lie in (0,1)");
  if (replicates < 1) throw std::invalid_argument("sample_networks: need >= 1 replicate");
  std::vector<DynMultiNet> out;
  out.reserve(replicates);
  for (int rep = 0; rep < replicates; ++rep) {
    RngStream rng = substream(seed, 0x53494Dull, rep);
    DynMultiNet net = DynMultiNet::zeros(d.V, d.K, d.n, grid);
    for (long c = 0; c < d.cells(); ++c)
      net.obs[c] = rng.bernoulli(pi0[c]) ? 1 : 0;
    out.push_back(std::move(net));
  }
  return out;
}

// Latent coordinates recovered from a target log-odds tensor.
struct FactorCoords {
  std::vector<Matrix> shared;              // per time, V x R
  std::vector<std::vector<Matrix>> layer;  // [layer][time], V x H
};

namespace scenario_detail {

// Complete a hollow symmetric similarity matrix to PSD by diagonal dominance
// and return rank-revealing coordinates C with C C^T matching S off-diagonal.
inline Matrix psd_coords(const Matrix& s, int cap, const std::string& what, int i) {
  const int V = static_cast<int>(s.rows());
  double mx = 0.0;
  for (int v = 1; v < V; ++v)
    for (int u = 0; u < v; ++u) mx = std::max(mx, std::fabs(s(v, u)));
  if (mx == 0.0) return Matrix::Zero(V, cap);  // exact: zero coordinates

  Matrix m = s;
  for (int v = 0; v < V; ++v) {
    double dv = 1e-6;
    for (int u = 0; u < V; ++u)
      if (u != v) dv += std::fabs(s(v, u));
    m(v, v) = dv;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw numeric_error("eigendecomposition failed for " + what + " similarity at time " +
                        std::to_string(i + 1));
  int rank = 0;
  for (int j = 0; j < V; ++j)
    if (es.eigenvalues()[j] > 1e-10) ++rank;
  if (rank > cap)
    throw config_error("factorizing the " + what + " similarity at time " +
                       std::to_string(i + 1) + " requires " + std::to_string(rank) +
                       " dimensions but only " + std::to_string(cap) + " are available");
  Matrix coords = Matrix::Zero(V, cap);
  int col = 0;
  for (int j = V - 1; j >= 0; --j) {  // descending eigenvalue order
    const double lam = es.eigenvalues()[j];
    if (lam > 1e-10) coords.col(col++) = es.eigenvectors().col(j) * std::sqrt(lam);
  }
  return coords;
}

}  // namespace scenario_detail

// Constructive flexibility witness: split each target log-odds matrix minus
// the baseline into a shared part (cross-layer mean) and per-layer residuals,
// complete both to PSD and factorize, yielding coordinates that reproduce the
// targets off-diagonally.
inline FactorCoords factorize_logodds(const std::vector<std::vector<Matrix>>& z_target,
                                   const Vector& mu, int R, int H) {
  if (z_target.empty() || z_target.front().empty())
    throw std::invalid_argument("factorize_logodds: empty target");
  const int K = static_cast<int>(z_target.size());
  const int n = static_cast<int>(z_target.front().size());
  const int V = static_cast<int>(z_target.front().front().rows());
  if (mu.size() != n) throw std::invalid_argument("factorize_logodds: baseline length mismatch");
  if (R < 0 || H < 0) throw std::invalid_argument("factorize_logodds: negative capacity");
  for (const auto& per_layer : z_target) {
    if (static_cast<int>(per_layer.size()) != n)
      throw std::invalid_argument("factorize_logodds: ragged target");
    for (const auto& zm : per_layer) {
      if (zm.rows() != V || zm.cols() != V)
        throw std::invalid_argument("factorize_logodds: target matrix shape mismatch");
      if (!zm.isApprox(zm.transpose()))
        throw std::invalid_argument("factorize_logodds: target matrices must be symmetric");
    }
  }

  FactorCoords out;
  out.shared.resize(n);
  out.layer.assign(K, std::vector<Matrix>(n));
  for (int i = 0; i < n; ++i) {
    Matrix sbar = Matrix::Zero(V, V);
    for (int k = 0; k < K; ++k) sbar += z_target[k][i];
    sbar /= static_cast<double>(K);
    sbar.array() -= mu[i];
    sbar.diagonal().setZero();
    out.shared[i] = scenario_detail::psd_coords(sbar, R, "shared", i);
    for (int k = 0; k < K; ++k) {
      Matrix resid = z_target[k][i];
      resid.array() -= mu[i];
      resid -= sbar;
      resid.diagonal().setZero();
      out.layer[k][i] = scenario_detail::psd_coords(resid, H, "layer", i);
    }
  }
  return out;
}

// Provenance sidecar for generated data: every knob that shaped the draw.
inline void write_scenario_manifest(const std::string& path, const ScenarioSpec& spec,
                                    std::uint64_t seed, int replicates,
                                    const std::string& holdout_text) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  out << "scenario=household-default\n";
  out << "V=" << spec.V << "\nK=" << spec.K << "\nn=" << spec.n << "\n";
  out << "grid=";
  for (int i = 0; i < spec.n; ++i) out << (i ? "," : "") << fmt_double(spec.grid[i]);
  out << "\n";
  out << "p_within=" << fmt_double(spec.levels.within) << "\n";
  out << "p_between=" << fmt_double(spec.levels.between) << "\n";
  out << "p_moderate=" << fmt_double(spec.levels.moderate) << "\n";
  out << "p_moderate_note=assumed level; the source scenario states no number\n";
  out << "p_elevated=" << fmt_double(spec.levels.elevated) << "\n";
  out << "p_suppressed=" << fmt_double(spec.levels.suppressed) << "\n";
  out << "kink_rule=" << (spec.kink_rule ? "true" : "false") << "\n";
  out << "seed=" << seed << "\n";
  out << "replicates=" << replicates << "\n";
  if (!holdout_text.empty()) out << "holdout=" << holdout_text << "\n";
  if (!out) throw data_error("write failed for '" + path + "'");
}

}  // namespace dynmln
