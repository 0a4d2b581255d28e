#pragma once

#include <stdexcept>
#include <vector>

#include "dynmln/rng.hpp"
#include "dynmln/types.hpp"

namespace dynmln {

// Multiplicative gamma process over latent dimensions: the precision of
// dimension r is the running product tau_r = delta_1 * ... * delta_r, so later
// dimensions are progressively shrunk toward zero.
inline Vector tau_from_delta(const Vector& delta) {
  Vector tau(delta.size());
  double acc = 1.0;
  for (Eigen::Index r = 0; r < delta.size(); ++r) {
    if (!(delta[r] > 0.0))
      throw std::invalid_argument("tau_from_delta: multipliers must be positive");
    acc *= delta[r];
    tau[r] = acc;
  }
  return tau;
}

// Gamma-increment state for the shared dimensions and for each layer.
struct ShrinkState {
  double a1 = 2.0;
  double a2 = 2.5;
  Vector delta_shared;               // size R
  std::vector<Vector> delta_layer;   // K entries, size H each

  Vector tau_shared() const { return tau_from_delta(delta_shared); }
  Vector tau_layer(int k) const { return tau_from_delta(delta_layer[k]); }
};

namespace shrink_detail {

// q_m = sum_v coords_v(:,m)' Sigma^{-1} coords_v(:,m), one per dimension.
inline Vector quadratic_forms(const std::vector<Matrix>& coords,
                              const Matrix& sigma_inv) {
  if (coords.empty()) return Vector();
  const Eigen::Index R = coords.front().cols();
  Vector q = Vector::Zero(R);
  for (const auto& c : coords) {
    for (Eigen::Index m = 0; m < R; ++m)
      q[m] += c.col(m).dot(sigma_inv * c.col(m));
  }
  return q;
}

// One full sweep over the increments of a single gamma-process vector.  Each
// delta_r is redrawn from its conditional given the current values of all
// the others, in order r = 1..R.
inline void update_deltas(Vector& delta, const Vector& q, long V, long n,
                          double a1, double a2, RngStream& rng) {
  const Eigen::Index R = delta.size();
  for (Eigen::Index r = 0; r < R; ++r) {
    const double shape =
        (r == 0 ? a1 : a2) + 0.5 * static_cast<double>(V) * static_cast<double>(n) *
                                 static_cast<double>(R - r);
    double rate = 1.0;
    for (Eigen::Index m = r; m < R; ++m) {
      // product of increments up to m, skipping position r
      double theta = 1.0;
      for (Eigen::Index t = 0; t <= m; ++t)
        if (t != r) theta *= delta[t];
      rate += 0.5 * theta * q[m];
    }
    delta[r] = rng.gamma(shape, rate);
  }
}

}  // namespace shrink_detail

// Exposed for verification: the per-dimension quadratic forms feeding the
// increment conditionals.
inline Vector shrink_quadratic_forms(const std::vector<Matrix>& coords,
                                     const Matrix& sigma_inv) {
  return shrink_detail::quadratic_forms(coords, sigma_inv);
}

// Redraw the shared-dimension increments given all actors' shared
// trajectories (one n x R matrix per actor).
inline void update_shared_deltas(ShrinkState& st, const std::vector<Matrix>& xbar,
                                 const Matrix& sigma_xbar_inv, RngStream& rng) {
  if (st.delta_shared.size() == 0) return;
  if (xbar.empty()) throw std::invalid_argument("update_shared_deltas: no actors");
  const long V = static_cast<long>(xbar.size());
  const long n = xbar.front().rows();
  const Vector q = shrink_detail::quadratic_forms(xbar, sigma_xbar_inv);
  shrink_detail::update_deltas(st.delta_shared, q, V, n, st.a1, st.a2, rng);
}

// Same sweep for the layer-specific increments of layer k.
inline void update_layer_deltas(ShrinkState& st, int k,
                                const std::vector<Matrix>& x_k,
                                const Matrix& sigma_x_inv, RngStream& rng) {
  if (st.delta_layer[k].size() == 0) return;
  if (x_k.empty()) throw std::invalid_argument("update_layer_deltas: no actors");
  const long V = static_cast<long>(x_k.size());
  const long n = x_k.front().rows();
  const Vector q = shrink_detail::quadratic_forms(x_k, sigma_x_inv);
  shrink_detail::update_deltas(st.delta_layer[k], q, V, n, st.a1, st.a2, rng);
}

}  // namespace dynmln
