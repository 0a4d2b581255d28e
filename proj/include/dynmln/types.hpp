#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dynmln {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error taxonomy; the CLI maps these onto exit codes (2/3/4).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unordered actor pair, stored lower-triangular: v > u, both 0-based.
struct ActorPair {
  int v = 0;
  int u = 0;
};

inline int pair_count(int V) { return V * (V - 1) / 2; }

// Lexicographic (v,u) order with v > u: (1,0),(2,0),(2,1),(3,0),...
inline int pair_index(int v, int u) { return v * (v - 1) / 2 + u; }

inline ActorPair pair_at(int idx) {
  // invert idx = v(v-1)/2 + u with 0 <= u < v
  int v = static_cast<int>((1.0 + std::sqrt(1.0 + 8.0 * idx)) / 2.0);
  while (v * (v - 1) / 2 > idx) --v;
  while ((v + 1) * v / 2 <= idx) ++v;
  return {v, idx - v * (v - 1) / 2};
}

// Tensor extents of one dynamic multilayer network.
struct Dims {
  int V = 0;  // actors
  int K = 0;  // layers
  int n = 0;  // time points

  int pairs() const { return pair_count(V); }
  long cells() const { return static_cast<long>(K) * n * pairs(); }

  // Flat cell index; matches the persisted record order:
  // (k, i, v, u) lexicographic with v > u.
  long flat(int k, int i, int p) const {
    return (static_cast<long>(k) * n + i) * pairs() + p;
  }

  bool operator==(const Dims&) const = default;
};

// Reference to one (layer, time, pair) cell, 0-based.
struct CellRef {
  int k = 0;
  int i = 0;
  int v = 0;
  int u = 0;
};

inline std::string cell_str(const CellRef& c) {
  // 1-based, matching the file formats
  return "layer " + std::to_string(c.k + 1) + ", time " + std::to_string(c.i + 1) +
         ", pair (" + std::to_string(c.v + 1) + "," + std::to_string(c.u + 1) + ")";
}

}  // namespace dynmln
