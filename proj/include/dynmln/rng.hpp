#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>

namespace dynmln {

// SplitMix64 finalizer; used to derive independent substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hash a (master, a, b, c, d) tuple into a substream seed.  The chaining makes
// the seed depend on argument order, so (sweep, step, layer, actor) tuples
// never collide in practice and every substream can be re-derived on its own.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t a = 0,
                                    std::uint64_t b = 0, std::uint64_t c = 0,
                                    std::uint64_t d = 0) {
  std::uint64_t s = mix64(master ^ 0x6A09E667F3BCC909ull);
  s = mix64(s ^ (a + 0xBB67AE8584CAA73Bull));
  s = mix64(s ^ (b + 0x3C6EF372FE94F82Bull));
  s = mix64(s ^ (c + 0xA54FF53A5F1D36F1ull));
  s = mix64(s ^ (d + 0x510E527FADE682D1ull));
  return s;
}

// Seeded random stream with hand-rolled variate transforms.  All samplers are
// written out explicitly (rather than via std::*_distribution) so that draw
// sequences are identical across standard library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // U(0,1), strictly inside the open interval.
  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * kInv53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // N(0,1) via Box-Muller; the sine mate is discarded so that each call
  // consumes a fixed number of engine words.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Exp(1)
  double exponential() { return -std::log(uniform()); }

  // Gamma(shape, rate) via Marsaglia-Tsang, with the usual power boost for
  // shape < 1.
  double gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw std::invalid_argument("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v / rate;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t raw() { return eng_(); }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 eng_;
};

inline RngStream substream(std::uint64_t master, std::uint64_t sweep,
                           std::uint64_t step, std::uint64_t layer = 0,
                           std::uint64_t actor = 0) {
  return RngStream(substream_seed(master, sweep, step, layer, actor));
}

}  // namespace dynmln
