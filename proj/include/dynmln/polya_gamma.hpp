#pragma once

#include <cmath>
#include <stdexcept>

#include "dynmln/rng.hpp"

namespace dynmln {

namespace pg_detail {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTrunc = 0.64;       // proposal split point
constexpr double kTruncInv = 1.0 / kTrunc;

// log Phi(x) for the standard normal, stable far into the left tail.
inline double log_norm_cdf(double x) {
  if (x > -37.0) {
    return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  }
  // Mills-ratio asymptotic: Phi(x) ~ phi(x)/(-x) (1 - 1/x^2 + 3/x^4)
  const double x2 = x * x;
  return -0.5 * x2 - 0.5 * std::log(2.0 * kPi) - std::log(-x) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

// Coefficient a_n(x) of the alternating series for the J*(1,z) density.
inline double a_coef(int n, double x) {
  const double k = (n + 0.5) * kPi;
  if (x > kTrunc) {
    return k * std::exp(-0.5 * k * k * x);
  }
  const double h = n + 0.5;
  return std::exp(-1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                  2.0 * h * h / x);
}

// Probability that the two-piece proposal falls in the truncated-exponential
// branch (x > kTrunc) rather than the inverse-Gaussian branch.
inline double mass_texpon(double z) {
  const double t = kTrunc;
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  const double b = std::sqrt(1.0 / t) * (t * z - 1.0);
  const double a = std::sqrt(1.0 / t) * (t * z + 1.0) * -1.0;
  const double x0 = std::log(fz) + fz * t;
  const double xb = x0 - z + log_norm_cdf(b);
  const double xa = x0 + z + log_norm_cdf(a);
  const double qdivp = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
  return 1.0 / (1.0 + qdivp);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
inline double rtigauss(double z, RngStream& rng) {
  z = std::fabs(z);
  const double t = kTrunc;
  double x = t + 1.0;
  if (kTruncInv > z) {
    // mean 1/z above the truncation point: rejection from truncated
    // chi-square proposal with an exponential squeeze
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / t);
      x = t / ((1.0 + t * e1) * (1.0 + t * e1));
      alpha = std::exp(-0.5 * z * z * x);
    }
  } else {
    // mean below the truncation point: sample IG directly, retry until inside
    const double mu = 1.0 / z;
    while (x > t) {
      double y = rng.normal();
      y = y * y;
      const double half_mu = 0.5 * mu;
      const double mu_y = mu * y;
      x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
      if (rng.uniform() > mu / (mu + x)) x = mu * mu / x;
    }
  }
  return x;
}

}  // namespace pg_detail

// Exact draw from the Polya-gamma distribution PG(1, c) by the alternating
// series accept/reject method.  PG(1,c) = J*(1, c/2) / 4 where J* is sampled
// from a two-piece proposal (truncated inverse-Gaussian / truncated
// exponential) with series-squeeze acceptance; no truncation approximation
// is involved.  The draw depends on c only through |c|.
inline double sample_pg1(double c, RngStream& rng) {
  if (!std::isfinite(c))
    throw std::invalid_argument("sample_pg1: shift must be finite");
  using namespace pg_detail;
  const double z = 0.5 * std::fabs(c);
  const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
  for (;;) {
    double x;
    if (rng.uniform() < mass_texpon(z)) {
      x = kTrunc + rng.exponential() / fz;
    } else {
      x = rtigauss(z, rng);
    }
    // squeeze on the partial sums of the alternating series
    double s = a_coef(0, x);
    const double y = rng.uniform() * s;
    int n = 0;
    for (;;) {
      ++n;
      if (n % 2 == 1) {
        s -= a_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += a_coef(n, x);
        if (y > s) break;
      }
    }
  }
}

// E[PG(1,c)] = tanh(c/2) / (2c), with the even series expansion used near the
// origin where the ratio loses precision.
inline double pg1_mean(double c) {
  if (!std::isfinite(c))
    throw std::invalid_argument("pg1_mean: shift must be finite");
  const double a = std::fabs(c);
  if (a < 1e-4) {
    const double c2 = c * c;
    return 0.25 - c2 / 48.0 + c2 * c2 / 480.0;
  }
  return std::tanh(0.5 * a) / (2.0 * a);
}

}  // namespace dynmln
