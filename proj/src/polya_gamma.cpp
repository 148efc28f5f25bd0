#include "ebshrink/polya_gamma.hpp"

#include <cmath>

#include "ebshrink/stats.hpp"

namespace ebshrink::intervals {

namespace {

constexpr double kTrunc = 0.64;  // body/tail switch point

// n-th coefficient of the alternating series for the tilted Jacobi density.
double series_coef(int n, double x) {
  const double h = n + 0.5;
  if (x <= kTrunc)
    return M_PI * h * std::pow(2.0 / (M_PI * x), 1.5) *
           std::exp(-2.0 * h * h / x);
  return M_PI * h * std::exp(-0.5 * h * h * M_PI * M_PI * x);
}

// cdf at t of the inverse Gaussian with mean 1/z and shape 1; z = 0 reduces
// to the one-sided stable (Levy) law.
double ig_cdf(double t, double z) {
  const double rt = std::sqrt(t);
  if (z <= 0.0) return 2.0 * norm_cdf(-1.0 / rt);
  const double a = norm_cdf((t * z - 1.0) / rt);
  const double b = std::exp(2.0 * z) * norm_cdf(-(t * z + 1.0) / rt);
  return a + b;
}

// inverse Gaussian with mean 1/z and shape 1, truncated to (0, kTrunc].
double truncated_ig(double z, RngStream& rng) {
  if (z < 1.0 / kTrunc) {
    // mean beyond the truncation point: rejection from the truncated
    // Levy proposal, thinned by exp(-z^2 x / 2)
    for (;;) {
      double e1, e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / kTrunc);
      const double x = kTrunc / ((1.0 + kTrunc * e1) * (1.0 + kTrunc * e1));
      if (rng.uniform() <= std::exp(-0.5 * z * z * x)) return x;
    }
  }
  for (;;) {
    const double x = rng.inverse_gaussian(1.0 / z, 1.0);
    if (x <= kTrunc) return x;
  }
}

}  // namespace

double polya_gamma1(double z, RngStream& rng) {
  z = std::abs(z) * 0.5;
  if (z > 64.0) z = 64.0;  // the law is numerically degenerate long before
  const double k = M_PI * M_PI / 8.0 + 0.5 * z * z;
  const double tail_mass = M_PI / (2.0 * k) * std::exp(-k * kTrunc);
  const double body_mass = 2.0 * std::exp(-z) * ig_cdf(kTrunc, z);
  const double p_tail = tail_mass / (tail_mass + body_mass);

  for (;;) {
    const double x = rng.uniform() < p_tail
                         ? kTrunc + rng.exponential() / k
                         : truncated_ig(z, rng);
    double s = series_coef(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coef(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coef(n, x);
        if (y > s) break;  // resample
      }
    }
  }
}

}  // namespace ebshrink::intervals
