#include "ebshrink/stats.hpp"

#include <algorithm>
#include <cmath>

#include "ebshrink/errors.hpp"

namespace ebshrink {

double mean(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw DomainError("mean: empty vector");
  return x.mean();
}

double sample_variance(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) throw DomainError("sample_variance: need at least 2 values");
  const double m = x.mean();
  return (x.array() - m).square().sum() / static_cast<double>(n - 1);
}

double population_variance(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw DomainError("population_variance: empty vector");
  const double m = x.mean();
  return (x.array() - m).square().mean();
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw DomainError("quantile: empty vector");
  if (q < 0.0 || q > 1.0) throw DomainError("quantile: q outside [0,1]");
  std::sort(x.begin(), x.end());
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double log_sum_exp(const Eigen::VectorXd& x) {
  if (x.size() == 0) throw DomainError("log_sum_exp: empty vector");
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.array() - m).exp().sum());
}

double log_normal_pdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
}

double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double log_norm_pdf(double x) {
  return -0.5 * std::log(2.0 * M_PI) - 0.5 * x * x;
}

double binomial_log_kernel(double b, double m, double prob) {
  const double eps = 1e-300;
  return b * std::log(std::max(prob, eps)) +
         (m - b) * std::log(std::max(1.0 - prob, eps));
}

}  // namespace ebshrink
