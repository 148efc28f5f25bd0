#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ebshrink {

double mean(const Eigen::VectorXd& x);

// Unbiased variance, divisor n-1. Requires n >= 2.
double sample_variance(const Eigen::VectorXd& x);

// Maximum-likelihood variance, divisor n.
double population_variance(const Eigen::VectorXd& x);

// Linear-interpolation quantile (R type 7). q in [0,1], x need not be sorted.
double quantile(std::vector<double> x, double q);

// log(sum_i exp(x_i)) with the usual max shift.
double log_sum_exp(const Eigen::VectorXd& x);

double log_normal_pdf(double x, double mean, double var);

// Standard normal cdf / log pdf.
double norm_cdf(double x);
double log_norm_pdf(double x);

inline double expit(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log Binomial(b; m, prob) without the binomial coefficient.
double binomial_log_kernel(double b, double m, double prob);

}  // namespace ebshrink
