#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ebshrink/dataset.hpp"
#include "ebshrink/rng.hpp"

namespace ebshrink::normal_means {

// Observed scores z_j = theta_j + noise with known per-observation noise
// variances.
struct ConvolutionData {
  Eigen::VectorXd z;
  Eigen::VectorXd sigma2;

  void validate() const;
  Eigen::Index size() const { return z.size(); }
};

struct GaussianPrior {
  double mu = 0.0;
  double tau2 = 0.0;
};

struct MixturePrior {
  Eigen::VectorXd weight;
  Eigen::VectorXd mu;
  Eigen::VectorXd tau2;

  Eigen::Index components() const { return weight.size(); }
  void validate() const;
};

// Two-group z-scores: standardized mean difference per column, scaled by the
// pooled standard error so the noise variance is 1 under the null.
ConvolutionData z_scores(const Dataset& d);

// Moment fit of the conjugate Gaussian prior:
//   tau2 = sample variance of z minus the mean noise variance (clipped at 0),
//   mu   = precision-weighted mean with weights 1/(tau2 + sigma2_i).
// One pass, in that order.
GaussianPrior fit_gaussian_prior(const ConvolutionData& c);

// Conjugate posterior means mu + tau2/(tau2 + sigma2_i) (z_i - mu).
Eigen::VectorXd posterior_mean(const ConvolutionData& c,
                               const GaussianPrior& prior);

struct EmOptions {
  int restarts = 10;
  int max_iterations = 500;
  double tolerance = 1e-8;  // absolute increase of the log marginal likelihood
};

struct EmFit {
  MixturePrior prior;
  double log_marginal = 0.0;
  int iterations = 0;
};

// Marginal log-likelihood of the mixture prior: sum_j log sum_k
// w_k N(z_j; mu_k, tau2_k + sigma2_j).
double mixture_log_marginal(const ConvolutionData& c, const MixturePrior& prior);

// EM over latent component labels and latent means. The log marginal
// likelihood is non-decreasing across iterations; the best of `restarts`
// randomized initializations is returned.
EmFit fit_mixture_prior_em(const ConvolutionData& c, int K, RngStream& rng,
                           const EmOptions& options = {});

// Responsibility-weighted conjugate posterior means.
Eigen::VectorXd posterior_mean(const ConvolutionData& c,
                               const MixturePrior& prior);

struct DldaResult {
  Eigen::VectorXd scores;
  std::vector<int> labels;  // 1 when score > 0, else 0
};

DldaResult dlda_classify(const Eigen::MatrixXd& W,
                         const Eigen::VectorXd& theta_hat);

// The 18-player batting slice: first-45-at-bat averages and rest-of-season
// truth, both to three decimals.
struct BattingData {
  Eigen::VectorXd b;
  Eigen::VectorXd truth;
};

const BattingData& batting_data();
ConvolutionData batting_convolution();

struct ExtendedConvolution {
  ConvolutionData data;     // base observations followed by m simulated ones
  Eigen::VectorXd truths;   // base truths followed by the m resampled ones
};

// Appends m observations built from a Gaussian-kernel density resample of
// `truth` (bandwidth: 0.9 min(sd, IQR/1.34) n^{-1/5}). Each new true value
// gets binomial-style noise with variance theta (1-theta)/45; the stored
// noise variance is estimated from the observation as b(1-b)/45, as for the
// original players. Resampled values outside (0,1) are an error.
ExtendedConvolution extend_batting(const ConvolutionData& base,
                                   const Eigen::VectorXd& truth, int m,
                                   RngStream& rng);

}  // namespace ebshrink::normal_means
