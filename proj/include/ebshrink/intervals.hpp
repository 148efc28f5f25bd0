#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ebshrink/dataset.hpp"
#include "ebshrink/groups.hpp"
#include "ebshrink/rng.hpp"

namespace ebshrink::intervals {

enum class PriorVariant { EB, FB, Hybrid };

std::string variant_name(PriorVariant v);

// Group-ridge precision configuration for the Bayesian logistic model.
//   EB:     tau_g^{-2} = lambda * multiplier_g^2, all fixed.
//   FB:     tau_g^{-2} ~ Gamma(shape, rate) per group, conjugate updates.
//   Hybrid: tau_g^{-2} = tau^{-2} * multiplier_g^2 with one global
//           tau^{-2} ~ Gamma(shape, rate) and fixed multipliers.
struct PrecisionSpec {
  PriorVariant variant = PriorVariant::EB;
  double lambda = 1.0;
  Eigen::VectorXd multipliers;  // one per group (EB, Hybrid)
  double gamma_shape = 1e-3;
  double gamma_rate = 1e-3;
  bool include_intercept = true;  // unpenalized intercept column

  void validate(int n_groups) const;
};

struct ChainConfig {
  int burn_in = 1000;
  int keep = 4000;
  int thin = 1;
};

struct LogisticChain {
  Eigen::MatrixXd beta;        // keep x (p + intercept)
  Eigen::MatrixXd precisions;  // keep x G (constant rows under EB)
  bool has_intercept = false;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int burn_in = 0;
  int thin = 1;
};

// Polya-Gamma data-augmented Gibbs sampler for Y_i ~ Bern(expit(X_i beta))
// with beta_j ~ N(0, tau_g^2) per group.
LogisticChain pg_logistic_gibbs(const Dataset& d, const PrecisionSpec& spec,
                                const GroupStructure& groups,
                                const ChainConfig& config, RngStream& rng);

// Conjugate precision draw given beta: Gamma(shape + p_g / 2,
// rate + ||beta_g||^2 / 2) per group.
Eigen::VectorXd draw_group_precisions(const Eigen::VectorXd& beta_coeffs,
                                      const GroupStructure& groups,
                                      double shape, double rate,
                                      RngStream& rng);

enum class IntervalKind { EqualTail, Hpd };

std::string kind_name(IntervalKind k);

struct PredictiveInterval {
  double estimate = 0.0;  // posterior mean of q
  double lower = 0.0;
  double upper = 0.0;
  IntervalKind kind = IntervalKind::EqualTail;
  double level = 0.95;
};

// Order-statistic interval containing ceil(level * M) samples: the
// symmetric window (equal tail) or the shortest window (HPD). The HPD
// width never exceeds the equal-tail width.
std::pair<double, double> equal_tail_interval(std::vector<double> samples,
                                              double level);
std::pair<double, double> hpd_interval(std::vector<double> samples,
                                       double level);

std::vector<PredictiveInterval> intervals_from_chain(
    const LogisticChain& chain, const Eigen::MatrixXd& X_test, double level,
    IntervalKind kind);

struct CoverageConfig {
  int n_groups = 2;
  int per_group = 30;
  int n_train = 100;
  int n_test = 100;
  double rho = 0.1;
  int block = 5;
  int replicates = 50;
  std::vector<PriorVariant> variants = {PriorVariant::EB, PriorVariant::FB,
                                        PriorVariant::Hybrid};
  ChainConfig chain;
  double level = 0.95;
  double extreme_fraction = 0.20;  // tau0 calibration target
  double gamma_shape = 1e-3;
  double gamma_rate = 1e-3;
  double lambda0 = 1.0;  // initial penalty for the moment system
  int cv_folds = 10;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct CoverageRow {
  int replicate = 0;
  PriorVariant variant = PriorVariant::EB;
  IntervalKind kind = IntervalKind::EqualTail;
  double q_true = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool covered = false;
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  double tau0 = 0.0;
};

// Full pipeline: calibrate tau0 so that about extreme_fraction of the true
// q_i fall outside (0.05, 0.95), simulate train/test, fit the EB penalties
// (CV global lambda, moment-based group multipliers), run the requested
// variants, and record per-test-point coverage of both interval kinds. The
// FB variant is skipped when n_groups > 2.
CoverageResult coverage_experiment(const CoverageConfig& config);

// Standard-deviation scale tau0 such that the ladder tau_g = tau0 2^{-(g-1)}
// puts approximately `target` mass on extreme probabilities.
double calibrate_tau0(int n_groups, int per_group, double rho, int block,
                      double target, std::uint64_t seed);

struct CurvePoint {
  double q = 0.0;
  double coverage = 0.0;
};

// Sliding mean of the coverage indicator over `window` consecutive rows
// (rows must be sorted by q). Fewer rows than the window collapses to the
// global mean with a warning.
std::vector<CurvePoint> moving_average_coverage(
    const std::vector<std::pair<double, bool>>& rows, int window);

}  // namespace ebshrink::intervals
