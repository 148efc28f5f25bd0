#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ebshrink/dataset.hpp"
#include "ebshrink/rng.hpp"

namespace ebshrink::spikeslab {

// Gaussian linear model with a point-mass spike at zero, Gaussian slab
// N(0, slab_variance), known noise variance, and a p x s co-data matrix that
// drives the prior inclusion probabilities through a logit link.
struct SpikeSlabModel {
  double slab_variance = 1.0;
  double noise_variance = 1.0;
  Eigen::MatrixXd codata;

  void validate(Eigen::Index p) const;
};

// Co-data columns centered and scaled to unit variance; constant columns
// (intercepts) pass through. Applied once so the link and the regression see
// the same design.
Eigen::MatrixXd standardize_codata(const Eigen::MatrixXd& C);

// nu_j = expit(C_j alpha), clamped to [1e-12, 1 - 1e-12]; clamp events are
// counted into *clamp_events when given.
Eigen::VectorXd nu_from_alpha(const Eigen::MatrixXd& C,
                              const Eigen::VectorXd& alpha,
                              long* clamp_events = nullptr);

struct SsState {
  Eigen::VectorXd beta;
  std::vector<std::uint8_t> xi;
  Eigen::VectorXd residual;      // y - X beta, maintained incrementally
  Eigen::VectorXd column_norms;  // ||x_j||^2, fixed

  static SsState initial(const Dataset& d);
};

// One systematic sweep: per variable, draw xi_j from its conditional with
// beta_j integrated out (conjugate Gaussian slab), then beta_j | xi_j.
void ss_gibbs_sweep(SsState& state, const SpikeSlabModel& model,
                    const Eigen::VectorXd& nu, const Dataset& d,
                    RngStream& rng);

struct SsChain {
  Eigen::VectorXd inclusion_counts;  // B_j over kept sweeps
  Eigen::VectorXd beta_mean;
  std::vector<std::uint8_t> xi_draws;  // kept x p, row-major
  int kept = 0;

  Eigen::VectorXd posterior_inclusion() const;
  double xi(int sweep, int j) const {
    return xi_draws[static_cast<std::size_t>(sweep) *
                        static_cast<std::size_t>(beta_mean.size()) +
                    static_cast<std::size_t>(j)];
  }
};

SsChain run_ss_chain(SsState& state, const SpikeSlabModel& model,
                     const Eigen::VectorXd& nu, const Dataset& d, int burn_in,
                     int keep, RngStream& rng);

// Logit-link binomial regression of counts B (out of M) on C by IRLS.
// Separation falls back to a ridge-stabilized solve with a warning.
Eigen::VectorXd fit_alpha_binomial(const Eigen::VectorXd& B, double M,
                                   const Eigen::MatrixXd& C);

struct McemSchedule {
  int max_iterations = 12;
  int burn_in = 200;
  int initial_samples = 200;  // M_k = min(initial * 2^k, cap)
  int sample_cap = 5000;
  double tolerance = 0.02;    // sup-norm change, 3 consecutive hits stop
  int final_keep = 2000;      // chain length at the final alpha
};

struct McemTrace {
  std::vector<Eigen::VectorXd> alpha;             // alpha^(0..K)
  std::vector<int> sample_counts;                 // M_k
  std::vector<Eigen::VectorXd> inclusion_counts;  // B^k
  long clamp_events = 0;
  bool converged = false;
};

struct McemResult {
  Eigen::VectorXd alpha;
  McemTrace trace;
  SsChain final_chain;
  Eigen::MatrixXd codata_std;  // the standardized design alpha refers to
};

McemResult run_mcem(const Dataset& d, const SpikeSlabModel& model,
                    const Eigen::VectorXd& alpha0, const McemSchedule& schedule,
                    RngStream& rng);

// The alpha-dependent part of the conditional log-likelihood of one sampled
// state: sum_j log Bern(xi_j; nu_{j,alpha}).
double conditional_loglik(const std::vector<std::uint8_t>& xi,
                          const Eigen::MatrixXd& C,
                          const Eigen::VectorXd& alpha);

// All three factors (likelihood, slab density of the active coefficients,
// Bernoulli prior); only the last term varies with alpha.
double joint_conditional_loglik(const SsState& state,
                                const SpikeSlabModel& model,
                                const Eigen::MatrixXd& C,
                                const Eigen::VectorXd& alpha, const Dataset& d);

}  // namespace ebshrink::spikeslab
