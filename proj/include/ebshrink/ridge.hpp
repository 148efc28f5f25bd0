#pragma once

#include <Eigen/Dense>

#include "ebshrink/dataset.hpp"
#include "ebshrink/groups.hpp"
#include "ebshrink/rng.hpp"

namespace ebshrink::ridge {

// Penalized (or ordinary, lambda = 0) regression fit together with the
// per-coefficient sampling variances v_j = Var(beta_hat_j | beta), the
// diagonal of the sandwich (X'X + lambda I)^{-1} X'X (X'X + lambda I)^{-1}
// scaled by sigma2 (Gaussian) or of its weighted analogue (Binomial).
struct RidgeFit {
  double lambda = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd v;
  Family family = Family::Gaussian;
};

RidgeFit ridge_fit(const Dataset& d, double lambda, double sigma2);

// Exact two-parameter marginal likelihood fit for the Gaussian model
// Y ~ N(0, tau2 X X' + sigma2 I), maximized over (log tau2, log sigma2)
// inside the box [1e-8, 1e8]^2 from three starts. at_bound flags a
// degenerate optimum on the box edge.
struct MmlFit {
  double tau2 = 0.0;
  double sigma2 = 0.0;
  double lambda = 0.0;  // sigma2 / tau2
  double log_ml = 0.0;
  bool at_bound = false;
};

MmlFit direct_mml_ridge(const Dataset& d);

double ridge_log_ml(const Dataset& d, double tau2, double sigma2);

// Laplace approximation to the log marginal likelihood of logistic
// regression with prior beta_j ~ N(0, tau2): the value at the penalized
// posterior mode, plus (p/2) log(2 pi) minus half the log-determinant of the
// exact Hessian of the negative unnormalized log-posterior there.
double laplace_log_ml_logistic(const Dataset& d, double tau2);

// Prior-variance estimator from an ordinary least-squares fit:
// sum_j (beta_j^2 - v_j) / p. May be negative by construction.
double tau2_unbiased_ols(const RidgeFit& fit);
double tau2_unbiased_ols_clipped(const RidgeFit& fit);

// Bias-corrected estimator from an initial ridge fit at lambda0:
//   sum_j (beta_j^2 / v_j - 1) / sum_{j,k} v_j^{-1} c_jk^2,
// where c_jk are the coefficients of the penalization bias
// E(beta_hat_j) = sum_k c_jk beta_k.
double tau2_bias_corrected(const Dataset& d, double lambda0, double sigma2);
double tau2_bias_corrected_clipped(const Dataset& d, double lambda0,
                                   double sigma2);

// Closed-form expected MSE of the OLS-based prior-variance estimator,
// averaged over Y, beta ~ N(0, tau2 I) and rows X_i ~ N(0, Sigma) with
// Psi = Sigma^{-1}. Requires p < n - 3.
struct EmseInput {
  int n = 0;
  int p = 0;
  double tau2 = 0.0;
  Eigen::MatrixXd psi;

  void validate() const;
};

double emse_closed_form(const EmseInput& input);

// Specialization for independent columns (psi = I).
double emse_independent(int n, int p, double tau2);

// Per-group prior variances from the G x G moment system built on an initial
// ridge fit at lambda0. Negative solutions are clipped at 1e-8 with a
// warning. For the Binomial family the moments use the converged-IRLS
// weighted plug-in.
Eigen::VectorXd group_moment_eb(const Dataset& d, const GroupStructure& groups,
                                double lambda0, double sigma2);

// K-fold cross-validation over a penalty grid. Gaussian: mean squared
// prediction error; Binomial: squared error on the probability scale. Fold
// assignment is a deterministic function of the stream.
struct CvResult {
  double lambda = 0.0;
  double tau2 = 0.0;  // sigma2 / lambda
  Eigen::VectorXd grid;
  Eigen::VectorXd cv_error;
};

CvResult cv_ridge(const Dataset& d, int folds,
                  const Eigen::VectorXd& lambda_grid, RngStream& rng,
                  double sigma2 = 1.0);

// 25 log-spaced penalties spanning [1e-3, 1e5].
Eigen::VectorXd default_lambda_grid();

// Per-group penalties lambda_g = lambda_global * multiplier_g.
Eigen::VectorXd multiplier_reparam(double lambda_global,
                                   const Eigen::VectorXd& multipliers);

// Multipliers inverse-proportional to estimated prior variances, normalized
// to geometric mean 1 so the global penalty keeps its role.
Eigen::VectorXd multipliers_from_variances(const Eigen::VectorXd& alpha_hat);

}  // namespace ebshrink::ridge
