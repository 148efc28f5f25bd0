#pragma once

#include <Eigen/Dense>

#include "ebshrink/covariance.hpp"
#include "ebshrink/dataset.hpp"
#include "ebshrink/groups.hpp"
#include "ebshrink/rng.hpp"

namespace ebshrink {

// n i.i.d. rows from N(0, Sigma). Only one b x b Cholesky factor is computed
// and reused across blocks. Draw order is row by row, column by column, so
// rho = 0 and b = 1 consume the stream identically.
Eigen::MatrixXd sample_design(int n, const BlockCovariance& cov, RngStream& rng);

// beta_j ~ N(0, tau2[g]) independently, g the group of j.
Eigen::VectorXd sample_coefficients(const GroupStructure& groups,
                                    const Eigen::VectorXd& tau2_per_group,
                                    RngStream& rng);

// Gaussian: Y = X beta + N(0, sigma2 I). Binomial: Y_i ~ Bern(expit(X_i beta));
// sigma2 is ignored for the Binomial family.
Eigen::VectorXd generate_response(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& beta, Family family,
                                  double sigma2, RngStream& rng);

}  // namespace ebshrink
