#include "ebshrink/generators.hpp"

#include <cmath>

#include "ebshrink/errors.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink {

Eigen::MatrixXd sample_design(int n, const BlockCovariance& cov,
                              RngStream& rng) {
  if (n < 0) throw DomainError("sample_design: n must be >= 0");
  Eigen::MatrixXd X(n, cov.p);
  if (n == 0) return X;

  if (cov.is_identity()) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < cov.p; ++j) X(i, j) = rng.normal();
    return X;
  }

  const Eigen::MatrixXd L = cov.block_cholesky();
  Eigen::VectorXd z(cov.b);
  for (int i = 0; i < n; ++i) {
    for (int start = 0; start < cov.p; start += cov.b) {
      for (int k = 0; k < cov.b; ++k) z[k] = rng.normal();
      X.row(i).segment(start, cov.b) = (L * z).transpose();
    }
  }
  return X;
}

Eigen::VectorXd sample_coefficients(const GroupStructure& groups,
                                    const Eigen::VectorXd& tau2_per_group,
                                    RngStream& rng) {
  if (tau2_per_group.size() != groups.groups())
    throw DomainError("sample_coefficients: one tau2 per group required");
  for (Eigen::Index g = 0; g < tau2_per_group.size(); ++g)
    if (tau2_per_group[g] < 0.0)
      throw DomainError("sample_coefficients: tau2 must be >= 0");

  Eigen::VectorXd beta(groups.p());
  for (int j = 0; j < groups.p(); ++j) {
    const double sd = std::sqrt(tau2_per_group[groups.group_of(j)]);
    beta[j] = sd * rng.normal();
  }
  return beta;
}

Eigen::VectorXd generate_response(const Eigen::MatrixXd& X,
                                  const Eigen::VectorXd& beta, Family family,
                                  double sigma2, RngStream& rng) {
  if (beta.size() != X.cols())
    throw DomainError("generate_response: beta length must match columns of X");
  const Eigen::VectorXd eta = X * beta;
  Eigen::VectorXd y(X.rows());
  if (family == Family::Gaussian) {
    if (sigma2 <= 0.0)
      throw DomainError("generate_response: sigma2 must be > 0 for Gaussian");
    const double sd = std::sqrt(sigma2);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y[i] = eta[i] + sd * rng.normal();
  } else {
    for (Eigen::Index i = 0; i < y.size(); ++i)
      y[i] = rng.uniform() < expit(eta[i]) ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace ebshrink
