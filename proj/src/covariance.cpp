#include "ebshrink/covariance.hpp"

#include <Eigen/Cholesky>
#include <string>

#include "ebshrink/errors.hpp"

namespace ebshrink {

BlockCovariance::BlockCovariance(int p_, int b_, double rho_)
    : p(p_), b(b_), rho(rho_) {
  if (p < 1 || b < 1) throw DomainError("BlockCovariance: need p >= 1, b >= 1");
  if (p % b != 0)
    throw DomainError("BlockCovariance: block size " + std::to_string(b) +
                      " does not divide p = " + std::to_string(p));
  if (rho < 0.0 || rho >= 1.0)
    throw DomainError("NotPositiveDefinite: rho must lie in [0,1)");
}

Eigen::MatrixXd BlockCovariance::dense() const {
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
  for (int start = 0; start < p; start += b) {
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        if (i != j) sigma(start + i, start + j) = rho;
  }
  return sigma;
}

Eigen::MatrixXd BlockCovariance::block_cholesky() const {
  Eigen::MatrixXd block = Eigen::MatrixXd::Constant(b, b, rho);
  block.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success)
    throw DomainError("NotPositiveDefinite: block covariance factorization failed");
  return llt.matrixL();
}

double BlockCovariance::psi_diag() const {
  const double denom = (1.0 - rho) * (1.0 + (b - 1) * rho);
  return (1.0 + (b - 2) * rho) / denom;
}

double BlockCovariance::psi_offdiag() const {
  if (b == 1) return 0.0;
  const double denom = (1.0 - rho) * (1.0 + (b - 1) * rho);
  return -rho / denom;
}

Eigen::MatrixXd BlockCovariance::precision() const {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(p, p);
  const double dg = psi_diag();
  const double od = psi_offdiag();
  for (int start = 0; start < p; start += b) {
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j)
        psi(start + i, start + j) = (i == j) ? dg : od;
  }
  return psi;
}

}  // namespace ebshrink
