#pragma once

#include <Eigen/Dense>

namespace ebshrink {

// Block-diagonal exchangeable covariance: p/b blocks, each with unit diagonal
// and off-diagonal correlation rho. rho in [0,1) keeps every block positive
// definite.
struct BlockCovariance {
  int p = 1;
  int b = 1;
  double rho = 0.0;

  BlockCovariance(int p_, int b_, double rho_);

  int blocks() const { return p / b; }
  bool is_identity() const { return rho == 0.0 || b == 1; }

  Eigen::MatrixXd dense() const;

  // Lower Cholesky factor of one b x b block.
  Eigen::MatrixXd block_cholesky() const;

  // Entries of Psi = Sigma^{-1}: within-block diagonal and off-diagonal
  // values (zero across blocks).
  double psi_diag() const;
  double psi_offdiag() const;
  Eigen::MatrixXd precision() const;
};

}  // namespace ebshrink
