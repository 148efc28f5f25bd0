#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ebshrink {

enum class Family { Gaussian, Binomial };

// Design matrix plus response. Rows are samples. Once standardize() has run,
// center/scale hold the original column location and spread so fitted
// coefficients can be mapped back to the raw scale.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Family family = Family::Gaussian;
  std::vector<bool> standardized;  // per column
  Eigen::VectorXd center;          // empty until standardized
  Eigen::VectorXd scale;           // population standard deviations

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  // Enforces the structural invariants: n,p >= 1, matching lengths, binary
  // responses in {0,1}, standardized columns centered/scaled within 1e-10.
  void validate() const;
};

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, Family family);

// Centers each column and scales it to unit population variance
// (divisor n, used consistently across the project).
// Throws DomainError("ConstantColumn ...") on a zero-variance column.
Dataset standardize(const Dataset& d);

}  // namespace ebshrink
