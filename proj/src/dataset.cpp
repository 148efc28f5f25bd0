#include "ebshrink/dataset.hpp"

#include <cmath>
#include <string>

#include "ebshrink/errors.hpp"

namespace ebshrink {

void Dataset::validate() const {
  if (X.rows() < 1 || X.cols() < 1)
    throw DomainError("Dataset: need n >= 1 and p >= 1");
  if (y.size() != X.rows())
    throw DomainError("Dataset: response length does not match rows of X");
  if (!standardized.empty() &&
      standardized.size() != static_cast<std::size_t>(X.cols()))
    throw DomainError("Dataset: standardized flags do not match columns");
  if (family == Family::Binomial) {
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0)
        throw DomainError("Dataset: binary response must lie in {0,1}, row " +
                          std::to_string(i));
    }
  }
  const double tol = 1e-10;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (standardized.empty() || !standardized[static_cast<std::size_t>(j)])
      continue;
    const double m = X.col(j).mean();
    const double v = (X.col(j).array() - m).square().mean();
    if (std::abs(m) > tol || std::abs(v - 1.0) > tol)
      throw DomainError("Dataset: column " + std::to_string(j) +
                        " marked standardized but is not");
  }
}

Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, Family family) {
  Dataset d;
  d.X = std::move(X);
  d.y = std::move(y);
  d.family = family;
  d.standardized.assign(static_cast<std::size_t>(d.X.cols()), false);
  d.validate();
  return d;
}

Dataset standardize(const Dataset& d) {
  Dataset out = d;
  const Eigen::Index p = d.X.cols();
  out.center.resize(p);
  out.scale.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double m = d.X.col(j).mean();
    const double v = (d.X.col(j).array() - m).square().mean();
    if (v <= 0.0)
      throw DomainError("ConstantColumn: column " + std::to_string(j) +
                        " has zero variance");
    const double s = std::sqrt(v);
    out.X.col(j) = (d.X.col(j).array() - m) / s;
    out.center[j] = m;
    out.scale[j] = s;
    out.standardized[static_cast<std::size_t>(j)] = true;
  }
  return out;
}

}  // namespace ebshrink
