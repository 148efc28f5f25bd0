#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "ebshrink/errors.hpp"
#include "ebshrink/ridge.hpp"

namespace ebshrink::ridge {

void EmseInput::validate() const {
  if (n < 1 || p < 1) throw DomainError("EmseInput: need n >= 1, p >= 1");
  if (p >= n - 3)
    throw DomainError("EmseInput: the closed form requires p < n - 3 (got p=" +
                      std::to_string(p) + ", n=" + std::to_string(n) + ")");
  if (tau2 < 0.0) throw DomainError("EmseInput: tau2 must be >= 0");
  if (psi.rows() != p || psi.cols() != p)
    throw DomainError("EmseInput: psi must be p x p");
  if ((psi - psi.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw DomainError("EmseInput: psi must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success)
    throw DomainError("EmseInput: psi must be positive definite");
}

double emse_closed_form(const EmseInput& input) {
  input.validate();
  const double n = input.n;
  const double p = input.p;
  const double tau2 = input.tau2;
  const double r1 = n - p - 1.0;
  const double r3 = n - p - 3.0;
  const double r0 = n - p;

  double diag_terms = 0.0;
  double trace_psi = 0.0;
  double off_terms = 0.0;
  for (int j = 0; j < input.p; ++j) {
    const double pjj = input.psi(j, j);
    diag_terms += 2.0 * pjj * pjj / (r1 * r3) + pjj * pjj / r1;
    trace_psi += pjj;
    for (int k = 0; k < input.p; ++k) {
      if (k == j) continue;
      const double pjk = input.psi(j, k);
      const double pkk = input.psi(k, k);
      off_terms +=
          ((r0 + 1.0) * pjk * pjk + r1 * pjj * pkk) / (r0 * r1 * r3) +
          pjk * pjk / r1;
    }
  }
  return 2.0 / (r1 * p * p) *
             (diag_terms + 2.0 * tau2 * trace_psi + off_terms) +
         2.0 * tau2 * tau2 / p;
}

double emse_independent(int n, int p, double tau2) {
  if (p >= n - 3)
    throw DomainError("emse_independent: requires p < n - 3");
  if (p < 1) throw DomainError("emse_independent: need p >= 1");
  if (tau2 < 0.0) throw DomainError("emse_independent: tau2 must be >= 0");
  const double nn = n;
  const double pp = p;
  const double r1 = nn - pp - 1.0;
  const double r3 = nn - pp - 3.0;
  const double r0 = nn - pp;
  return 2.0 / (r1 * pp) *
             (2.0 / (r1 * r3) + 1.0 / r1 + 2.0 * tau2 +
              (pp - 1.0) / (r0 * r3)) +
         2.0 * tau2 * tau2 / pp;
}

}  // namespace ebshrink::ridge
