#include "ebshrink/ridge.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "ebshrink/errors.hpp"
#include "ebshrink/log.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::ridge {

namespace {

// Orthonormal basis V (p x r) of the row space of X with the eigenvalues d of
// X'X, computed on the smaller of the two Gram matrices. Every ridge-path
// quantity used below is a function of (V, d, V'X'y).
struct Spectral {
  Eigen::MatrixXd V;
  Eigen::VectorXd d;
  Eigen::VectorXd vtxty;
};

Spectral spectral_of(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Spectral s;
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (p <= n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X.transpose() * X);
    if (eig.info() != Eigen::Success)
      throw DomainError("spectral_of: eigendecomposition failed");
    s.V = eig.eigenvectors();
    s.d = eig.eigenvalues().cwiseMax(0.0);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(X * X.transpose());
    if (eig.info() != Eigen::Success)
      throw DomainError("spectral_of: eigendecomposition failed");
    const Eigen::VectorXd dn = eig.eigenvalues().cwiseMax(0.0);
    const double cutoff = dn.maxCoeff() * 1e-12;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < dn.size(); ++i)
      if (dn[i] > cutoff) keep.push_back(i);
    s.V.resize(p, static_cast<Eigen::Index>(keep.size()));
    s.d.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const Eigen::Index i = keep[c];
      s.d[static_cast<Eigen::Index>(c)] = dn[i];
      s.V.col(static_cast<Eigen::Index>(c)) =
          X.transpose() * eig.eigenvectors().col(i) / std::sqrt(dn[i]);
    }
  }
  s.vtxty = s.V.transpose() * (X.transpose() * y);
  return s;
}

Eigen::VectorXd sandwich_variances(const Spectral& s, double lambda,
                                   double scale) {
  const Eigen::ArrayXd w =
      s.d.array() / (s.d.array() + lambda).square() * scale;
  return (s.V.array().square().matrix() * w.matrix()).eval();
}

struct IrlsResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd weights;  // mu (1 - mu) at convergence
};

double logistic_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& beta, double penalty) {
  const Eigen::ArrayXd eta = (X * beta).array();
  // -log lik = sum log(1 + e^eta) - y. eta, stable for both signs
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    nll += (e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e))) -
           y[i] * e;
  }
  return nll + 0.5 * penalty * beta.squaredNorm();
}

IrlsResult logistic_ridge_irls(const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& y, double penalty,
                               int max_iterations = 100, double tol = 1e-8) {
  const Eigen::Index p = X.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double f = logistic_objective(X, y, beta, penalty);
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::ArrayXd mu = (X * beta).array().unaryExpr(
        [](double e) { return expit(e); });
    const Eigen::VectorXd grad =
        X.transpose() * (mu.matrix() - y) + penalty * beta;
    if (grad.lpNorm<Eigen::Infinity>() < tol)
      return {beta, (mu * (1.0 - mu)).matrix()};
    const Eigen::VectorXd w = (mu * (1.0 - mu)).matrix();
    Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X;
    H.diagonal().array() += penalty;
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success)
      throw DomainError("logistic_ridge_irls: Hessian not positive definite");
    const Eigen::VectorXd step = llt.solve(grad);
    double t = 1.0;
    const double slope = grad.dot(step);
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd cand = beta - t * step;
      const double fc = logistic_objective(X, y, cand, penalty);
      if (fc <= f - 1e-4 * t * slope) {
        beta = cand;
        f = fc;
        break;
      }
      t *= 0.5;
    }
  }
  const Eigen::ArrayXd mu =
      (X * beta).array().unaryExpr([](double e) { return expit(e); });
  const Eigen::VectorXd grad =
      X.transpose() * (mu.matrix() - y) + penalty * beta;
  if (grad.lpNorm<Eigen::Infinity>() >= tol)
    throw DomainError("logistic_ridge_irls: no convergence in " +
                      std::to_string(max_iterations) + " iterations");
  return {beta, (mu * (1.0 - mu)).matrix()};
}

}  // namespace

RidgeFit ridge_fit(const Dataset& d, double lambda, double sigma2) {
  d.validate();
  if (lambda < 0.0) throw DomainError("ridge_fit: lambda must be >= 0");
  if (lambda == 0.0 && d.p() >= d.n())
    throw DomainError("ridge_fit: lambda = 0 requires p < n");

  RidgeFit fit;
  fit.lambda = lambda;
  fit.family = d.family;

  if (d.family == Family::Gaussian) {
    if (sigma2 <= 0.0) throw DomainError("ridge_fit: sigma2 must be > 0");
    const Spectral s = spectral_of(d.X, d.y);
    if (lambda == 0.0 &&
        (s.d.size() < d.p() || s.d.minCoeff() <= s.d.maxCoeff() * 1e-12))
      throw DomainError("ridge_fit: singular system at lambda = 0");
    fit.beta = s.V * (s.vtxty.array() / (s.d.array() + lambda)).matrix();
    fit.v = sandwich_variances(s, lambda, sigma2);
  } else {
    const IrlsResult r = logistic_ridge_irls(d.X, d.y, lambda);
    fit.beta = r.beta;
    const Eigen::MatrixXd Xw =
        r.weights.array().sqrt().matrix().asDiagonal() * d.X;
    const Spectral s = spectral_of(Xw, d.y);
    fit.v = sandwich_variances(s, lambda, 1.0);
  }
  return fit;
}

double ridge_log_ml(const Dataset& d, double tau2, double sigma2) {
  if (tau2 <= 0.0 || sigma2 <= 0.0)
    throw DomainError("ridge_log_ml: variances must be > 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.X * d.X.transpose());
  const Eigen::ArrayXd c = tau2 * eig.eigenvalues().cwiseMax(0.0).array() + sigma2;
  const Eigen::ArrayXd z = (eig.eigenvectors().transpose() * d.y).array();
  const double n = static_cast<double>(d.n());
  return -0.5 * n * std::log(2.0 * M_PI) - 0.5 * c.log().sum() -
         0.5 * (z.square() / c).sum();
}

namespace {

constexpr double kLogLo = -18.420680743952367;  // log 1e-8
constexpr double kLogHi = 18.420680743952367;   // log 1e8

struct MmlObjective {
  Eigen::ArrayXd d;  // eigenvalues of XX'
  Eigen::ArrayXd z2;  // squared rotated response
  double n = 0;

  // negative log marginal likelihood and gradient in (log tau2, log sigma2)
  double eval(const Eigen::Vector2d& x, Eigen::Vector2d& grad) const {
    const double tau2 = std::exp(x[0]);
    const double sigma2 = std::exp(x[1]);
    const Eigen::ArrayXd c = tau2 * d + sigma2;
    const double f = 0.5 * (c.log().sum() + (z2 / c).sum()) +
                     0.5 * n * std::log(2.0 * M_PI);
    const Eigen::ArrayXd inv = c.inverse();
    const Eigen::ArrayXd common = inv - z2 * inv.square();
    grad[0] = 0.5 * tau2 * (common * d).sum();
    grad[1] = 0.5 * sigma2 * common.sum();
    return f;
  }
};

Eigen::Vector2d clamp_box(Eigen::Vector2d x) {
  x[0] = std::clamp(x[0], kLogLo, kLogHi);
  x[1] = std::clamp(x[1], kLogLo, kLogHi);
  return x;
}

// Projected BFGS on the log-parameter box; small and adequate for 2-D.
double minimize_mml(const MmlObjective& obj, Eigen::Vector2d& x) {
  x = clamp_box(x);
  Eigen::Matrix2d H = Eigen::Matrix2d::Identity();
  Eigen::Vector2d g;
  double f = obj.eval(x, g);
  for (int it = 0; it < 300; ++it) {
    Eigen::Vector2d pg = g;
    for (int i = 0; i < 2; ++i) {
      if (x[i] <= kLogLo + 1e-14 && g[i] > 0.0) pg[i] = 0.0;
      if (x[i] >= kLogHi - 1e-14 && g[i] < 0.0) pg[i] = 0.0;
    }
    if (pg.lpNorm<Eigen::Infinity>() < 1e-10 * (1.0 + std::abs(f))) break;
    Eigen::Vector2d dir = -H * g;
    if (dir.dot(g) > 0.0) dir = -g;  // not a descent direction; reset
    double t = 1.0;
    Eigen::Vector2d xn = x;
    Eigen::Vector2d gn = g;
    double fn = f;
    bool moved = false;
    for (int half = 0; half < 50; ++half) {
      const Eigen::Vector2d cand = clamp_box(x + t * dir);
      const Eigen::Vector2d delta = cand - x;
      if (delta.lpNorm<Eigen::Infinity>() < 1e-16) break;
      Eigen::Vector2d gc;
      const double fc = obj.eval(cand, gc);
      if (fc <= f + 1e-4 * std::min(g.dot(delta), 0.0) && fc < f) {
        xn = cand;
        gn = gc;
        fn = fc;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    const Eigen::Vector2d s = xn - x;
    const Eigen::Vector2d yv = gn - g;
    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
      const Eigen::Matrix2d L = I - s * yv.transpose() / sy;
      H = L * H * L.transpose() + s * s.transpose() / sy;
    } else {
      H = Eigen::Matrix2d::Identity();
    }
    x = xn;
    g = gn;
    f = fn;
    if (s.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return f;
}

}  // namespace

MmlFit direct_mml_ridge(const Dataset& d) {
  d.validate();
  if (d.family != Family::Gaussian)
    throw DomainError("direct_mml_ridge: Gaussian response required");
  if (d.n() < 2) throw DomainError("direct_mml_ridge: need n >= 2");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.X * d.X.transpose());
  if (eig.info() != Eigen::Success)
    throw DomainError("direct_mml_ridge: eigendecomposition failed");
  MmlObjective obj;
  obj.d = eig.eigenvalues().cwiseMax(0.0).array();
  obj.z2 = (eig.eigenvectors().transpose() * d.y).array().square();
  obj.n = static_cast<double>(d.n());

  const double vy = std::max(d.y.squaredNorm() / obj.n, 1e-8);
  const double dbar = std::max(obj.d.mean(), 1e-8);
  const std::vector<Eigen::Vector2d> starts = {
      {std::log(0.5 * vy / dbar), std::log(0.5 * vy)},
      {std::log(1e-4 * vy / dbar + 1e-10), std::log(vy)},
      {std::log(2.0 * vy / dbar), std::log(0.1 * vy)},
  };

  double best_f = std::numeric_limits<double>::infinity();
  Eigen::Vector2d best_x = starts[0];
  for (const auto& start : starts) {
    Eigen::Vector2d x = start;
    const double f = minimize_mml(obj, x);
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }

  MmlFit fit;
  fit.tau2 = std::exp(best_x[0]);
  fit.sigma2 = std::exp(best_x[1]);
  fit.lambda = fit.sigma2 / fit.tau2;
  fit.log_ml = -best_f;
  fit.at_bound = best_x[0] <= kLogLo + 1e-6 || best_x[0] >= kLogHi - 1e-6 ||
                 best_x[1] <= kLogLo + 1e-6 || best_x[1] >= kLogHi - 1e-6;
  if (fit.at_bound)
    log_warning("direct_mml_ridge: optimum on the box boundary, prior "
                "estimate degenerate");
  return fit;
}

double laplace_log_ml_logistic(const Dataset& d, double tau2) {
  d.validate();
  if (d.family != Family::Binomial)
    throw DomainError("laplace_log_ml_logistic: binary response required");
  if (tau2 <= 0.0) throw DomainError("laplace_log_ml_logistic: tau2 must be > 0");

  const double penalty = 1.0 / tau2;
  const IrlsResult r = logistic_ridge_irls(d.X, d.y, penalty);
  const double p = static_cast<double>(d.p());
  // negative unnormalized log posterior at the mode, prior normalization included
  const double g = logistic_objective(d.X, d.y, r.beta, penalty) +
                   0.5 * p * std::log(2.0 * M_PI * tau2);
  Eigen::MatrixXd H = d.X.transpose() * r.weights.asDiagonal() * d.X;
  H.diagonal().array() += penalty;
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success)
    throw DomainError(
        "laplace_log_ml_logistic: Hessian not positive definite at the mode");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -g + 0.5 * p * std::log(2.0 * M_PI) - 0.5 * logdet;
}

double tau2_unbiased_ols(const RidgeFit& fit) {
  if (fit.lambda != 0.0)
    throw DomainError("tau2_unbiased_ols: fit must be ordinary least squares");
  return (fit.beta.array().square() - fit.v.array()).mean();
}

double tau2_unbiased_ols_clipped(const RidgeFit& fit) {
  return std::max(tau2_unbiased_ols(fit), 0.0);
}

namespace {

struct BiasCorrectedParts {
  Eigen::VectorXd beta;
  Eigen::VectorXd v;
  Spectral s;
};

BiasCorrectedParts bias_corrected_parts(const Dataset& d, double lambda0,
                                        double sigma2) {
  if (lambda0 <= 0.0)
    throw DomainError("tau2_bias_corrected: lambda0 must be > 0");
  BiasCorrectedParts parts;
  if (d.family == Family::Gaussian) {
    parts.s = spectral_of(d.X, d.y);
    parts.beta =
        parts.s.V *
        (parts.s.vtxty.array() / (parts.s.d.array() + lambda0)).matrix();
    parts.v = sandwich_variances(parts.s, lambda0, sigma2);
  } else {
    const IrlsResult r = logistic_ridge_irls(d.X, d.y, lambda0);
    parts.beta = r.beta;
    const Eigen::MatrixXd Xw =
        r.weights.array().sqrt().matrix().asDiagonal() * d.X;
    parts.s = spectral_of(Xw, d.y);
    parts.v = sandwich_variances(parts.s, lambda0, 1.0);
  }
  for (Eigen::Index j = 0; j < parts.v.size(); ++j)
    if (parts.v[j] <= 1e-300)
      throw DomainError("tau2_bias_corrected: variable " + std::to_string(j) +
                        " has zero sampling variance, moments undefined");
  return parts;
}

}  // namespace

double tau2_bias_corrected(const Dataset& d, double lambda0, double sigma2) {
  d.validate();
  const BiasCorrectedParts parts = bias_corrected_parts(d, lambda0, sigma2);
  const Eigen::ArrayXd t =
      parts.s.d.array() / (parts.s.d.array() + lambda0);
  // row squared norms of the bias matrix C = V diag(t) V'
  const Eigen::VectorXd row_sq =
      (parts.s.V.array().square().matrix() * t.square().matrix()).eval();
  const double numerator =
      (parts.beta.array().square() / parts.v.array() - 1.0).sum();
  const double denominator = (row_sq.array() / parts.v.array()).sum();
  return numerator / denominator;
}

double tau2_bias_corrected_clipped(const Dataset& d, double lambda0,
                                   double sigma2) {
  return std::max(tau2_bias_corrected(d, lambda0, sigma2), 0.0);
}

Eigen::VectorXd group_moment_eb(const Dataset& d, const GroupStructure& groups,
                                double lambda0, double sigma2) {
  d.validate();
  if (groups.p() != d.p())
    throw DomainError("group_moment_eb: group structure does not match p");
  const BiasCorrectedParts parts = bias_corrected_parts(d, lambda0, sigma2);
  const int G = groups.groups();
  const Eigen::Index r = parts.s.d.size();
  const double p = static_cast<double>(d.p());
  const Eigen::ArrayXd t = parts.s.d.array() / (parts.s.d.array() + lambda0);
  const Eigen::MatrixXd Vc = parts.s.V * t.matrix().asDiagonal();

  // S_h = sum_{k in G_h} V_k V_k', T_g = sum_{j in G_g} v_j^{-1} Vc_j Vc_j'
  std::vector<Eigen::MatrixXd> S(static_cast<std::size_t>(G)),
      T(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    S[static_cast<std::size_t>(g)] = Eigen::MatrixXd::Zero(r, r);
    T[static_cast<std::size_t>(g)] = Eigen::MatrixXd::Zero(r, r);
  }
  for (int j = 0; j < d.p(); ++j) {
    const auto g = static_cast<std::size_t>(groups.group_of(j));
    S[g].noalias() += parts.s.V.row(j).transpose() * parts.s.V.row(j);
    T[g].noalias() +=
        (Vc.row(j).transpose() * Vc.row(j)) / parts.v[j];
  }

  Eigen::MatrixXd A(G, G);
  Eigen::VectorXd m(G);
  for (int g = 0; g < G; ++g) {
    double mg = 0.0;
    for (int j : groups.members(g))
      mg += parts.beta[j] * parts.beta[j] / parts.v[j] - 1.0;
    m[g] = mg / p;
    for (int h = 0; h < G; ++h)
      A(g, h) = (S[static_cast<std::size_t>(h)].array() *
                 T[static_cast<std::size_t>(g)].array())
                    .sum() /
                p;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU |
                                               Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= smax * 1e-12)
    throw DomainError("group_moment_eb: singular moment system, condition "
                      "number " +
                      std::to_string(smax / std::max(smin, 1e-300)));
  Eigen::VectorXd alpha = svd.solve(m);
  for (int g = 0; g < G; ++g) {
    if (alpha[g] < 1e-8) {
      log_warning("group_moment_eb: variance for group " + std::to_string(g) +
                  " clipped at 1e-8 (solution " + std::to_string(alpha[g]) +
                  ")");
      alpha[g] = 1e-8;
    }
  }
  return alpha;
}

Eigen::VectorXd default_lambda_grid() {
  Eigen::VectorXd grid(25);
  const double lo = std::log10(1e-3);
  const double hi = std::log10(1e5);
  for (int i = 0; i < 25; ++i)
    grid[i] = std::pow(10.0, lo + (hi - lo) * i / 24.0);
  return grid;
}

CvResult cv_ridge(const Dataset& d, int folds,
                  const Eigen::VectorXd& lambda_grid, RngStream& rng,
                  double sigma2) {
  d.validate();
  if (folds < 2) throw DomainError("cv_ridge: need at least 2 folds");
  if (lambda_grid.size() == 0) throw DomainError("cv_ridge: empty grid");
  const Eigen::Index n = d.n();
  if (folds > n) throw DomainError("cv_ridge: more folds than samples");

  // deterministic permutation, then round-robin fold labels
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        rng.uniform_int(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)],
              perm[static_cast<std::size_t>(j)]);
  }
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (Eigen::Index pos = 0; pos < n; ++pos)
    fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] =
        static_cast<int>(pos % folds);

  Eigen::VectorXd error = Eigen::VectorXd::Zero(lambda_grid.size());
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i)
      (fold_of[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), d.p());
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
    Eigen::MatrixXd Xte(static_cast<Eigen::Index>(test.size()), d.p());
    Eigen::VectorXd yte(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < train.size(); ++i) {
      Xtr.row(static_cast<Eigen::Index>(i)) = d.X.row(train[i]);
      ytr[static_cast<Eigen::Index>(i)] = d.y[train[i]];
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      Xte.row(static_cast<Eigen::Index>(i)) = d.X.row(test[i]);
      yte[static_cast<Eigen::Index>(i)] = d.y[test[i]];
    }

    if (d.family == Family::Gaussian) {
      const Spectral s = spectral_of(Xtr, ytr);
      const Eigen::MatrixXd P = Xte * s.V;
      for (Eigen::Index l = 0; l < lambda_grid.size(); ++l) {
        const Eigen::VectorXd coef =
            (s.vtxty.array() / (s.d.array() + lambda_grid[l])).matrix();
        error[l] += (yte - P * coef).squaredNorm();
      }
    } else {
      for (Eigen::Index l = 0; l < lambda_grid.size(); ++l) {
        const IrlsResult r = logistic_ridge_irls(Xtr, ytr, lambda_grid[l]);
        const Eigen::ArrayXd prob = (Xte * r.beta).array().unaryExpr(
            [](double e) { return expit(e); });
        error[l] += (yte.array() - prob).square().sum();
      }
    }
  }
  error /= static_cast<double>(n);

  Eigen::Index best = 0;
  error.minCoeff(&best);
  CvResult res;
  res.grid = lambda_grid;
  res.cv_error = error;
  res.lambda = lambda_grid[best];
  res.tau2 = sigma2 / res.lambda;
  return res;
}

Eigen::VectorXd multiplier_reparam(double lambda_global,
                                   const Eigen::VectorXd& multipliers) {
  if (lambda_global < 0.0)
    throw DomainError("multiplier_reparam: negative global penalty");
  return lambda_global * multipliers;
}

Eigen::VectorXd multipliers_from_variances(const Eigen::VectorXd& alpha_hat) {
  if (alpha_hat.size() == 0)
    throw DomainError("multipliers_from_variances: empty input");
  for (Eigen::Index g = 0; g < alpha_hat.size(); ++g)
    if (alpha_hat[g] <= 0.0)
      throw DomainError("multipliers_from_variances: variances must be > 0");
  const double log_geo = alpha_hat.array().log().mean();
  return (std::exp(log_geo) / alpha_hat.array()).matrix();
}

}  // namespace ebshrink::ridge
