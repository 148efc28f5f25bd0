#include "ebshrink/enet.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>
#include <vector>

#include "ebshrink/errors.hpp"
#include "ebshrink/generators.hpp"
#include "ebshrink/parallel.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::enet {

void EnetHyper::validate() const {
  if (lambda1 < 0.0) throw DomainError("EnetHyper: lambda1 must be >= 0");
  if (lambda2 <= 0.0) throw DomainError("EnetHyper: lambda2 must be > 0");
  if (sigma2 <= 0.0) throw DomainError("EnetHyper: sigma2 must be > 0");
}

Eigen::VectorXd EnetChain::posterior_mean_beta() const {
  if (beta.rows() == 0) throw DomainError("EnetChain: empty chain");
  return beta.colwise().mean();
}

Eigen::VectorXd sample_beta(const Eigen::VectorXd& tau, const EnetHyper& hyper,
                            const Dataset& d, RngStream& rng) {
  hyper.validate();
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  if (tau.size() != p) throw DomainError("sample_beta: tau length mismatch");
  for (Eigen::Index j = 0; j < p; ++j)
    if (tau[j] <= 1.0)
      throw DomainError("sample_beta: tau_j must exceed 1 (index " +
                        std::to_string(j) + ")");

  // prior covariance over sigma2: D = lambda2^{-1} (I - diag(1/tau))
  const Eigen::ArrayXd D = (1.0 - tau.array().inverse()) / hyper.lambda2;
  const double sigma = std::sqrt(hyper.sigma2);

  Eigen::VectorXd u(p);
  for (Eigen::Index j = 0; j < p; ++j)
    u[j] = sigma * std::sqrt(D[j]) * rng.normal();
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  v += d.X * u / sigma;

  const Eigen::MatrixXd B = d.X * D.sqrt().matrix().asDiagonal();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
  M.selfadjointView<Eigen::Lower>().rankUpdate(B);
  Eigen::LLT<Eigen::MatrixXd> llt(M.selfadjointView<Eigen::Lower>());
  if (llt.info() != Eigen::Success)
    throw DomainError("sample_beta: n x n system not positive definite");
  const Eigen::VectorXd w = llt.solve(d.y / sigma - v);
  return u + sigma * (D.matrix().asDiagonal() * (d.X.transpose() * w));
}

Eigen::VectorXd sample_tau(const Eigen::VectorXd& beta, const EnetHyper& hyper,
                           RngStream& rng) {
  hyper.validate();
  if (hyper.lambda1 <= 0.0)
    throw DomainError("sample_tau: lambda1 must be > 0 for the latent scheme");
  const double psi = hyper.psi();
  Eigen::VectorXd tau(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    double b = beta[j];
    if (b == 0.0) b = 1e-12;  // chi_j = 0 is degenerate; dither
    const double chi = hyper.lambda2 * b * b / hyper.sigma2;
    const double mu = std::sqrt(psi / chi);
    const double ig = rng.inverse_gaussian(mu, psi);
    tau[j] = 1.0 + 1.0 / ig;
  }
  return tau;
}

EnetChain run_gibbs(const Dataset& d, const EnetHyper& hyper,
                    const ChainConfig& config, RngStream& rng) {
  d.validate();
  hyper.validate();
  if (config.burn_in < 0 || config.keep < 1 || config.thin < 1)
    throw DomainError("run_gibbs: invalid chain configuration");
  const Eigen::Index p = d.p();

  EnetChain chain;
  chain.seed = rng.seed();
  chain.stream = rng.stream();
  chain.burn_in = config.burn_in;
  chain.thin = config.thin;
  chain.beta.resize(config.keep, p);
  chain.tau.resize(config.keep, p);

  Eigen::VectorXd tau = Eigen::VectorXd::Constant(p, 2.0);
  Eigen::VectorXd beta = sample_beta(tau, hyper, d, rng);
  const int total = config.burn_in + config.keep * config.thin;
  int kept = 0;
  for (int it = 0; it < total; ++it) {
    tau = sample_tau(beta, hyper, rng);
    beta = sample_beta(tau, hyper, d, rng);
    const int after_burn = it - config.burn_in;
    if (after_burn >= 0 && (after_burn + 1) % config.thin == 0) {
      chain.beta.row(kept) = beta.transpose();
      chain.tau.row(kept) = tau.transpose();
      ++kept;
    }
  }
  return chain;
}

namespace {

// log of the exponent E_k whose average over kept draws forms the posterior
// ordinate: E_k = log p(beta* | Y, tau^{(k)}) - log f(Y | beta*) pi(beta*).
Eigen::VectorXd chib_exponents(const EnetChain& chain,
                               const Eigen::VectorXd& beta_star,
                               const EnetHyper& hyper, const Dataset& d) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  const double l1 = hyper.lambda1;
  const double l2 = hyper.lambda2;
  const double s2 = hyper.sigma2;
  const double x = l1 / std::sqrt(4.0 * l2 * s2);

  const double constant =
      0.5 * static_cast<double>(n - p) * std::log(2.0 * M_PI) +
      0.5 * static_cast<double>(n) * std::log(s2) +
      0.5 * static_cast<double>(p) * std::log(4.0) -
      0.5 * static_cast<double>(n) * std::log(l2) -
      static_cast<double>(p) * log_norm_pdf(x) +
      static_cast<double>(p) * std::log(norm_cdf(-x)) +
      l1 / (2.0 * s2) * beta_star.array().abs().sum();

  const Eigen::Index K = chain.beta.rows();
  Eigen::VectorXd exponents(K);
  Eigen::MatrixXd F(n, n);
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::ArrayXd tau = chain.tau.row(k).transpose().array();
    const Eigen::ArrayXd one_minus_inv = 1.0 - tau.inverse();
    const Eigen::MatrixXd B =
        d.X * one_minus_inv.sqrt().matrix().asDiagonal();
    F.setZero();
    F.diagonal().setConstant(l2);
    F.selfadjointView<Eigen::Lower>().rankUpdate(B);
    Eigen::LLT<Eigen::MatrixXd> llt(F.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success)
      throw DomainError("chib_log_ml: non-positive-definite system at sample " +
                        std::to_string(k));
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const double quad = d.y.dot(llt.solve(d.y));

    double e = constant;
    e -= l2 / (2.0 * s2) *
         (beta_star.array().square() / (tau - 1.0)).sum();
    e += 0.5 * (tau / (tau - 1.0)).log().sum();
    e += 0.5 * logdet;
    e += l2 / (2.0 * s2) * quad;
    if (!std::isfinite(e))
      throw DomainError("chib_log_ml: non-finite term at sample " +
                        std::to_string(k));
    exponents[k] = e;
  }
  return exponents;
}

}  // namespace

double chib_log_ml(const EnetChain& chain, const Eigen::VectorXd& beta_star,
                   const EnetHyper& hyper, const Dataset& d) {
  d.validate();
  hyper.validate();
  if (chain.beta.rows() < 1) throw DomainError("chib_log_ml: empty chain");
  if (beta_star.size() != d.p())
    throw DomainError("chib_log_ml: beta_star length mismatch");
  const Eigen::VectorXd e = chib_exponents(chain, beta_star, hyper, d);
  return std::log(static_cast<double>(e.size())) - log_sum_exp(e);
}

double chib_log_ml(const EnetChain& chain, const EnetHyper& hyper,
                   const Dataset& d) {
  return chib_log_ml(chain, chain.posterior_mean_beta(), hyper, d);
}

ChibResult chib_log_ml_with_se(const EnetChain& chain, const EnetHyper& hyper,
                               const Dataset& d, int batches) {
  d.validate();
  hyper.validate();
  const Eigen::VectorXd beta_star = chain.posterior_mean_beta();
  const Eigen::VectorXd e = chib_exponents(chain, beta_star, hyper, d);
  ChibResult res;
  res.log_ml = std::log(static_cast<double>(e.size())) - log_sum_exp(e);
  batches = std::min<int>(batches, static_cast<int>(e.size()));
  if (batches >= 2) {
    Eigen::VectorXd batch_vals(batches);
    const Eigen::Index per = e.size() / batches;
    for (int b = 0; b < batches; ++b) {
      const Eigen::VectorXd seg = e.segment(b * per, per);
      batch_vals[b] = std::log(static_cast<double>(per)) - log_sum_exp(seg);
    }
    res.mc_se = std::sqrt(sample_variance(batch_vals) /
                          static_cast<double>(batches));
  }
  return res;
}

Eigen::VectorXd sample_enet_prior(int p, const EnetHyper& hyper,
                                  RngStream& rng) {
  hyper.validate();
  if (p < 0) throw DomainError("sample_enet_prior: p must be >= 0");
  Eigen::VectorXd beta(p);
  if (hyper.lambda1 == 0.0) {
    const double sd = std::sqrt(hyper.sigma2 / hyper.lambda2);
    for (int j = 0; j < p; ++j) beta[j] = sd * rng.normal();
    return beta;
  }
  const double psi = hyper.psi();
  for (int j = 0; j < p; ++j) {
    // latent scale: density of t = tau - 1 is prop. to
    // (1+t)^{-1/2} exp(-psi t / 2); rejection with an Exp(psi/2) proposal.
    double t;
    do {
      t = 2.0 * rng.exponential() / psi;
    } while (rng.uniform() > 1.0 / std::sqrt(1.0 + t));
    const double tau = 1.0 + t;
    const double var = hyper.sigma2 * (1.0 - 1.0 / tau) / hyper.lambda2;
    beta[j] = std::sqrt(var) * rng.normal();
  }
  return beta;
}

GridScan grid_scan_experiment(const GridScanConfig& config) {
  if (config.lambda1_grid.size() == 0 || config.lambda2_grid.size() == 0)
    throw DomainError("grid_scan_experiment: empty grid");
  for (Eigen::Index i = 1; i < config.lambda1_grid.size(); ++i)
    if (config.lambda1_grid[i] <= config.lambda1_grid[i - 1])
      throw DomainError("grid_scan_experiment: lambda1 grid must increase");
  for (Eigen::Index i = 1; i < config.lambda2_grid.size(); ++i)
    if (config.lambda2_grid[i] <= config.lambda2_grid[i - 1])
      throw DomainError("grid_scan_experiment: lambda2 grid must increase");

  // one data set shared by every cell
  RngStream data_rng(config.seed, 0);
  Eigen::MatrixXd X(config.n, config.p);
  for (int i = 0; i < config.n; ++i)
    for (int j = 0; j < config.p; ++j) X(i, j) = data_rng.normal();
  EnetHyper truth;
  truth.lambda1 = config.true_lambda1;
  truth.lambda2 = config.true_lambda2;
  truth.sigma2 = config.sigma2;
  const Eigen::VectorXd beta = sample_enet_prior(config.p, truth, data_rng);
  const Eigen::VectorXd y = generate_response(
      X, beta, Family::Gaussian, config.sigma2, data_rng);
  const Dataset d = make_dataset(X, y, Family::Gaussian);

  GridScan scan;
  scan.lambda1_grid = config.lambda1_grid;
  scan.lambda2_grid = config.lambda2_grid;
  const Eigen::Index n1 = config.lambda1_grid.size();
  const Eigen::Index n2 = config.lambda2_grid.size();
  scan.log_ml.resize(n1, n2);
  scan.mc_se.resize(n1, n2);
  scan.ess.resize(n1, n2);

  parallel_for(static_cast<std::size_t>(n1 * n2), config.threads,
               [&](std::size_t cell) {
                 const Eigen::Index i = static_cast<Eigen::Index>(cell) / n2;
                 const Eigen::Index j = static_cast<Eigen::Index>(cell) % n2;
                 EnetHyper hyper;
                 hyper.lambda1 = config.lambda1_grid[i];
                 hyper.lambda2 = config.lambda2_grid[j];
                 hyper.sigma2 = config.sigma2;
                 RngStream rng(config.seed, cell + 1);
                 const EnetChain chain = run_gibbs(d, hyper, config.chain, rng);
                 const ChibResult r = chib_log_ml_with_se(chain, hyper, d);
                 scan.log_ml(i, j) = r.log_ml;
                 scan.mc_se(i, j) = r.mc_se;
                 // lag-1 autocorrelation ESS proxy on the first coefficient
                 const Eigen::VectorXd b0 = chain.beta.col(0);
                 const Eigen::Index K = b0.size();
                 const double m = b0.mean();
                 double num = 0.0, den = 0.0;
                 for (Eigen::Index k = 0; k < K; ++k) {
                   den += (b0[k] - m) * (b0[k] - m);
                   if (k + 1 < K) num += (b0[k] - m) * (b0[k + 1] - m);
                 }
                 const double ac1 = den > 0.0 ? num / den : 0.0;
                 scan.ess(i, j) = static_cast<double>(K) *
                                  (1.0 - std::abs(ac1)) /
                                  (1.0 + std::abs(ac1));
               });
  return scan;
}

}  // namespace ebshrink::enet
