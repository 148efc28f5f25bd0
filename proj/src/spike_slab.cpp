#include "ebshrink/spike_slab.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "ebshrink/errors.hpp"
#include "ebshrink/log.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::spikeslab {

void SpikeSlabModel::validate(Eigen::Index p) const {
  if (slab_variance <= 0.0)
    throw DomainError("SpikeSlabModel: slab variance must be > 0");
  if (noise_variance <= 0.0)
    throw DomainError("SpikeSlabModel: noise variance must be > 0");
  if (codata.rows() != p)
    throw DomainError("SpikeSlabModel: codata must have one row per variable");
  if (codata.cols() < 1)
    throw DomainError("SpikeSlabModel: codata needs at least one column");
  if (static_cast<double>(codata.cols()) > static_cast<double>(p) / 10.0)
    log_warning("SpikeSlabModel: co-data has s > p/10 columns; the inclusion "
                "model may overfit");
}

Eigen::MatrixXd standardize_codata(const Eigen::MatrixXd& C) {
  Eigen::MatrixXd out = C;
  for (Eigen::Index j = 0; j < C.cols(); ++j) {
    const double m = C.col(j).mean();
    const double v = (C.col(j).array() - m).square().mean();
    if (v <= 0.0) continue;  // constant column, e.g. intercept
    out.col(j) = (C.col(j).array() - m) / std::sqrt(v);
  }
  return out;
}

Eigen::VectorXd nu_from_alpha(const Eigen::MatrixXd& C,
                              const Eigen::VectorXd& alpha,
                              long* clamp_events) {
  if (alpha.size() != C.cols())
    throw DomainError("nu_from_alpha: alpha length must match codata columns");
  constexpr double lo = 1e-12;
  constexpr double hi = 1.0 - 1e-12;
  Eigen::VectorXd nu = (C * alpha).unaryExpr([](double e) { return expit(e); });
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu[j] < lo) {
      nu[j] = lo;
      if (clamp_events) ++*clamp_events;
    } else if (nu[j] > hi) {
      nu[j] = hi;
      if (clamp_events) ++*clamp_events;
    }
  }
  return nu;
}

SsState SsState::initial(const Dataset& d) {
  SsState s;
  s.beta = Eigen::VectorXd::Zero(d.p());
  s.xi.assign(static_cast<std::size_t>(d.p()), 0);
  s.residual = d.y;
  s.column_norms = d.X.colwise().squaredNorm();
  return s;
}

void ss_gibbs_sweep(SsState& state, const SpikeSlabModel& model,
                    const Eigen::VectorXd& nu, const Dataset& d,
                    RngStream& rng) {
  const double s2 = model.noise_variance;
  const double slab = model.slab_variance;
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    // residual with variable j removed
    const double bj = state.beta[j];
    double xtr = d.X.col(j).dot(state.residual) + state.column_norms[j] * bj;
    const double a = state.column_norms[j] / s2 + 1.0 / slab;
    const double m = xtr / s2 / a;
    // marginal odds of inclusion, beta_j integrated out
    const double log_odds = std::log(nu[j]) - std::log1p(-nu[j]) -
                            0.5 * std::log(slab * a) + 0.5 * m * m * a;
    const bool include = rng.uniform() < expit(log_odds);
    double new_b = 0.0;
    if (include) new_b = m + rng.normal() / std::sqrt(a);
    state.xi[static_cast<std::size_t>(j)] = include ? 1 : 0;
    if (new_b != bj) {
      state.residual += d.X.col(j) * (bj - new_b);
      state.beta[j] = new_b;
    }
  }
}

Eigen::VectorXd SsChain::posterior_inclusion() const {
  if (kept == 0) throw DomainError("SsChain: empty chain");
  return inclusion_counts / static_cast<double>(kept);
}

SsChain run_ss_chain(SsState& state, const SpikeSlabModel& model,
                     const Eigen::VectorXd& nu, const Dataset& d, int burn_in,
                     int keep, RngStream& rng) {
  if (burn_in < 0 || keep < 1)
    throw DomainError("run_ss_chain: invalid chain configuration");
  const Eigen::Index p = d.p();
  SsChain chain;
  chain.inclusion_counts = Eigen::VectorXd::Zero(p);
  chain.beta_mean = Eigen::VectorXd::Zero(p);
  chain.xi_draws.assign(static_cast<std::size_t>(keep) *
                            static_cast<std::size_t>(p),
                        0);
  for (int it = 0; it < burn_in; ++it) ss_gibbs_sweep(state, model, nu, d, rng);
  for (int it = 0; it < keep; ++it) {
    ss_gibbs_sweep(state, model, nu, d, rng);
    for (Eigen::Index j = 0; j < p; ++j) {
      const std::uint8_t v = state.xi[static_cast<std::size_t>(j)];
      chain.inclusion_counts[j] += v;
      chain.xi_draws[static_cast<std::size_t>(it) *
                         static_cast<std::size_t>(p) +
                     static_cast<std::size_t>(j)] = v;
    }
    chain.beta_mean += state.beta;
  }
  chain.kept = keep;
  chain.beta_mean /= static_cast<double>(keep);
  return chain;
}

namespace {

double binomial_loglik(const Eigen::VectorXd& B, double M,
                       const Eigen::MatrixXd& C, const Eigen::VectorXd& alpha,
                       double ridge) {
  const Eigen::ArrayXd eta = (C * alpha).array();
  double ll = 0.0;
  for (Eigen::Index j = 0; j < B.size(); ++j) {
    const double e = eta[j];
    const double log1pe =
        e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += B[j] * e - M * log1pe;
  }
  return ll - ridge * alpha.squaredNorm();
}

Eigen::VectorXd fit_alpha_irls(const Eigen::VectorXd& B, double M,
                               const Eigen::MatrixXd& C, double ridge,
                               bool* diverged) {
  const Eigen::Index s = C.cols();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(s);
  double ll = binomial_loglik(B, M, C, alpha, ridge);
  *diverged = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::ArrayXd mu =
        (C * alpha).array().unaryExpr([](double e) { return expit(e); });
    const Eigen::VectorXd grad =
        C.transpose() * (B - M * mu.matrix()) - 2.0 * ridge * alpha;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-8) return alpha;
    const Eigen::VectorXd w = (M * mu * (1.0 - mu)).matrix();
    Eigen::MatrixXd H = C.transpose() * w.asDiagonal() * C;
    H.diagonal().array() += 2.0 * ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
      *diverged = true;
      return alpha;
    }
    const Eigen::VectorXd step = llt.solve(grad);
    double t = 1.0;
    bool moved = false;
    for (int half = 0; half < 60; ++half) {
      const Eigen::VectorXd cand = alpha + t * step;
      const double cand_ll = binomial_loglik(B, M, C, cand, ridge);
      if (cand_ll >= ll + 1e-4 * t * grad.dot(step)) {
        alpha = cand;
        ll = cand_ll;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    if (alpha.lpNorm<Eigen::Infinity>() > 30.0) {
      *diverged = true;
      return alpha;
    }
  }
  *diverged = true;
  return alpha;
}

}  // namespace

Eigen::VectorXd fit_alpha_binomial(const Eigen::VectorXd& B, double M,
                                   const Eigen::MatrixXd& C) {
  if (B.size() != C.rows())
    throw DomainError("fit_alpha_binomial: one count per codata row required");
  if (M < 1.0) throw DomainError("fit_alpha_binomial: M must be >= 1");
  for (Eigen::Index j = 0; j < B.size(); ++j)
    if (B[j] < 0.0 || B[j] > M)
      throw DomainError("fit_alpha_binomial: counts must lie in [0, M]");
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(C);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= smax * 1e-10)
      throw DomainError("fit_alpha_binomial: codata not of full column rank");
  }

  bool diverged = false;
  Eigen::VectorXd alpha = fit_alpha_irls(B, M, C, 0.0, &diverged);
  if (!diverged) return alpha;
  log_warning("fit_alpha_binomial: separation detected, returning "
              "ridge-stabilized estimate");
  alpha = fit_alpha_irls(B, M, C, 1e-6, &diverged);
  if (diverged)
    throw DomainError("fit_alpha_binomial: no convergence even with ridge "
                      "stabilization");
  return alpha;
}

McemResult run_mcem(const Dataset& d, const SpikeSlabModel& model,
                    const Eigen::VectorXd& alpha0, const McemSchedule& schedule,
                    RngStream& rng) {
  d.validate();
  model.validate(d.p());
  if (schedule.max_iterations < 1 || schedule.initial_samples < 1 ||
      schedule.sample_cap < schedule.initial_samples)
    throw DomainError("run_mcem: invalid schedule");

  McemResult result;
  result.codata_std = standardize_codata(model.codata);
  const Eigen::MatrixXd& C = result.codata_std;
  if (alpha0.size() != C.cols())
    throw DomainError("run_mcem: alpha0 length must match codata columns");

  Eigen::VectorXd alpha = alpha0;
  result.trace.alpha.push_back(alpha);
  SsState state = SsState::initial(d);
  int consecutive = 0;
  for (int k = 0; k < schedule.max_iterations; ++k) {
    const int mk = std::min<long long>(
        static_cast<long long>(schedule.initial_samples) << k,
        schedule.sample_cap);
    const Eigen::VectorXd nu =
        nu_from_alpha(C, alpha, &result.trace.clamp_events);
    const SsChain chain =
        run_ss_chain(state, model, nu, d, schedule.burn_in, mk, rng);
    const Eigen::VectorXd next =
        fit_alpha_binomial(chain.inclusion_counts, mk, C);
    result.trace.sample_counts.push_back(mk);
    result.trace.inclusion_counts.push_back(chain.inclusion_counts);
    result.trace.alpha.push_back(next);
    if ((next - alpha).lpNorm<Eigen::Infinity>() < schedule.tolerance)
      ++consecutive;
    else
      consecutive = 0;
    alpha = next;
    if (consecutive >= 3) {
      result.trace.converged = true;
      break;
    }
  }
  if (!result.trace.converged)
    log_warning("run_mcem: stopping rule not met within " +
                std::to_string(schedule.max_iterations) + " iterations");

  const Eigen::VectorXd nu =
      nu_from_alpha(C, alpha, &result.trace.clamp_events);
  result.final_chain = run_ss_chain(state, model, nu, d, schedule.burn_in,
                                    schedule.final_keep, rng);
  result.alpha = alpha;
  return result;
}

double conditional_loglik(const std::vector<std::uint8_t>& xi,
                          const Eigen::MatrixXd& C,
                          const Eigen::VectorXd& alpha) {
  if (static_cast<Eigen::Index>(xi.size()) != C.rows())
    throw DomainError("conditional_loglik: xi length must match codata rows");
  const Eigen::VectorXd nu = nu_from_alpha(C, alpha);
  double ll = 0.0;
  for (Eigen::Index j = 0; j < C.rows(); ++j) {
    const double p1 = nu[j];
    ll += xi[static_cast<std::size_t>(j)] ? std::log(p1) : std::log1p(-p1);
  }
  return ll;
}

double joint_conditional_loglik(const SsState& state,
                                const SpikeSlabModel& model,
                                const Eigen::MatrixXd& C,
                                const Eigen::VectorXd& alpha,
                                const Dataset& d) {
  const Eigen::VectorXd resid = d.y - d.X * state.beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < resid.size(); ++i)
    ll += log_normal_pdf(resid[i], 0.0, model.noise_variance);
  for (Eigen::Index j = 0; j < d.p(); ++j)
    if (state.xi[static_cast<std::size_t>(j)])
      ll += log_normal_pdf(state.beta[j], 0.0, model.slab_variance);
  return ll + conditional_loglik(state.xi, C, alpha);
}

}  // namespace ebshrink::spikeslab
