#include "ebshrink/normal_means.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ebshrink/errors.hpp"
#include "ebshrink/log.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::normal_means {

void ConvolutionData::validate() const {
  if (z.size() == 0) throw DomainError("ConvolutionData: empty");
  if (sigma2.size() != z.size())
    throw DomainError("ConvolutionData: sigma2 length mismatch");
  for (Eigen::Index i = 0; i < sigma2.size(); ++i)
    if (sigma2[i] <= 0.0)
      throw DomainError("ConvolutionData: sigma2 must be > 0 at index " +
                        std::to_string(i));
}

void MixturePrior::validate() const {
  const auto K = weight.size();
  if (K == 0 || mu.size() != K || tau2.size() != K)
    throw DomainError("MixturePrior: component vectors must share a length");
  double total = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (weight[k] < 0.0) throw DomainError("MixturePrior: negative weight");
    if (tau2[k] < 0.0) throw DomainError("MixturePrior: negative variance");
    total += weight[k];
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw DomainError("MixturePrior: weights must sum to 1");
}

ConvolutionData z_scores(const Dataset& d) {
  if (d.family != Family::Binomial)
    throw DomainError("z_scores: binary response required");
  d.validate();
  const Eigen::Index n = d.n();
  Eigen::Index n1 = 0;
  for (Eigen::Index i = 0; i < n; ++i) n1 += d.y[i] == 1.0 ? 1 : 0;
  const Eigen::Index n0 = n - n1;
  if (n0 == 0 || n1 == 0)
    throw DomainError("z_scores: both classes must be nonempty");
  if (n < 3) throw DomainError("z_scores: need n >= 3 for a pooled variance");

  ConvolutionData c;
  c.z.resize(d.p());
  c.sigma2 = Eigen::VectorXd::Ones(d.p());
  for (Eigen::Index j = 0; j < d.p(); ++j) {
    double m0 = 0.0, m1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      (d.y[i] == 1.0 ? m1 : m0) += d.X(i, j);
    m0 /= static_cast<double>(n0);
    m1 /= static_cast<double>(n1);
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dev = d.X(i, j) - (d.y[i] == 1.0 ? m1 : m0);
      ss += dev * dev;
    }
    const double pooled = ss / static_cast<double>(n - 2);
    const double se = std::sqrt(pooled * (1.0 / static_cast<double>(n0) +
                                          1.0 / static_cast<double>(n1)));
    if (se <= 0.0)
      throw DomainError("z_scores: zero pooled variance in column " +
                        std::to_string(j));
    c.z[j] = (m1 - m0) / se;
  }
  return c;
}

GaussianPrior fit_gaussian_prior(const ConvolutionData& c) {
  c.validate();
  if (c.size() < 2) throw DomainError("fit_gaussian_prior: need p >= 2");
  GaussianPrior prior;
  const double moment = sample_variance(c.z) - c.sigma2.mean();
  if (moment < 0.0) {
    log_warning("fit_gaussian_prior: moment estimate of tau2 was negative (" +
                std::to_string(moment) + "); clipped to 0");
    prior.tau2 = 0.0;
  } else {
    prior.tau2 = moment;
  }
  double wsum = 0.0, wz = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double w = 1.0 / (prior.tau2 + c.sigma2[i]);
    wsum += w;
    wz += w * c.z[i];
  }
  prior.mu = wz / wsum;
  return prior;
}

Eigen::VectorXd posterior_mean(const ConvolutionData& c,
                               const GaussianPrior& prior) {
  c.validate();
  if (prior.tau2 < 0.0) throw DomainError("posterior_mean: tau2 must be >= 0");
  Eigen::VectorXd theta(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double shrink = prior.tau2 / (prior.tau2 + c.sigma2[i]);
    theta[i] = prior.mu + shrink * (c.z[i] - prior.mu);
  }
  return theta;
}

namespace {

struct EmState {
  // log responsibilities and conjugate posterior moments per (j, k)
  Eigen::MatrixXd resp;      // p x K
  Eigen::MatrixXd post_mean; // p x K
  Eigen::MatrixXd post_var;  // p x K
  double log_marginal = 0.0;
};

EmState em_e_step(const ConvolutionData& c, const MixturePrior& prior) {
  const auto p = c.size();
  const auto K = prior.components();
  EmState s;
  s.resp.resize(p, K);
  s.post_mean.resize(p, K);
  s.post_var.resize(p, K);
  s.log_marginal = 0.0;
  Eigen::VectorXd logw(K);
  for (Eigen::Index k = 0; k < K; ++k)
    logw[k] = std::log(std::max(prior.weight[k], 1e-300));
  Eigen::VectorXd lp(K);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const double mvar = prior.tau2[k] + c.sigma2[j];
      lp[k] = logw[k] + log_normal_pdf(c.z[j], prior.mu[k], mvar);
      const double shrink = prior.tau2[k] / mvar;
      s.post_mean(j, k) = prior.mu[k] + shrink * (c.z[j] - prior.mu[k]);
      s.post_var(j, k) = prior.tau2[k] * c.sigma2[j] / mvar;
    }
    const double lse = log_sum_exp(lp);
    s.log_marginal += lse;
    for (Eigen::Index k = 0; k < K; ++k) s.resp(j, k) = std::exp(lp[k] - lse);
  }
  return s;
}

MixturePrior em_m_step(const EmState& s, const MixturePrior& prior) {
  const auto p = s.resp.rows();
  const auto K = s.resp.cols();
  MixturePrior next = prior;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double nk = s.resp.col(k).sum();
    next.weight[k] = nk / static_cast<double>(p);
    if (nk <= 0.0) {
      // Dead component: freeze its parameters.
      continue;
    }
    const double mu = s.resp.col(k).dot(s.post_mean.col(k)) / nk;
    double v = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      const double d = s.post_mean(j, k) - mu;
      v += s.resp(j, k) * (s.post_var(j, k) + d * d);
    }
    next.mu[k] = mu;
    next.tau2[k] = std::max(v / nk, 0.0);
  }
  return next;
}

MixturePrior em_init(const ConvolutionData& c, int K, int restart,
                     RngStream& rng) {
  std::vector<double> zs(c.z.data(), c.z.data() + c.size());
  MixturePrior prior;
  prior.weight = Eigen::VectorXd::Constant(K, 1.0 / K);
  prior.mu.resize(K);
  prior.tau2.resize(K);
  const double pooled =
      std::max(sample_variance(c.z) - c.sigma2.mean(), 1e-4 * sample_variance(c.z));
  for (int k = 0; k < K; ++k) {
    const double q = restart == 0
                         ? (k + 0.5) / K
                         : rng.uniform();  // jittered quantile restarts
    prior.mu[k] = quantile(zs, q);
    prior.tau2[k] = pooled;
  }
  return prior;
}

}  // namespace

double mixture_log_marginal(const ConvolutionData& c,
                            const MixturePrior& prior) {
  c.validate();
  prior.validate();
  return em_e_step(c, prior).log_marginal;
}

EmFit fit_mixture_prior_em(const ConvolutionData& c, int K, RngStream& rng,
                           const EmOptions& options) {
  c.validate();
  if (K < 1) throw DomainError("fit_mixture_prior_em: K must be >= 1");
  if (K > c.size())
    throw DomainError("fit_mixture_prior_em: K exceeds the number of scores");

  EmFit best;
  best.log_marginal = -std::numeric_limits<double>::infinity();
  const int restarts = K == 1 ? 1 : std::max(options.restarts, 1);
  for (int r = 0; r < restarts; ++r) {
    MixturePrior prior = em_init(c, K, r, rng);
    double prev = -std::numeric_limits<double>::infinity();
    int it = 0;
    double current = 0.0;
    for (; it < options.max_iterations; ++it) {
      const EmState s = em_e_step(c, prior);
      current = s.log_marginal;
      if (current + 1e-9 < prev)
        throw DomainError(
            "fit_mixture_prior_em: marginal likelihood decreased, EM step "
            "invalid");
      if (current - prev < options.tolerance && it > 0) break;
      prev = current;
      prior = em_m_step(s, prior);
    }
    if (current > best.log_marginal) {
      best.prior = prior;
      best.log_marginal = current;
      best.iterations = it;
    }
  }
  return best;
}

Eigen::VectorXd posterior_mean(const ConvolutionData& c,
                               const MixturePrior& prior) {
  c.validate();
  prior.validate();
  const EmState s = em_e_step(c, prior);
  Eigen::VectorXd theta(c.size());
  for (Eigen::Index j = 0; j < c.size(); ++j)
    theta[j] = s.resp.row(j).dot(s.post_mean.row(j));
  return theta;
}

DldaResult dlda_classify(const Eigen::MatrixXd& W,
                         const Eigen::VectorXd& theta_hat) {
  if (W.cols() != theta_hat.size())
    throw DomainError("dlda_classify: dimension mismatch");
  DldaResult r;
  r.scores = W * theta_hat;
  r.labels.resize(static_cast<std::size_t>(r.scores.size()));
  for (Eigen::Index i = 0; i < r.scores.size(); ++i)
    r.labels[static_cast<std::size_t>(i)] = r.scores[i] > 0.0 ? 1 : 0;
  return r;
}

const BattingData& batting_data() {
  static const BattingData data = [] {
    BattingData d;
    d.b.resize(18);
    d.truth.resize(18);
    // First-45-at-bat averages and rest-of-season averages, 18 players.
    const double b[18] = {0.400, 0.378, 0.356, 0.333, 0.311, 0.311,
                          0.289, 0.267, 0.244, 0.244, 0.222, 0.222,
                          0.222, 0.222, 0.222, 0.200, 0.178, 0.156};
    const double t[18] = {0.346, 0.298, 0.276, 0.222, 0.273, 0.270,
                          0.263, 0.210, 0.269, 0.230, 0.264, 0.256,
                          0.303, 0.264, 0.226, 0.285, 0.316, 0.200};
    for (int i = 0; i < 18; ++i) {
      d.b[i] = b[i];
      d.truth[i] = t[i];
    }
    return d;
  }();
  return data;
}

ConvolutionData batting_convolution() {
  const BattingData& d = batting_data();
  ConvolutionData c;
  c.z = d.b;
  c.sigma2 = (d.b.array() * (1.0 - d.b.array()) / 45.0).matrix();
  c.validate();
  return c;
}

namespace {

double kde_bandwidth(const Eigen::VectorXd& x) {
  std::vector<double> xs(x.data(), x.data() + x.size());
  const double sd = std::sqrt(sample_variance(x));
  const double iqr = quantile(xs, 0.75) - quantile(xs, 0.25);
  const double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0)
    throw DomainError("extend_batting: zero spread, bandwidth undefined");
  return 0.9 * spread * std::pow(static_cast<double>(x.size()), -0.2);
}

}  // namespace

ExtendedConvolution extend_batting(const ConvolutionData& base,
                                   const Eigen::VectorXd& truth, int m,
                                   RngStream& rng) {
  base.validate();
  if (m < 0) throw DomainError("extend_batting: m must be >= 0");
  if (truth.size() != base.size())
    throw DomainError("extend_batting: one true value per base observation");
  ExtendedConvolution out;
  if (m == 0) {
    out.data = base;
    out.truths = truth;
    return out;
  }
  const double bw = kde_bandwidth(truth);
  const auto n0 = base.size();
  out.data.z.resize(n0 + m);
  out.data.sigma2.resize(n0 + m);
  out.truths.resize(n0 + m);
  out.data.z.head(n0) = base.z;
  out.data.sigma2.head(n0) = base.sigma2;
  out.truths.head(truth.size()) = truth;
  for (int i = 0; i < m; ++i) {
    const auto j = rng.uniform_int(static_cast<std::uint64_t>(truth.size()));
    const double theta = truth[static_cast<Eigen::Index>(j)] + bw * rng.normal();
    if (theta <= 0.0 || theta >= 1.0)
      throw DomainError(
          "extend_batting: resampled true value outside (0,1), binomial "
          "variance undefined");
    const double noise_sd = std::sqrt(theta * (1.0 - theta) / 45.0);
    const double obs = theta + noise_sd * rng.normal();
    out.truths[n0 + i] = theta;
    out.data.z[n0 + i] = obs;
    out.data.sigma2[n0 + i] = obs * (1.0 - obs) / 45.0;
  }
  out.data.validate();
  return out;
}

}  // namespace ebshrink::normal_means
