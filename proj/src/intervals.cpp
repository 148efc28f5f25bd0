#include "ebshrink/intervals.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ebshrink/errors.hpp"
#include "ebshrink/generators.hpp"
#include "ebshrink/log.hpp"
#include "ebshrink/parallel.hpp"
#include "ebshrink/polya_gamma.hpp"
#include "ebshrink/ridge.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::intervals {

std::string variant_name(PriorVariant v) {
  switch (v) {
    case PriorVariant::EB: return "eb";
    case PriorVariant::FB: return "fb";
    case PriorVariant::Hybrid: return "hybrid";
  }
  return "?";
}

std::string kind_name(IntervalKind k) {
  return k == IntervalKind::EqualTail ? "equal_tail" : "hpd";
}

void PrecisionSpec::validate(int n_groups) const {
  if (variant != PriorVariant::FB) {
    if (multipliers.size() != n_groups)
      throw DomainError("PrecisionSpec: one multiplier per group required");
    for (Eigen::Index g = 0; g < multipliers.size(); ++g)
      if (multipliers[g] <= 0.0)
        throw DomainError("PrecisionSpec: multipliers must be > 0");
  }
  if (variant == PriorVariant::EB && lambda <= 0.0)
    throw DomainError("PrecisionSpec: lambda must be > 0");
  if (variant != PriorVariant::EB &&
      (gamma_shape <= 0.0 || gamma_rate <= 0.0))
    throw DomainError("PrecisionSpec: Gamma hyper-parameters must be > 0");
}

Eigen::VectorXd draw_group_precisions(const Eigen::VectorXd& beta_coeffs,
                                      const GroupStructure& groups,
                                      double shape, double rate,
                                      RngStream& rng) {
  if (beta_coeffs.size() != groups.p())
    throw DomainError("draw_group_precisions: beta length mismatch");
  Eigen::VectorXd prec(groups.groups());
  for (int g = 0; g < groups.groups(); ++g) {
    double ss = 0.0;
    for (int j : groups.members(g)) ss += beta_coeffs[j] * beta_coeffs[j];
    prec[g] = rng.gamma(shape + 0.5 * groups.size_of(g), rate + 0.5 * ss);
  }
  return prec;
}

LogisticChain pg_logistic_gibbs(const Dataset& d, const PrecisionSpec& spec,
                                const GroupStructure& groups,
                                const ChainConfig& config, RngStream& rng) {
  d.validate();
  if (d.family != Family::Binomial)
    throw DomainError("pg_logistic_gibbs: binary response required");
  if (groups.p() != d.p())
    throw DomainError("pg_logistic_gibbs: group structure does not match p");
  spec.validate(groups.groups());
  if (config.burn_in < 0 || config.keep < 1 || config.thin < 1)
    throw DomainError("pg_logistic_gibbs: invalid chain configuration");

  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  const int off = spec.include_intercept ? 1 : 0;
  const Eigen::Index q = p + off;
  const int G = groups.groups();

  Eigen::MatrixXd Xd(n, q);
  if (off) Xd.col(0).setOnes();
  Xd.rightCols(p) = d.X;
  const Eigen::VectorXd xk = Xd.transpose() * (d.y.array() - 0.5).matrix();

  // fixed part of the per-coefficient prior precision
  Eigen::VectorXd mult2(G);
  if (spec.variant != PriorVariant::FB)
    mult2 = spec.multipliers.array().square();

  Eigen::VectorXd group_prec(G);  // tau_g^{-2}
  switch (spec.variant) {
    case PriorVariant::EB:
      group_prec = spec.lambda * mult2;
      break;
    case PriorVariant::FB:
      group_prec.setConstant(spec.gamma_shape / spec.gamma_rate);
      break;
    case PriorVariant::Hybrid:
      group_prec = (spec.gamma_shape / spec.gamma_rate) * mult2;
      break;
  }

  LogisticChain chain;
  chain.has_intercept = off == 1;
  chain.seed = rng.seed();
  chain.stream = rng.stream();
  chain.burn_in = config.burn_in;
  chain.thin = config.thin;
  chain.beta.resize(config.keep, q);
  chain.precisions.resize(config.keep, G);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd omega(n);
  Eigen::MatrixXd Q(q, q);
  const int total = config.burn_in + config.keep * config.thin;
  int kept = 0;
  for (int it = 0; it < total; ++it) {
    const Eigen::VectorXd eta = Xd * beta;
    for (Eigen::Index i = 0; i < n; ++i)
      omega[i] = polya_gamma1(eta[i], rng);

    Q.setZero();
    Q.selfadjointView<Eigen::Lower>().rankUpdate(
        (omega.array().sqrt().matrix().asDiagonal() * Xd).transpose());
    for (Eigen::Index j = 0; j < p; ++j)
      Q(off + j, off + j) += group_prec[groups.group_of(static_cast<int>(j))];
    Eigen::LLT<Eigen::MatrixXd> llt(Q.selfadjointView<Eigen::Lower>());
    if (llt.info() != Eigen::Success)
      throw DomainError(
          "pg_logistic_gibbs: posterior precision not positive definite");
    Eigen::VectorXd z(q);
    for (Eigen::Index j = 0; j < q; ++j) z[j] = rng.normal();
    beta = llt.solve(xk) + llt.matrixU().solve(z);

    const Eigen::VectorXd coeffs = beta.tail(p);
    if (spec.variant == PriorVariant::FB) {
      group_prec = draw_group_precisions(coeffs, groups, spec.gamma_shape,
                                         spec.gamma_rate, rng);
    } else if (spec.variant == PriorVariant::Hybrid) {
      double ss = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) {
        const double b = coeffs[j];
        ss += mult2[groups.group_of(static_cast<int>(j))] * b * b;
      }
      const double global =
          rng.gamma(spec.gamma_shape + 0.5 * static_cast<double>(p),
                    spec.gamma_rate + 0.5 * ss);
      group_prec = global * mult2;
    }

    const int after_burn = it - config.burn_in;
    if (after_burn >= 0 && (after_burn + 1) % config.thin == 0) {
      chain.beta.row(kept) = beta.transpose();
      chain.precisions.row(kept) = group_prec.transpose();
      ++kept;
    }
  }
  return chain;
}

namespace {

// number of samples an interval at this level must contain
Eigen::Index interval_count(std::size_t m, double level) {
  if (level <= 0.0 || level >= 1.0)
    throw DomainError("interval: level must lie in (0,1)");
  const auto h = static_cast<Eigen::Index>(
      std::ceil(level * static_cast<double>(m)));
  return std::min<Eigen::Index>(std::max<Eigen::Index>(h, 1),
                                static_cast<Eigen::Index>(m));
}

}  // namespace

std::pair<double, double> equal_tail_interval(std::vector<double> samples,
                                              double level) {
  if (samples.empty()) throw DomainError("equal_tail_interval: no samples");
  std::sort(samples.begin(), samples.end());
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index h = interval_count(samples.size(), level);
  const Eigen::Index out = m - h;
  const Eigen::Index lo = out / 2;
  const Eigen::Index hi = out - lo;
  return {samples[static_cast<std::size_t>(lo)],
          samples[static_cast<std::size_t>(m - 1 - hi)]};
}

std::pair<double, double> hpd_interval(std::vector<double> samples,
                                       double level) {
  if (samples.empty()) throw DomainError("hpd_interval: no samples");
  std::sort(samples.begin(), samples.end());
  const Eigen::Index m = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index h = interval_count(samples.size(), level);
  Eigen::Index best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + h <= m; ++i) {
    const double width = samples[static_cast<std::size_t>(i + h - 1)] -
                         samples[static_cast<std::size_t>(i)];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {samples[static_cast<std::size_t>(best)],
          samples[static_cast<std::size_t>(best + h - 1)]};
}

std::vector<PredictiveInterval> intervals_from_chain(
    const LogisticChain& chain, const Eigen::MatrixXd& X_test, double level,
    IntervalKind kind) {
  if (chain.beta.rows() == 0)
    throw DomainError("intervals_from_chain: empty chain");
  const Eigen::Index p_coeff =
      chain.beta.cols() - (chain.has_intercept ? 1 : 0);
  if (X_test.cols() != p_coeff)
    throw DomainError("intervals_from_chain: test matrix has wrong width");

  Eigen::MatrixXd Xd(X_test.rows(), chain.beta.cols());
  if (chain.has_intercept) {
    Xd.col(0).setOnes();
    Xd.rightCols(p_coeff) = X_test;
  } else {
    Xd = X_test;
  }

  const Eigen::MatrixXd eta = chain.beta * Xd.transpose();  // keep x n_test
  std::vector<PredictiveInterval> out;
  out.reserve(static_cast<std::size_t>(X_test.rows()));
  std::vector<double> q(static_cast<std::size_t>(eta.rows()));
  for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < eta.rows(); ++k) {
      q[static_cast<std::size_t>(k)] = expit(eta(k, i));
      total += q[static_cast<std::size_t>(k)];
    }
    PredictiveInterval iv;
    iv.kind = kind;
    iv.level = level;
    iv.estimate = total / static_cast<double>(eta.rows());
    const auto ends = kind == IntervalKind::EqualTail
                          ? equal_tail_interval(q, level)
                          : hpd_interval(q, level);
    iv.lower = ends.first;
    iv.upper = ends.second;
    out.push_back(iv);
  }
  return out;
}

double calibrate_tau0(int n_groups, int per_group, double rho, int block,
                      double target, std::uint64_t seed) {
  const int p = n_groups * per_group;
  const GroupStructure groups = GroupStructure::contiguous(p, n_groups);
  const BlockCovariance cov(p, block, rho);

  // linear predictors at tau0 = 1; they scale linearly with tau0
  RngStream rng(seed, 0x7A0CAFE);
  Eigen::VectorXd ladder(n_groups);
  for (int g = 0; g < n_groups; ++g)
    ladder[g] = std::pow(2.0, -2.0 * g);  // variances at tau0 = 1
  const int n_beta = 100;
  const int n_rows = 100;
  std::vector<double> abs_eta;
  abs_eta.reserve(static_cast<std::size_t>(n_beta * n_rows));
  for (int r = 0; r < n_beta; ++r) {
    const Eigen::VectorXd beta = sample_coefficients(groups, ladder, rng);
    const Eigen::MatrixXd X = sample_design(n_rows, cov, rng);
    const Eigen::VectorXd eta = X * beta;
    for (Eigen::Index i = 0; i < eta.size(); ++i)
      abs_eta.push_back(std::abs(eta[i]));
  }
  const double extreme_cut = logit(0.95);

  auto fraction = [&](double tau0) {
    std::size_t count = 0;
    for (double e : abs_eta)
      if (tau0 * e > extreme_cut) ++count;
    return static_cast<double>(count) / static_cast<double>(abs_eta.size());
  };

  double lo = 1e-3, hi = 1e3;
  for (int it = 0; it < 200; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double f = fraction(mid);
    if (f >= target - 0.02 && f <= target + 0.02) return mid;
    (f < target ? lo : hi) = mid;
  }
  throw DomainError("calibrate_tau0: bisection failed to reach the target "
                    "extreme fraction");
}

CoverageResult coverage_experiment(const CoverageConfig& config) {
  if (config.replicates < 1)
    throw DomainError("coverage_experiment: need at least one replicate");
  const int G = config.n_groups;
  const int p = G * config.per_group;
  const GroupStructure groups = GroupStructure::contiguous(p, G);
  const BlockCovariance cov(p, config.block, config.rho);

  CoverageResult result;
  result.tau0 = calibrate_tau0(G, config.per_group, config.rho, config.block,
                               config.extreme_fraction, config.seed);
  Eigen::VectorXd tau2_ladder(G);
  for (int g = 0; g < G; ++g) {
    const double sd = result.tau0 * std::pow(2.0, -g);
    tau2_ladder[g] = sd * sd;
  }

  std::vector<PriorVariant> variants;
  for (PriorVariant v : config.variants) {
    if (v == PriorVariant::FB && G > 2) {
      log_warning("coverage_experiment: FB variant skipped for G > 2");
      continue;
    }
    variants.push_back(v);
  }

  std::vector<std::vector<CoverageRow>> per_replicate(
      static_cast<std::size_t>(config.replicates));

  parallel_for(
      static_cast<std::size_t>(config.replicates), config.threads,
      [&](std::size_t r) {
        RngStream data_rng(config.seed, 1000 + r);
        const Eigen::MatrixXd X_train =
            sample_design(config.n_train, cov, data_rng);
        const Eigen::VectorXd beta =
            sample_coefficients(groups, tau2_ladder, data_rng);
        const Eigen::VectorXd y_train = generate_response(
            X_train, beta, Family::Binomial, 0.0, data_rng);
        const Eigen::MatrixXd X_test =
            sample_design(config.n_test, cov, data_rng);
        const Eigen::VectorXd q_true =
            (X_test * beta).unaryExpr([](double e) { return expit(e); });
        const Dataset train = make_dataset(X_train, y_train, Family::Binomial);

        RngStream cv_rng(config.seed, 2000 + r);
        const ridge::CvResult cv = ridge::cv_ridge(
            train, config.cv_folds, ridge::default_lambda_grid(), cv_rng);
        const Eigen::VectorXd alpha =
            ridge::group_moment_eb(train, groups, config.lambda0, 1.0);
        const Eigen::VectorXd mult2 = ridge::multipliers_from_variances(alpha);
        const Eigen::VectorXd multipliers = mult2.array().sqrt();

        std::vector<CoverageRow>& rows = per_replicate[r];
        for (std::size_t vi = 0; vi < variants.size(); ++vi) {
          PrecisionSpec spec;
          spec.variant = variants[vi];
          spec.lambda = cv.lambda;
          spec.multipliers = multipliers;
          spec.gamma_shape = config.gamma_shape;
          spec.gamma_rate = config.gamma_rate;
          RngStream chain_rng(config.seed, 3000 + r * 8 + vi);
          const LogisticChain chain =
              pg_logistic_gibbs(train, spec, groups, config.chain, chain_rng);
          for (IntervalKind kind :
               {IntervalKind::EqualTail, IntervalKind::Hpd}) {
            const auto ivs =
                intervals_from_chain(chain, X_test, config.level, kind);
            for (Eigen::Index i = 0; i < X_test.rows(); ++i) {
              CoverageRow row;
              row.replicate = static_cast<int>(r);
              row.variant = variants[vi];
              row.kind = kind;
              row.q_true = q_true[i];
              row.lower = ivs[static_cast<std::size_t>(i)].lower;
              row.upper = ivs[static_cast<std::size_t>(i)].upper;
              row.covered = row.lower <= row.q_true && row.q_true <= row.upper;
              rows.push_back(row);
            }
          }
        }
      });

  for (auto& rows : per_replicate)
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  return result;
}

std::vector<CurvePoint> moving_average_coverage(
    const std::vector<std::pair<double, bool>>& rows, int window) {
  if (rows.empty()) throw DomainError("moving_average_coverage: no rows");
  if (window < 1) throw DomainError("moving_average_coverage: window >= 1");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].first < rows[i - 1].first)
      throw DomainError("moving_average_coverage: rows must be sorted by q");

  std::vector<CurvePoint> curve;
  if (rows.size() < static_cast<std::size_t>(window)) {
    log_warning("moving_average_coverage: fewer rows than the window; "
                "returning the global mean");
    double q = 0.0, c = 0.0;
    for (const auto& [qi, cov] : rows) {
      q += qi;
      c += cov ? 1.0 : 0.0;
    }
    curve.push_back({q / static_cast<double>(rows.size()),
                     c / static_cast<double>(rows.size())});
    return curve;
  }

  double q_sum = 0.0, c_sum = 0.0;
  for (int i = 0; i < window; ++i) {
    q_sum += rows[static_cast<std::size_t>(i)].first;
    c_sum += rows[static_cast<std::size_t>(i)].second ? 1.0 : 0.0;
  }
  curve.push_back({q_sum / window, c_sum / window});
  for (std::size_t i = static_cast<std::size_t>(window); i < rows.size(); ++i) {
    q_sum += rows[i].first - rows[i - static_cast<std::size_t>(window)].first;
    c_sum += (rows[i].second ? 1.0 : 0.0) -
             (rows[i - static_cast<std::size_t>(window)].second ? 1.0 : 0.0);
    curve.push_back({q_sum / window, c_sum / window});
  }
  return curve;
}

}  // namespace ebshrink::intervals
