#include "ebshrink/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>

#include "ebshrink/csv.hpp"
#include "ebshrink/enet.hpp"
#include "ebshrink/errors.hpp"
#include "ebshrink/generators.hpp"
#include "ebshrink/normal_means.hpp"
#include "ebshrink/parallel.hpp"
#include "ebshrink/ridge.hpp"
#include "ebshrink/sha256.hpp"
#include "ebshrink/stats.hpp"

namespace ebshrink::sim {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownEstimators = {"tau2_ols", "tau2_bias", "cv",
                                                "cv5", "cv10"};

int estimator_folds(const std::string& name, int default_folds) {
  if (name == "cv5") return 5;
  if (name == "cv10") return 10;
  return default_folds;
}

std::string estimator_method_name(const std::string& name, int default_folds) {
  if (name == "cv") return "cv" + std::to_string(default_folds);
  return name;
}

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DomainError("config: invalid JSON");
  return j;
}

}  // namespace

std::vector<EmseRow> run_emse_sweep(const EmseConfig& config) {
  if (config.replicates < 1)
    throw DomainError("run_emse_sweep: need at least one replicate");
  if (config.p_grid.empty() || config.tau2_grid.empty() ||
      config.sigma_grid.empty())
    throw DomainError("run_emse_sweep: empty grid");
  for (const auto& e : config.estimators)
    if (!kKnownEstimators.count(e))
      throw DomainError("run_emse_sweep: unknown estimator '" + e + "'");

  std::vector<EmseRow> rows;
  std::size_t cell = 0;
  for (int p : config.p_grid) {
    for (double tau2 : config.tau2_grid) {
      for (const SigmaSpec& sg : config.sigma_grid) {
        const BlockCovariance cov(p, sg.b, sg.rho);
        const GroupStructure single = GroupStructure::single(p);
        const Eigen::VectorXd tau2_vec = Eigen::VectorXd::Constant(1, tau2);

        if (config.simulate) {
          const std::size_t n_est = config.estimators.size();
          Eigen::MatrixXd sqerr(config.replicates, n_est);
          sqerr.setConstant(std::numeric_limits<double>::quiet_NaN());
          const std::size_t base_stream =
              cell * static_cast<std::size_t>(config.replicates);
          parallel_for(
              static_cast<std::size_t>(config.replicates), config.threads,
              [&](std::size_t rep) {
                RngStream rng(config.seed, base_stream + rep + 1);
                const Eigen::MatrixXd X = sample_design(config.n, cov, rng);
                const Eigen::VectorXd beta =
                    sample_coefficients(single, tau2_vec, rng);
                const Eigen::VectorXd y = generate_response(
                    X, beta, Family::Gaussian, config.sigma2, rng);
                const Dataset d = make_dataset(X, y, Family::Gaussian);
                for (std::size_t e = 0; e < n_est; ++e) {
                  const std::string& name = config.estimators[e];
                  double est = std::numeric_limits<double>::quiet_NaN();
                  if (name == "tau2_ols") {
                    if (p < config.n) {
                      const ridge::RidgeFit fit =
                          ridge::ridge_fit(d, 0.0, config.sigma2);
                      est = ridge::tau2_unbiased_ols(fit);
                    }
                  } else if (name == "tau2_bias") {
                    est = ridge::tau2_bias_corrected(d, config.lambda0,
                                                     config.sigma2);
                  } else {
                    const int folds =
                        estimator_folds(name, config.cv_folds);
                    const ridge::CvResult cv = ridge::cv_ridge(
                        d, folds, ridge::default_lambda_grid(), rng,
                        config.sigma2);
                    est = cv.tau2;
                  }
                  if (std::isfinite(est)) {
                    const double err = est - tau2;
                    sqerr(static_cast<Eigen::Index>(rep),
                          static_cast<Eigen::Index>(e)) = err * err;
                  }
                }
              });

          for (std::size_t e = 0; e < n_est; ++e) {
            const Eigen::VectorXd col = sqerr.col(static_cast<Eigen::Index>(e));
            if (!col.array().isFinite().all()) continue;  // p >= n for OLS
            const double emse = col.mean();
            EmseRow row;
            row.n = config.n;
            row.p = p;
            row.tau2 = tau2;
            row.rho = sg.rho;
            row.b = sg.b;
            row.method = estimator_method_name(config.estimators[e],
                                               config.cv_folds);
            row.root_emse = std::sqrt(emse);
            row.replicates = config.replicates;
            if (config.replicates >= 2 && emse > 0.0) {
              const double se_mean = std::sqrt(
                  sample_variance(col) / static_cast<double>(config.replicates));
              row.mc_se = se_mean / (2.0 * row.root_emse);
            }
            rows.push_back(row);
          }
        }

        if (config.closed_form && p < config.n - 3) {
          ridge::EmseInput input;
          input.n = config.n;
          input.p = p;
          input.tau2 = tau2;
          input.psi = cov.precision();
          EmseRow row;
          row.n = config.n;
          row.p = p;
          row.tau2 = tau2;
          row.rho = sg.rho;
          row.b = sg.b;
          row.method = "closed_form";
          row.root_emse = std::sqrt(ridge::emse_closed_form(input));
          row.mc_se = 0.0;
          row.replicates = 0;
          rows.push_back(row);
        }
        ++cell;
      }
    }
  }
  return rows;
}

std::string emse_rows_to_csv(const std::vector<EmseRow>& rows) {
  std::string out = "n,p,tau2,rho,b,method,root_emse,mc_se,replicates\n";
  for (const EmseRow& r : rows) {
    out += std::to_string(r.n) + ',' + std::to_string(r.p) + ',' +
           format_double(r.tau2) + ',' + format_double(r.rho) + ',' +
           std::to_string(r.b) + ',' + r.method + ',' +
           format_double(r.root_emse) + ',' + format_double(r.mc_se) + ',' +
           std::to_string(r.replicates) + '\n';
  }
  return out;
}

EmseConfig emse_config_from_json(const std::string& json_text) {
  const json j = parse_json(json_text);
  EmseConfig c;
  c.n = j.value("n", c.n);
  if (j.contains("p_grid")) c.p_grid = j.at("p_grid").get<std::vector<int>>();
  if (j.contains("tau2_grid"))
    c.tau2_grid = j.at("tau2_grid").get<std::vector<double>>();
  if (j.contains("sigma_grid")) {
    c.sigma_grid.clear();
    for (const auto& s : j.at("sigma_grid"))
      c.sigma_grid.push_back({s.value("rho", 0.0), s.value("b", 1)});
  }
  c.replicates = j.value("replicates", c.replicates);
  c.lambda0 = j.value("lambda0", c.lambda0);
  c.sigma2 = j.value("sigma2", c.sigma2);
  c.closed_form = j.value("closed_form", c.closed_form);
  c.simulate = j.value("simulate", c.simulate);
  if (j.contains("estimators"))
    c.estimators = j.at("estimators").get<std::vector<std::string>>();
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  return c;
}

enet::GridScanConfig enet_config_from_json(const std::string& json_text) {
  const json j = parse_json(json_text);
  enet::GridScanConfig c;
  c.n = j.value("n", c.n);
  c.p = j.value("p", c.p);
  auto read_grid = [&](const char* key, Eigen::VectorXd& grid) {
    if (!j.contains(key)) return;
    const auto values = j.at(key).get<std::vector<double>>();
    grid.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
      grid[static_cast<Eigen::Index>(i)] = values[i];
  };
  read_grid("lambda1_grid", c.lambda1_grid);
  read_grid("lambda2_grid", c.lambda2_grid);
  c.true_lambda1 = j.value("true_lambda1", c.true_lambda1);
  c.true_lambda2 = j.value("true_lambda2", c.true_lambda2);
  c.sigma2 = j.value("sigma2", c.sigma2);
  c.chain.burn_in = j.value("burn_in", c.chain.burn_in);
  c.chain.keep = j.value("keep", c.chain.keep);
  c.chain.thin = j.value("thin", c.chain.thin);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  return c;
}

std::string grid_scan_to_csv(const enet::GridScan& scan) {
  std::string out = "lambda1,lambda2,log_ml,mc_se\n";
  for (Eigen::Index i = 0; i < scan.lambda1_grid.size(); ++i)
    for (Eigen::Index j = 0; j < scan.lambda2_grid.size(); ++j)
      out += format_double(scan.lambda1_grid[i]) + ',' +
             format_double(scan.lambda2_grid[j]) + ',' +
             format_double(scan.log_ml(i, j)) + ',' +
             format_double(scan.mc_se(i, j)) + '\n';
  return out;
}

intervals::CoverageConfig coverage_config_from_json(
    const std::string& json_text) {
  const json j = parse_json(json_text);
  intervals::CoverageConfig c;
  c.n_groups = j.value("groups", c.n_groups);
  c.per_group = j.value("per_group", c.per_group);
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  c.rho = j.value("rho", c.rho);
  c.block = j.value("block", c.block);
  c.replicates = j.value("replicates", c.replicates);
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) {
      const std::string name = v.get<std::string>();
      if (name == "eb")
        c.variants.push_back(intervals::PriorVariant::EB);
      else if (name == "fb")
        c.variants.push_back(intervals::PriorVariant::FB);
      else if (name == "hybrid")
        c.variants.push_back(intervals::PriorVariant::Hybrid);
      else
        throw DomainError("coverage config: unknown variant '" + name + "'");
    }
  }
  c.chain.burn_in = j.value("burn_in", c.chain.burn_in);
  c.chain.keep = j.value("keep", c.chain.keep);
  c.chain.thin = j.value("thin", c.chain.thin);
  c.level = j.value("level", c.level);
  c.extreme_fraction = j.value("extreme_fraction", c.extreme_fraction);
  c.gamma_shape = j.value("gamma_shape", c.gamma_shape);
  c.gamma_rate = j.value("gamma_rate", c.gamma_rate);
  c.lambda0 = j.value("lambda0", c.lambda0);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  return c;
}

std::string coverage_rows_to_csv(const intervals::CoverageResult& result) {
  std::string out = "replicate,variant,kind,q_true,lower,upper,covered\n";
  for (const auto& r : result.rows) {
    out += std::to_string(r.replicate) + ',' + intervals::variant_name(r.variant) +
           ',' + intervals::kind_name(r.kind) + ',' + format_double(r.q_true) +
           ',' + format_double(r.lower) + ',' + format_double(r.upper) + ',' +
           (r.covered ? "1" : "0") + '\n';
  }
  return out;
}

std::string coverage_curves_to_csv(const intervals::CoverageResult& result,
                                   int window) {
  std::string out = "variant,kind,q,coverage\n";
  for (intervals::PriorVariant v :
       {intervals::PriorVariant::EB, intervals::PriorVariant::FB,
        intervals::PriorVariant::Hybrid}) {
    for (intervals::IntervalKind k :
         {intervals::IntervalKind::EqualTail, intervals::IntervalKind::Hpd}) {
      std::vector<std::pair<double, bool>> sorted;
      for (const auto& r : result.rows)
        if (r.variant == v && r.kind == k)
          sorted.emplace_back(r.q_true, r.covered);
      if (sorted.empty()) continue;
      std::sort(sorted.begin(), sorted.end());
      const auto curve = intervals::moving_average_coverage(sorted, window);
      for (const auto& pt : curve)
        out += intervals::variant_name(v) + ',' + intervals::kind_name(k) +
               ',' + format_double(pt.q) + ',' + format_double(pt.coverage) +
               '\n';
    }
  }
  return out;
}

std::string batting_table_csv(int extension, std::uint64_t seed) {
  namespace nm = ebshrink::normal_means;
  const nm::BattingData& data = nm::batting_data();
  const nm::ConvolutionData base = nm::batting_convolution();
  const nm::GaussianPrior prior18 = nm::fit_gaussian_prior(base);
  const Eigen::VectorXd theta18 = nm::posterior_mean(base, prior18);

  RngStream ext_rng(seed, 0xBA77);
  const nm::ExtendedConvolution ext =
      nm::extend_batting(base, data.truth, extension, ext_rng);
  const nm::GaussianPrior prior_ext = nm::fit_gaussian_prior(ext.data);
  const Eigen::VectorXd theta_ext = nm::posterior_mean(ext.data, prior_ext);

  RngStream em_rng(seed, 0xE8);
  const nm::EmFit mix = nm::fit_mixture_prior_em(ext.data, 3, em_rng);
  const Eigen::VectorXd theta_mixt = nm::posterior_mean(ext.data, mix.prior);

  std::string out = "player,b,theta_hat_18,theta_ext,theta_mixt,theta_true\n";
  for (int i = 0; i < 18; ++i) {
    out += std::to_string(i + 1) + ',' + format_double(data.b[i]) + ',' +
           format_double(theta18[i]) + ',' + format_double(theta_ext[i]) +
           ',' + format_double(theta_mixt[i]) + ',' +
           format_double(data.truth[i]) + '\n';
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::string run_all(const std::string& config_json,
                    const std::string& out_dir) {
  const json cfg = parse_json(config_json);
  if (!cfg.contains("experiments") || !cfg.at("experiments").is_array())
    throw DomainError("run_all: config needs an 'experiments' array");

  const std::set<std::string> known = {"emse", "enet-surface", "coverage",
                                       "batting"};
  for (const auto& e : cfg.at("experiments")) {
    const std::string kind = e.value("kind", "");
    if (!known.count(kind))
      throw DomainError("run_all: unknown experiment kind '" + kind + "'");
    if (!e.contains("name")) throw DomainError("run_all: experiment missing name");
  }

  std::filesystem::create_directories(out_dir);
  json manifest;
  manifest["version"] = kVersion;
  manifest["experiments"] = json::array();

  for (const auto& e : cfg.at("experiments")) {
    const std::string kind = e.at("kind").get<std::string>();
    const std::string name = e.at("name").get<std::string>();
    const json sub = e.value("config", json::object());
    json entry;
    entry["name"] = name;
    entry["kind"] = kind;
    entry["seed"] = sub.value("seed", 1);
    entry["outputs"] = json::array();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::vector<std::pair<std::string, std::string>> outputs;  // path, text
      if (kind == "emse") {
        const EmseConfig c = emse_config_from_json(sub.dump());
        outputs.emplace_back(name + ".csv", emse_rows_to_csv(run_emse_sweep(c)));
      } else if (kind == "enet-surface") {
        const enet::GridScanConfig c = enet_config_from_json(sub.dump());
        outputs.emplace_back(name + ".csv",
                             grid_scan_to_csv(enet::grid_scan_experiment(c)));
      } else if (kind == "coverage") {
        const intervals::CoverageConfig c =
            coverage_config_from_json(sub.dump());
        const intervals::CoverageResult result =
            intervals::coverage_experiment(c);
        outputs.emplace_back(name + ".csv", coverage_rows_to_csv(result));
        outputs.emplace_back(
            name + "_curves.csv",
            coverage_curves_to_csv(result, sub.value("window", 200)));
      } else {  // batting
        outputs.emplace_back(
            name + ".csv",
            batting_table_csv(sub.value("extension", 10000),
                              sub.value("seed", 1)));
      }
      for (const auto& [file, text] : outputs) {
        const std::string path = (std::filesystem::path(out_dir) / file).string();
        write_text(path, text);
        json rec;
        rec["path"] = path;
        rec["sha256"] = sha256_hex(text);
        entry["outputs"].push_back(rec);
      }
      entry["status"] = "ok";
    } catch (const std::exception& ex) {
      entry["status"] = "failed";
      entry["error"] = ex.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    entry["wall_seconds"] =
        std::chrono::duration<double>(t1 - t0).count();
    manifest["experiments"].push_back(entry);
  }

  const std::string manifest_text = manifest.dump(2) + "\n";
  write_text((std::filesystem::path(out_dir) / "manifest.json").string(),
             manifest_text);
  return manifest_text;
}

}  // namespace ebshrink::sim
