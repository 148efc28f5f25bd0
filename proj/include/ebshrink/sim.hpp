#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ebshrink/intervals.hpp"

namespace ebshrink::sim {

inline constexpr const char* kVersion = "0.1.0";

// Root expected-MSE sweep over (p, tau2, covariance) cells. Every estimator
// is evaluated on the same replicate draws within a cell.
struct SigmaSpec {
  double rho = 0.0;
  int b = 1;
};

struct EmseConfig {
  int n = 100;
  std::vector<int> p_grid = {100};
  std::vector<double> tau2_grid = {0.01};
  std::vector<SigmaSpec> sigma_grid = {{0.0, 1}};
  int replicates = 100;
  double lambda0 = 1.0;
  double sigma2 = 1.0;
  bool closed_form = true;
  bool simulate = true;
  std::vector<std::string> estimators = {"tau2_ols", "tau2_bias"};
  int cv_folds = 10;
  std::uint64_t seed = 1;
  int threads = 0;
};

struct EmseRow {
  int n = 0;
  int p = 0;
  double tau2 = 0.0;
  double rho = 0.0;
  int b = 1;
  std::string method;
  double root_emse = 0.0;
  double mc_se = 0.0;
  int replicates = 0;
};

std::vector<EmseRow> run_emse_sweep(const EmseConfig& config);
std::string emse_rows_to_csv(const std::vector<EmseRow>& rows);

EmseConfig emse_config_from_json(const std::string& json_text);

// Elastic-net marginal-likelihood surface (CSV: lambda1,lambda2,log_ml,mc_se).
enet::GridScanConfig enet_config_from_json(const std::string& json_text);
std::string grid_scan_to_csv(const enet::GridScan& scan);

// Coverage study CSVs: per-test-point rows and moving-average curves.
intervals::CoverageConfig coverage_config_from_json(const std::string& json_text);
std::string coverage_rows_to_csv(const intervals::CoverageResult& result);
std::string coverage_curves_to_csv(const intervals::CoverageResult& result,
                                   int window);

// Batting replication table (CSV: player,b,theta_hat_18,theta_ext,
// theta_mixt,theta_true) at the given extension size.
std::string batting_table_csv(int extension, std::uint64_t seed);

// Declarative multi-experiment runner. The config lists experiments
// ({"kind": "emse" | "enet-surface" | "coverage" | "batting", "name": ...,
// "config": {...}}); outputs land under out_dir and the returned manifest
// JSON records seeds, wall times, content hashes, and per-experiment status.
std::string run_all(const std::string& config_json, const std::string& out_dir);

}  // namespace ebshrink::sim
