#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "ebshrink/csv.hpp"
#include "ebshrink/dataset.hpp"
#include "ebshrink/enet.hpp"
#include "ebshrink/errors.hpp"
#include "ebshrink/generators.hpp"
#include "ebshrink/groups.hpp"
#include "ebshrink/normal_means.hpp"
#include "ebshrink/ridge.hpp"
#include "ebshrink/rng.hpp"
#include "ebshrink/sim.hpp"
#include "ebshrink/spike_slab.hpp"
#include "ebshrink/stats.hpp"

namespace {

using ebshrink::Dataset;
using ebshrink::DomainError;
using ebshrink::Family;
using ebshrink::IoError;
using ebshrink::RngStream;
using nlohmann::json;

struct CommonInputs {
  std::string x_path;
  std::string y_path;
  std::string response_column;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  std::string out;
};

std::uint64_t require_seed(const CommonInputs& in) {
  if (!in.seed)
    throw DomainError("--seed is required for stochastic commands");
  return *in.seed;
}

Dataset load(const CommonInputs& in, Family family) {
  if (in.x_path.empty()) throw DomainError("--x is required");
  return ebshrink::load_dataset(in.x_path, in.y_path, in.response_column,
                                family);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

ebshrink::GroupStructure groups_from_options(const std::string& groups_path,
                                             int num_groups, Eigen::Index p) {
  if (!groups_path.empty()) {
    const ebshrink::CsvTable t = ebshrink::read_csv(groups_path);
    if (t.values.cols() != 1)
      throw DomainError("groups file must have a single column of 1-based "
                        "labels");
    if (t.values.rows() != p)
      throw DomainError("groups file must have one row per variable");
    std::vector<int> a(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
      const double g = t.values(j, 0);
      if (g < 1.0 || g != std::floor(g))
        throw DomainError("group labels must be integers >= 1");
      a[static_cast<std::size_t>(j)] = static_cast<int>(g) - 1;
    }
    return ebshrink::GroupStructure(a);
  }
  if (num_groups >= 1)
    return ebshrink::GroupStructure::contiguous(static_cast<int>(p),
                                                num_groups);
  return ebshrink::GroupStructure::single(static_cast<int>(p));
}

void emit(const std::string& out, const std::string& text) {
  if (out.empty())
    std::cout << text;
  else
    write_file(out, text);
}

int run_fit_normal_means(const CommonInputs& in, int k) {
  namespace nm = ebshrink::normal_means;
  const Dataset d = load(in, Family::Binomial);
  const nm::ConvolutionData c = nm::z_scores(d);
  json result;
  if (k <= 1) {
    const nm::GaussianPrior prior = nm::fit_gaussian_prior(c);
    result["prior"] = {{"mu", prior.mu}, {"tau2", prior.tau2}};
    result["theta_hat"] = vector_to_json(nm::posterior_mean(c, prior));
  } else {
    RngStream rng(require_seed(in), 0);
    const nm::EmFit fit = nm::fit_mixture_prior_em(c, k, rng);
    result["prior"] = {{"weights", vector_to_json(fit.prior.weight)},
                       {"mu", vector_to_json(fit.prior.mu)},
                       {"tau2", vector_to_json(fit.prior.tau2)}};
    result["log_marginal"] = fit.log_marginal;
    result["theta_hat"] = vector_to_json(nm::posterior_mean(c, fit.prior));
  }
  emit(in.out, result.dump(2) + "\n");
  return 0;
}

int run_fit_ridge_mml(const CommonInputs& in) {
  const Dataset d = load(in, Family::Gaussian);
  const ebshrink::ridge::MmlFit fit = ebshrink::ridge::direct_mml_ridge(d);
  json result = {{"tau2", fit.tau2},
                 {"sigma2", fit.sigma2},
                 {"lambda", fit.lambda},
                 {"log_ml", fit.log_ml},
                 {"at_bound", fit.at_bound}};
  emit(in.out, result.dump(2) + "\n");
  return 0;
}

int run_fit_group_moment(const CommonInputs& in, const std::string& groups_path,
                         int num_groups, double lambda0, double sigma2,
                         bool binomial) {
  const Dataset d = load(in, binomial ? Family::Binomial : Family::Gaussian);
  const auto groups = groups_from_options(groups_path, num_groups, d.p());
  const Eigen::VectorXd alpha =
      ebshrink::ridge::group_moment_eb(d, groups, lambda0, sigma2);
  json result = {{"alpha_hat", vector_to_json(alpha)},
                 {"multipliers",
                  vector_to_json(ebshrink::ridge::multipliers_from_variances(
                      alpha))},
                 {"lambda0", lambda0}};
  emit(in.out, result.dump(2) + "\n");
  return 0;
}

int run_fit_spike_slab(const CommonInputs& in, const std::string& codata_path,
                       double slab_var, double sigma2, double tolerance,
                       int k_max) {
  namespace ss = ebshrink::spikeslab;
  const Dataset d = load(in, Family::Gaussian);
  ss::SpikeSlabModel model;
  model.slab_variance = slab_var;
  model.noise_variance = sigma2;
  if (codata_path.empty()) {
    model.codata = Eigen::MatrixXd::Ones(d.p(), 1);
  } else {
    model.codata = ebshrink::read_csv(codata_path).values;
  }
  ss::McemSchedule schedule;
  schedule.tolerance = tolerance;
  schedule.max_iterations = k_max;
  RngStream rng(require_seed(in), 0);
  const Eigen::VectorXd alpha0 =
      Eigen::VectorXd::Zero(model.codata.cols());
  const ss::McemResult res = ss::run_mcem(d, model, alpha0, schedule, rng);

  json trace = json::array();
  for (std::size_t k = 0; k < res.trace.alpha.size(); ++k) {
    json step;
    step["alpha"] = vector_to_json(res.trace.alpha[k]);
    if (k > 0) step["samples"] = res.trace.sample_counts[k - 1];
    trace.push_back(step);
  }
  json result = {{"alpha_hat", vector_to_json(res.alpha)},
                 {"converged", res.trace.converged},
                 {"trace", trace},
                 {"posterior_inclusion",
                  vector_to_json(res.final_chain.posterior_inclusion())},
                 {"beta_posterior_mean",
                  vector_to_json(res.final_chain.beta_mean)}};
  emit(in.out, result.dump(2) + "\n");
  return 0;
}

int run_fit_enet(const CommonInputs& in, double lambda1, double lambda2,
                 double sigma2, int burn_in, int keep) {
  namespace enet = ebshrink::enet;
  const Dataset d = load(in, Family::Gaussian);
  enet::EnetHyper hyper;
  hyper.lambda1 = lambda1;
  hyper.lambda2 = lambda2;
  hyper.sigma2 = sigma2;
  enet::ChainConfig cfg;
  cfg.burn_in = burn_in;
  cfg.keep = keep;
  RngStream rng(require_seed(in), 0);
  const enet::EnetChain chain = enet::run_gibbs(d, hyper, cfg, rng);
  const enet::ChibResult chib = enet::chib_log_ml_with_se(chain, hyper, d);
  json result = {{"log_ml", chib.log_ml},
                 {"mc_se", chib.mc_se},
                 {"beta_posterior_mean",
                  vector_to_json(chain.posterior_mean_beta())}};
  emit(in.out, result.dump(2) + "\n");
  return 0;
}

int run_simulate_emse(const CommonInputs& in, const std::string& config_path,
                      bool closed_form_only, bool simulate_only) {
  ebshrink::sim::EmseConfig cfg = ebshrink::sim::emse_config_from_json(
      config_path.empty() ? "{}" : read_file(config_path));
  cfg.seed = require_seed(in);
  if (in.threads > 0) cfg.threads = in.threads;
  if (closed_form_only) cfg.simulate = false;
  if (simulate_only) cfg.closed_form = false;
  const auto rows = ebshrink::sim::run_emse_sweep(cfg);
  emit(in.out, ebshrink::sim::emse_rows_to_csv(rows));
  return 0;
}

int run_simulate_enet_surface(const CommonInputs& in,
                              const std::string& config_path) {
  if (config_path.empty()) throw DomainError("--config is required");
  ebshrink::enet::GridScanConfig cfg =
      ebshrink::sim::enet_config_from_json(read_file(config_path));
  cfg.seed = require_seed(in);
  if (in.threads > 0) cfg.threads = in.threads;
  const auto scan = ebshrink::enet::grid_scan_experiment(cfg);
  emit(in.out, ebshrink::sim::grid_scan_to_csv(scan));
  return 0;
}

int run_simulate_coverage(const CommonInputs& in,
                          const std::string& config_path, int window) {
  if (config_path.empty()) throw DomainError("--config is required");
  if (in.out.empty())
    throw DomainError("--out directory is required for coverage output");
  ebshrink::intervals::CoverageConfig cfg =
      ebshrink::sim::coverage_config_from_json(read_file(config_path));
  cfg.seed = require_seed(in);
  if (in.threads > 0) cfg.threads = in.threads;
  const auto result = ebshrink::intervals::coverage_experiment(cfg);
  std::filesystem::create_directories(in.out);
  write_file((std::filesystem::path(in.out) / "coverage.csv").string(),
             ebshrink::sim::coverage_rows_to_csv(result));
  write_file((std::filesystem::path(in.out) / "coverage_curves.csv").string(),
             ebshrink::sim::coverage_curves_to_csv(result, window));
  std::cout << json({{"tau0", result.tau0},
                     {"rows", result.rows.size()},
                     {"out", in.out}})
                   .dump(2)
            << "\n";
  return 0;
}

int run_simulate_batting(const CommonInputs& in, int extension) {
  const std::string csv =
      ebshrink::sim::batting_table_csv(extension, require_seed(in));
  if (in.out.empty()) {
    std::cout << csv;
  } else {
    std::filesystem::create_directories(in.out);
    write_file((std::filesystem::path(in.out) / "batting.csv").string(), csv);
  }
  return 0;
}

int run_simulate_all(const CommonInputs& in, const std::string& config_path) {
  if (config_path.empty()) throw DomainError("--config is required");
  if (in.out.empty()) throw DomainError("--out directory is required");
  const std::string manifest =
      ebshrink::sim::run_all(read_file(config_path), in.out);
  std::cout << manifest;
  return 0;
}

int run_standardize(const CommonInputs& in) {
  if (in.x_path.empty()) throw DomainError("--x is required");
  if (in.out.empty()) throw DomainError("--out is required");
  const ebshrink::CsvTable t = ebshrink::read_csv(in.x_path);
  Dataset d;
  d.X = t.values;
  d.y = Eigen::VectorXd::Zero(t.values.rows());
  d.standardized.assign(static_cast<std::size_t>(t.values.cols()), false);
  const Dataset s = ebshrink::standardize(d);
  ebshrink::write_csv(in.out, t.header, s.X);
  return 0;
}

int run_seed_check(std::uint64_t seed) {
  // byte-identical draws for equal (seed, stream); distinct streams diverge
  RngStream a(seed, 7);
  RngStream b(seed, 7);
  RngStream c(seed, 8);
  bool identical = true;
  bool distinct = false;
  for (int i = 0; i < 1000; ++i) {
    const double va = a.normal();
    const double vb = b.normal();
    const double vc = c.normal();
    identical = identical && va == vb;
    distinct = distinct || va != vc;
  }
  const json result = {{"seed", seed},
                       {"repeatable", identical},
                       {"streams_independent", distinct}};
  std::cout << result.dump(2) << "\n";
  return identical && distinct ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Empirical-Bayes shrinkage estimators and simulation studies"};
  app.require_subcommand(1);

  CommonInputs in;
  std::uint64_t seed_value = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd, bool with_data) {
    if (with_data) {
      cmd->add_option("--x", in.x_path, "design matrix CSV (header row)");
      cmd->add_option("--y", in.y_path, "response CSV (single column)");
      cmd->add_option("--response", in.response_column,
                      "response column name inside --x");
    }
    cmd->add_option("--seed", seed_value, "random seed")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--threads", in.threads, "worker threads (default: cores)");
    cmd->add_option("--out", in.out, "output file or directory");
  };

  // fit
  CLI::App* fit = app.add_subcommand("fit", "estimate hyper-parameters");
  fit->require_subcommand(1);

  int nm_components = 1;
  CLI::App* fit_nm = fit->add_subcommand(
      "normal-means", "two-group z-scores with a Gaussian or mixture prior");
  add_common(fit_nm, true);
  fit_nm->add_option("--k", nm_components, "mixture components (1 = Gaussian)");

  CLI::App* fit_mml =
      fit->add_subcommand("ridge-mml", "direct marginal-likelihood ridge fit");
  add_common(fit_mml, true);

  std::string groups_path;
  int num_groups = 0;
  double lambda0 = 1.0;
  double sigma2 = 1.0;
  bool binomial = false;
  CLI::App* fit_gm =
      fit->add_subcommand("group-moment", "per-group prior variances");
  add_common(fit_gm, true);
  fit_gm->add_option("--groups", groups_path, "CSV of 1-based group labels");
  fit_gm->add_option("--num-groups", num_groups, "contiguous equal groups");
  fit_gm->add_option("--lambda0", lambda0, "initial ridge penalty");
  fit_gm->add_option("--sigma2", sigma2, "error variance");
  fit_gm->add_flag("--binomial", binomial, "binary response");

  std::string codata_path;
  double slab_var = 1.0;
  double ss_tol = 0.02;
  int ss_kmax = 12;
  CLI::App* fit_ss = fit->add_subcommand(
      "spike-slab", "MCEM for co-data-driven inclusion probabilities");
  add_common(fit_ss, true);
  fit_ss->add_option("--codata", codata_path, "p x s co-data CSV");
  fit_ss->add_option("--slab-var", slab_var, "slab variance");
  fit_ss->add_option("--sigma2", sigma2, "noise variance");
  fit_ss->add_option("--tolerance", ss_tol, "MCEM stopping tolerance");
  fit_ss->add_option("--max-iterations", ss_kmax, "MCEM iteration cap");

  double lambda1 = 1.0, lambda2 = 1.0;
  int burn_in = 2000, keep = 8000;
  CLI::App* fit_enet = fit->add_subcommand(
      "enet", "elastic-net Gibbs sampler and marginal likelihood");
  add_common(fit_enet, true);
  fit_enet->add_option("--lambda1", lambda1, "L1 hyper-parameter");
  fit_enet->add_option("--lambda2", lambda2, "L2 hyper-parameter");
  fit_enet->add_option("--sigma2", sigma2, "error variance (fixed)");
  fit_enet->add_option("--burn-in", burn_in, "burn-in sweeps");
  fit_enet->add_option("--keep", keep, "kept sweeps");

  // simulate
  CLI::App* simulate = app.add_subcommand("simulate", "run simulation studies");
  simulate->require_subcommand(1);

  std::string config_path;
  bool closed_form_only = false, simulate_only = false;
  CLI::App* sim_emse =
      simulate->add_subcommand("emse", "root-EMSE sweep for tau2 estimators");
  add_common(sim_emse, false);
  sim_emse->add_option("--config", config_path, "JSON config");
  sim_emse->add_flag("--closed-form", closed_form_only,
                     "closed forms only, no simulation");
  sim_emse->add_flag("--simulate", simulate_only,
                     "simulation only, no closed forms");

  CLI::App* sim_enet = simulate->add_subcommand(
      "enet-surface", "marginal-likelihood surface over (lambda1, lambda2)");
  add_common(sim_enet, false);
  sim_enet->add_option("--config", config_path, "JSON config")->required();

  int window = 200;
  CLI::App* sim_cov = simulate->add_subcommand(
      "coverage", "posterior-interval coverage study");
  add_common(sim_cov, false);
  sim_cov->add_option("--config", config_path, "JSON config")->required();
  sim_cov->add_option("--window", window, "moving-average window");

  int extension = 10000;
  CLI::App* sim_bat = simulate->add_subcommand(
      "batting", "18-player shrinkage table with a simulated extension");
  add_common(sim_bat, false);
  sim_bat->add_option("--extension", extension, "simulated extra players");

  CLI::App* sim_all = simulate->add_subcommand("all", "declarative experiment list");
  add_common(sim_all, false);
  sim_all->add_option("--config", config_path, "JSON config")->required();

  // utilities
  CLI::App* std_cmd =
      app.add_subcommand("standardize", "center and scale CSV columns");
  add_common(std_cmd, true);

  CLI::App* seed_cmd =
      app.add_subcommand("seed-check", "verify the determinism contract");
  seed_cmd->add_option("--seed", seed_value, "random seed")
      ->each([&](const std::string&) { seed_given = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  if (seed_given) in.seed = seed_value;

  try {
    if (fit_nm->parsed()) return run_fit_normal_means(in, nm_components);
    if (fit_mml->parsed()) return run_fit_ridge_mml(in);
    if (fit_gm->parsed())
      return run_fit_group_moment(in, groups_path, num_groups, lambda0, sigma2,
                                  binomial);
    if (fit_ss->parsed())
      return run_fit_spike_slab(in, codata_path, slab_var, sigma2, ss_tol,
                                ss_kmax);
    if (fit_enet->parsed())
      return run_fit_enet(in, lambda1, lambda2, sigma2, burn_in, keep);
    if (sim_emse->parsed())
      return run_simulate_emse(in, config_path, closed_form_only,
                               simulate_only);
    if (sim_enet->parsed()) return run_simulate_enet_surface(in, config_path);
    if (sim_cov->parsed()) return run_simulate_coverage(in, config_path, window);
    if (sim_bat->parsed()) return run_simulate_batting(in, extension);
    if (sim_all->parsed()) return run_simulate_all(in, config_path);
    if (std_cmd->parsed()) return run_standardize(in);
    if (seed_cmd->parsed()) {
      if (!seed_given) throw DomainError("--seed is required");
      return run_seed_check(seed_value);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
