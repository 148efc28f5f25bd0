#include <doctest.h>

#include <cmath>

#include "ebshrink/covariance.hpp"
#include "ebshrink/csv.hpp"
#include "ebshrink/dataset.hpp"
#include "ebshrink/errors.hpp"
#include "ebshrink/generators.hpp"
#include "ebshrink/groups.hpp"
#include "ebshrink/parallel.hpp"
#include "ebshrink/rng.hpp"
#include "ebshrink/stats.hpp"

using namespace ebshrink;

TEST_CASE("standardize centers and scales with the population convention") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  Dataset d = make_dataset(X, Eigen::VectorXd::Zero(3), Family::Gaussian);
  const Dataset s = standardize(d);
  // population sd of (1,2,3) is sqrt(2/3)
  const double sd = std::sqrt(2.0 / 3.0);
  CHECK(s.X(0, 0) == doctest::Approx(-1.0 / sd));
  CHECK(s.X(1, 0) == doctest::Approx(0.0));
  CHECK(s.X(2, 0) == doctest::Approx(1.0 / sd));
  CHECK(std::abs(s.X.col(0).mean()) < 1e-14);
  CHECK((s.X.col(0).array() - s.X.col(0).mean()).square().mean() ==
        doctest::Approx(1.0));
  CHECK(s.center[0] == doctest::Approx(2.0));
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("standardize is idempotent to 1e-12") {
  RngStream rng(11, 0);
  Eigen::MatrixXd X(50, 4);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) X(i, j) = 3.0 * rng.normal() + j;
  Dataset d = make_dataset(X, Eigen::VectorXd::Zero(50), Family::Gaussian);
  const Dataset once = standardize(d);
  const Dataset twice = standardize(once);
  CHECK((once.X - twice.X).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("standardize rejects a constant column naming its index") {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 2, 0, 3, 0, 4, 0;
  Dataset d = make_dataset(X, Eigen::VectorXd::Zero(4), Family::Gaussian);
  CHECK_THROWS_WITH_AS(standardize(d),
                       doctest::Contains("ConstantColumn: column 1"),
                       DomainError);
}

TEST_CASE("binary responses outside {0,1} are rejected") {
  Eigen::MatrixXd X(2, 1);
  X << 1, 2;
  Eigen::VectorXd y(2);
  y << 0, 2;
  CHECK_THROWS_AS(make_dataset(X, y, Family::Binomial), DomainError);
}

TEST_CASE("identical (seed, stream) reproduces draws; streams differ") {
  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool same = true, diff = false;
  for (int i = 0; i < 2000; ++i) {
    const double va = a.normal();
    same = same && va == b.normal();
    diff = diff || va != c.normal();
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("gamma sampler matches mean and variance") {
  RngStream rng(7, 0);
  const double shape = 3.5, rate = 2.0;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gamma(shape, rate);
    sum += g;
    sum2 += g * g;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(mean == doctest::Approx(shape / rate).epsilon(0.01));
  CHECK(var == doctest::Approx(shape / (rate * rate)).epsilon(0.03));
}

TEST_CASE("inverse Gaussian sampler matches known moments") {
  RngStream rng(19, 0);
  const double mu = 2.0, lambda = 3.0;
  const int n = 1000000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.inverse_gaussian(mu, lambda);
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double sd_mean = std::sqrt(var / n);
  CHECK(std::abs(mean - mu) < 4.0 * sd_mean);
  CHECK(var == doctest::Approx(mu * mu * mu / lambda).epsilon(0.02));
}

TEST_CASE("block covariance invariants and precision entries") {
  const BlockCovariance cov(6, 3, 0.5);
  const Eigen::MatrixXd sigma = cov.dense();
  CHECK(sigma.diagonal().isOnes());
  CHECK(sigma(0, 1) == 0.5);
  CHECK(sigma(0, 3) == 0.0);
  const Eigen::MatrixXd psi = cov.precision();
  CHECK((sigma * psi - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK_THROWS_AS(BlockCovariance(6, 4, 0.5), DomainError);
  CHECK_THROWS_WITH_AS(BlockCovariance(6, 3, 1.0),
                       doctest::Contains("NotPositiveDefinite"), DomainError);
}

TEST_CASE("sample_design: rho=0 and b=1 consume the stream identically") {
  RngStream r1(5, 1), r2(5, 1);
  const Eigen::MatrixXd a = sample_design(7, BlockCovariance(6, 3, 0.0), r1);
  const Eigen::MatrixXd b = sample_design(7, BlockCovariance(6, 1, 0.0), r2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sample_design covariance approaches the target") {
  const int n = 100000;
  SUBCASE("identity") {
    RngStream rng(9, 0);
    const Eigen::MatrixXd X = sample_design(n, BlockCovariance(4, 1, 0.0), rng);
    const Eigen::MatrixXd S = X.transpose() * X / double(n);
    CHECK((S - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 0.02);
  }
  SUBCASE("single block, rho 0.8") {
    RngStream rng(10, 0);
    const Eigen::MatrixXd X = sample_design(n, BlockCovariance(4, 4, 0.8), rng);
    const Eigen::MatrixXd S = X.transpose() * X / double(n);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) CHECK(S(i, j) == doctest::Approx(0.8).epsilon(0.025));
  }
}

TEST_CASE("sample_design with n=0 returns an empty matrix") {
  RngStream rng(1, 0);
  const Eigen::MatrixXd X = sample_design(0, BlockCovariance(3, 1, 0.0), rng);
  CHECK(X.rows() == 0);
  CHECK(X.cols() == 3);
}

TEST_CASE("sample_coefficients honors per-group variances") {
  SUBCASE("all zero variances give the zero vector") {
    RngStream rng(2, 0);
    const auto g = GroupStructure::contiguous(10, 2);
    const Eigen::VectorXd beta =
        sample_coefficients(g, Eigen::VectorXd::Zero(2), rng);
    CHECK(beta.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single group variance recovered by Monte Carlo") {
    RngStream rng(3, 0);
    const auto g = GroupStructure::single(100000);
    const Eigen::VectorXd beta =
        sample_coefficients(g, Eigen::VectorXd::Constant(1, 0.04), rng);
    CHECK(sample_variance(beta) == doctest::Approx(0.04).epsilon(0.05));
  }
  SUBCASE("halving ladder gives 1:1/4:...:1/256 variance ratios") {
    RngStream rng(4, 0);
    const int per = 40000, G = 5;
    const auto g = GroupStructure::contiguous(per * G, G);
    Eigen::VectorXd tau2(G);
    for (int k = 0; k < G; ++k) tau2[k] = std::pow(2.0, -2.0 * k);
    const Eigen::VectorXd beta = sample_coefficients(g, tau2, rng);
    for (int k = 0; k < G; ++k) {
      const Eigen::VectorXd seg = beta.segment(k * per, per);
      CHECK(sample_variance(seg) ==
            doctest::Approx(std::pow(4.0, -k)).epsilon(0.06));
    }
  }
}

TEST_CASE("generate_response families") {
  RngStream rng(6, 0);
  Eigen::MatrixXd X = sample_design(20000, BlockCovariance(3, 1, 0.0), rng);
  const Eigen::VectorXd beta = Eigen::VectorXd::Zero(3);
  SUBCASE("pure noise variance") {
    RngStream r(6, 1);
    const Eigen::VectorXd y = generate_response(X, beta, Family::Gaussian, 1.0, r);
    CHECK(sample_variance(y) == doctest::Approx(1.0).epsilon(0.05));
  }
  SUBCASE("null binary mean one half") {
    RngStream r(6, 2);
    const Eigen::VectorXd y = generate_response(X, beta, Family::Binomial, 0.0, r);
    CHECK(y.mean() == doctest::Approx(0.5).epsilon(0.03));
  }
  SUBCASE("fixed seed reproduces bit-identical output") {
    RngStream r1(6, 3), r2(6, 3);
    const Eigen::VectorXd y1 = generate_response(X, beta, Family::Gaussian, 2.0, r1);
    const Eigen::VectorXd y2 = generate_response(X, beta, Family::Gaussian, 2.0, r2);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("group structure validation") {
  CHECK_THROWS_AS(GroupStructure({0, 2}), DomainError);  // group 1 empty
  const auto g = GroupStructure::contiguous(6, 3);
  CHECK(g.groups() == 3);
  CHECK(g.size_of(1) == 2);
  CHECK(g.group_of(5) == 2);
}

TEST_CASE("csv round trip and error reporting") {
  const std::string text = "a,b\n1,2\n3,4.5\n";
  const CsvTable t = parse_csv(text, "inline");
  CHECK(t.header.size() == 2);
  CHECK(t.values(1, 1) == 4.5);
  CHECK(format_csv(t.header, t.values) == text);
  CHECK_THROWS_AS(parse_csv("a,b\n1,\n", "inline"), DomainError);
  CHECK_THROWS_AS(parse_csv("a,b\n1,x\n", "inline"), DomainError);
  CHECK_THROWS_AS(parse_csv("a,b\n1\n", "inline"), DomainError);
}

TEST_CASE("parallel_for matches serial execution and propagates errors") {
  std::vector<double> serial(100), parallel(100);
  auto fill = [](std::vector<double>& out) {
    return [&out](std::size_t i) {
      RngStream rng(123, i);
      out[i] = rng.normal();
    };
  };
  parallel_for(100, 1, fill(serial));
  parallel_for(100, 4, fill(parallel));
  CHECK(serial == parallel);
  CHECK_THROWS_AS(
      parallel_for(10, 4,
                   [](std::size_t i) {
                     if (i == 5) throw DomainError("boom");
                   }),
      DomainError);
}

TEST_CASE("quantile type 7 matches linear interpolation") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 4.0);
  CHECK(quantile(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
}
