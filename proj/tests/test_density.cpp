#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "specmix/density.hpp"
#include "specmix/rng.hpp"
#include "support/oracles.hpp"

using namespace specmix;

TEST_CASE("standard bivariate normal at the mode") {
  FactorComponent comp;
  comp.tau = 1.0;
  comp.mu = Eigen::VectorXd::Zero(2);
  comp.lambda = Eigen::MatrixXd::Zero(2, 1);
  comp.psi = Eigen::VectorXd::Ones(2);
  const double v = log_density_lowrank(Eigen::VectorXd::Zero(2), comp);
  REQUIRE_THAT(v, Catch::Matchers::WithinAbs(-std::log(2.0 * M_PI), 1e-12));
}

TEST_CASE("value at the mean is the maximum and has no quadratic term") {
  Rng rng(5);
  const FactorComponent comp = oracles::random_component(rng, 8, 2);
  const ComponentDensity dens(comp);
  const double at_mean = dens(comp.mu);
  const double expected =
      -0.5 * (8 * std::log(2.0 * M_PI) + dens.log_det_sigma());
  REQUIRE_THAT(at_mean, Catch::Matchers::WithinAbs(expected, 1e-12));
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = comp.mu;
    for (int i = 0; i < 8; ++i) x[i] += rng.normal();
    REQUIRE(dens(x) <= at_mean);
  }
}

TEST_CASE("low-rank path matches the dense oracle over random instances") {
  Rng rng(42);
  double max_density_err = 0.0, max_logdet_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = 2 + static_cast<int>(rng.index(19));  // <= 20
    const int q = 1 + static_cast<int>(rng.index(std::min(3, p - 1)));
    const FactorComponent comp = oracles::random_component(rng, p, q);
    const ComponentDensity dens(comp);
    Eigen::VectorXd x(p);
    for (int i = 0; i < p; ++i) x[i] = rng.normal(0.0, 3.0);
    max_density_err = std::max(
        max_density_err, std::abs(dens(x) - oracles::dense_log_density(x, comp)));
    max_logdet_err = std::max(
        max_logdet_err,
        std::abs(dens.log_det_sigma() - oracles::dense_log_det_sigma(comp)));
  }
  REQUIRE(max_density_err < 1e-8);
  REQUIRE(max_logdet_err < 1e-8);
}

TEST_CASE("batch rows agree with the scalar path") {
  Rng rng(9);
  const FactorComponent comp = oracles::random_component(rng, 6, 2);
  Eigen::MatrixXd X(5, 6);
  for (int i = 0; i < X.size(); ++i) X(i / 6, i % 6) = rng.normal();
  const ComponentDensity dens(comp);
  const Eigen::VectorXd batch = dens.rows(X);
  for (int i = 0; i < 5; ++i)
    REQUIRE_THAT(batch[i],
                 Catch::Matchers::WithinAbs(dens(X.row(i).transpose()), 1e-12));
}

TEST_CASE("non-finite input and degenerate psi are errors") {
  Rng rng(3);
  FactorComponent comp = oracles::random_component(rng, 4, 1);
  Eigen::VectorXd bad = Eigen::VectorXd::Zero(4);
  bad[2] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(log_density_lowrank(bad, comp), NumericalError);
  comp.psi[1] = 0.0;
  REQUIRE_THROWS_AS(log_density_lowrank(Eigen::VectorXd::Zero(4), comp),
                    NumericalError);
}
