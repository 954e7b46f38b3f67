#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "hewe/simulator.hpp"

using namespace hewe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// empirical P(X > x) within 4 binomial standard errors
void check_survival(const OrderedSample& s, double x, double expected) {
  const double n = static_cast<double>(s.size());
  double above = 0.0;
  for (const double v : s.values()) above += v > x;
  const double se = std::sqrt(expected * (1.0 - expected) / n);
  INFO("x = " << x);
  CHECK(std::abs(above / n - expected) < 4.0 * se);
}

LimitParams params(double alpha, double delta, double rho, double lambda, std::size_t k) {
  LimitParams p;
  p.alpha = alpha;
  p.delta = delta;
  p.rho = rho;
  p.lambda = lambda;
  p.k = k;
  return p;
}

ExperimentConfig small_experiment() {
  ExperimentConfig c;
  c.distribution = Distribution::parse("pareto(1)");
  c.n = 200;
  c.k = 20;
  c.delta_true = 0.5;
  c.replicates = 4;
  c.endpoints = {30, 40};
  c.seed = 17;
  c.search.theta1_offset = 2;
  c.search.alpha_min = 0.1;
  c.search.alpha_max = 2.0;
  c.search.alpha_step = 0.1;
  c.search.delta_max = 2.0;
  c.search.delta_step = 0.25;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("samplers have the right tails") {
  const std::size_t n = 100000;
  const auto pareto = sample_pareto(0.5, n, 1);
  CHECK(pareto.values().back() >= 1.0);
  for (const double x : {2.0, 10.0, 400.0}) check_survival(pareto, x, std::pow(x, -0.5));

  const auto cauchy = sample_cauchy(n, 2);
  CHECK(cauchy.values().back() > 0.0);
  for (const double x : {0.5, 1.0, 20.0}) {
    check_survival(cauchy, x, 1.0 - 2.0 / std::numbers::pi * std::atan(x));
  }

  const auto t = sample_student_t(2.5, n, 3);
  const boost::math::students_t dist(2.5);
  for (const double x : {0.3, 1.5, 6.0}) check_survival(t, x, 2.0 * boost::math::cdf(complement(dist, x)));

  const auto e = sample_exponential(n, 4);
  for (const double x : {0.1, 1.0, 4.0}) check_survival(e, x, std::exp(-x));
}

TEST_CASE("distribution names") {
  CHECK(Distribution::parse("pareto(2)").alpha() == 2.0);
  CHECK(Distribution::parse("cauchy").alpha() == 1.0);
  CHECK(Distribution::parse("student_t(3)").gamma() == Catch::Approx(1.0 / 3.0));
  CHECK(std::isinf(Distribution::parse("exponential").alpha()));
  CHECK(Distribution::parse("exponential").gamma() == 0.0);
  CHECK_THROWS_AS(Distribution::parse("lognormal"), Error);
  CHECK_THROWS_AS(Distribution::parse("student_t"), Error);
  CHECK_THROWS_AS(Distribution::parse("pareto(1"), Error);
}

TEST_CASE("seeded draws repeat") {
  const auto a = sample_pareto(1.0, 50, 99);
  const auto b = sample_pareto(1.0, 50, 99);
  const auto c = sample_pareto(1.0, 50, 100);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  auto r1 = make_rng(5, 0), r2 = make_rng(5, 1);
  CHECK(r1() != r2());
}

TEST_CASE("zero noise gives the mean curve") {
  const auto grid = ThetaGrid::regular(50, 5, 100);
  const auto zero = [](std::size_t) { return 0.0; };

  const auto p = params(0.7, 1.2, -1.0, 0.0, 50);
  const auto path = limit_path(grid, p, 0.0, 1000, zero);
  const auto mean = mean_curve(grid, p);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(path[i] == mean[i]);

  const auto pb = params(0.7, 1.2, -1.0, 2.0, 50);
  const auto biased = limit_path(grid, pb, 2.0 / std::sqrt(50.0), 1000, zero);
  const auto mb = mean_curve(grid, pb);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK_THAT(biased[i], WithinAbs(mb[i], 1e-14));
}

TEST_CASE("limit path mesh refinement") {
  const auto grid = ThetaGrid::regular(50, 5, 100);
  const auto p = params(1.0, 1.0, -1.0, 0.0, 50);
  const auto coarse = simulate_limit_path(grid, p, 0.0, 1000, 8);
  const auto fine = simulate_limit_path(grid, p, 0.0, 10000, 8);
  double sq = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sq += (coarse[i] - fine[i]) * (coarse[i] - fine[i]);
  const double rms = std::sqrt(sq / static_cast<double>(grid.size()));
  const double span = grid[grid.size() - 1] - grid[0];
  CHECK(rms < 0.05 / (p.alpha * std::sqrt(50.0)) * span);

  CHECK_THROWS_AS(simulate_limit_path(grid, p, 0.0, 999, 8), Error);
  CHECK(simulate_limit_path(grid, p, 0.0, 1000, 8) == coarse);
}

TEST_CASE("summary statistics") {
  const auto s = summarize({1.0, 2.0, 4.0, 7.0}, 3.0);
  CHECK(s.mean == 3.5);
  CHECK(s.median == 3.0);
  CHECK(s.bias == 0.5);
  CHECK_THAT(s.rmse * s.rmse, WithinAbs(s.bias * s.bias + s.variance, 1e-10));
  CHECK(std::isnan(summarize({}, 1.0).mean));
}

TEST_CASE("experiment is deterministic and decomposes its error") {
  const auto c = small_experiment();
  const auto a = run_experiment(c);
  const auto b = run_experiment(c);
  REQUIRE(a.endpoints.size() == 2);
  REQUIRE(a.estimates.size() == 8);
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    CHECK(a.estimates[i].result.alpha_hat == b.estimates[i].result.alpha_hat);
    CHECK(a.estimates[i].result.delta_hat == b.estimates[i].result.delta_hat);
  }
  for (const auto& e : a.endpoints) {
    CHECK(e.ok + e.failed == c.replicates);
    CHECK_THAT(e.missing.rmse * e.missing.rmse,
               WithinAbs(e.missing.bias * e.missing.bias + e.missing.variance, 1e-10));
    CHECK_THAT(e.alpha.rmse * e.alpha.rmse,
               WithinAbs(e.alpha.bias * e.alpha.bias + e.alpha.variance, 1e-10));
  }
}

TEST_CASE("one replicate equals a direct sweep") {
  auto c = small_experiment();
  c.replicates = 1;
  const auto report = run_experiment(c);
  auto rng = make_rng(c.seed, 0);
  const auto sample = c.distribution.draw(c.n, rng).remove_top(c.removed());
  const auto rows = sweep_endpoints(sample, c.k, c.search, c.endpoints);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    REQUIRE(rows[e].result.has_value());
    CHECK(report.estimates[e].result.alpha_hat == rows[e].result->alpha_hat);
    CHECK(report.estimates[e].result.missing_hat == rows[e].result->missing_hat);
    CHECK(report.endpoints[e].missing.mean == rows[e].result->missing_hat);
  }
}

TEST_CASE("exponential experiment reports no alpha error") {
  auto c = small_experiment();
  c.distribution = Distribution::parse("exponential");
  c.replicates = 2;
  const auto report = run_experiment(c);
  CHECK(std::isnan(report.endpoints[0].alpha.rmse));
  CHECK(std::isfinite(report.endpoints[0].gamma.rmse));
}

TEST_CASE("experiment config parser") {
  std::istringstream in(
      "# comment\n"
      "distribution = student_t(2.5)\n"
      "n = 300\nk = 30  # trailing\n"
      "delta = 0.5\nreplicates = 7\nendpoints = 40:60:10\nseed = 3\n"
      "theta1 = 2\nalpha_range = 0.1:3:0.05\ndelta_range = 0:4\nrho_min = -5\n");
  const auto c = parse_experiment_config(in);
  CHECK(c.distribution.kind == Distribution::Kind::StudentT);
  CHECK(c.n == 300);
  CHECK(c.k == 30);
  CHECK(c.removed() == 15);
  CHECK(c.replicates == 7);
  CHECK(c.endpoints == std::vector<std::size_t>{40, 50, 60});
  CHECK(c.search.theta1_offset == 2);
  CHECK(c.search.alpha_step == 0.05);
  CHECK(c.search.delta_max == 4.0);
  CHECK(c.search.rho_min == -5.0);

  const auto parse = [](const char* text) {
    std::istringstream s(text);
    return parse_experiment_config(s);
  };
  CHECK_THROWS_AS(parse("bogus = 1\nendpoints = 10\n"), Error);
  CHECK_THROWS_AS(parse("n = -3\nendpoints = 10\n"), Error);
  CHECK_THROWS_AS(parse("n = 10\nk = 10\ndelta = 1\nendpoints = 5\n"), Error);  // removes everything
  CHECK_THROWS_AS(parse("k = 10\n"), Error);                                     // no endpoints
  CHECK_THROWS_AS(parse("n 10\n"), Error);
}
