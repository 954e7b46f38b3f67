#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "hewe/estimator.hpp"
#include "hewe/simulator.hpp"

using namespace hewe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// T on `grid` built from the mean curve alone: delta g / alpha + lambda/sqrt(k) f
std::vector<double> noiseless_t(const ThetaGrid& grid, double alpha, double delta, double rho,
                                double lambda) {
  LimitParams p;
  p.alpha = alpha;
  p.delta = delta;
  p.rho = rho;
  p.lambda = lambda;
  p.k = grid.k();
  return t_transform(mean_curve(grid, p), grid);
}

SearchConfig coarse(std::size_t endpoint, std::size_t theta1) {
  auto c = SearchConfig::for_simulation(endpoint);
  c.theta1_offset = theta1;
  c.alpha_min = 0.1;
  c.alpha_max = 2.0;
  c.alpha_step = 0.1;
  c.delta_max = 3.0;
  c.delta_step = 0.25;
  c.threads = 1;
  return c;
}

OrderedSample pareto_missing(double alpha, std::size_t n, std::size_t removed, std::uint64_t seed) {
  return sample_pareto(alpha, n, seed).remove_top(removed);
}

}  // namespace

TEST_CASE("profile_lambda examples") {
  const auto grid = ThetaGrid::regular(50, 5, 60);
  const auto w = t_variance_weights(grid, 1.0);

  const auto flat = noiseless_t(grid, 0.5, 1.0, -1.0, 0.0);
  CHECK_THAT(profile_lambda(flat, grid, 0.5, 1.0, -1.0, w), WithinAbs(0.0, 1e-10));

  const auto biased = noiseless_t(grid, 0.5, 1.0, -1.0, 2.5);
  CHECK_THAT(profile_lambda(biased, grid, 0.5, 1.0, -1.0, w), WithinRel(2.5, 1e-10));

  // one grid point: lambda = sqrt(k) (t_1 - g_1/alpha) / f_1
  const ThetaGrid one(20, {0.5});
  const std::vector<double> t1{1.1};
  const auto w1 = t_variance_weights(one, 0.3);
  const double f1 = bias_f(one, 0.3, -0.5)[0];
  CHECK_THAT(profile_lambda(t1, one, 2.0, 0.3, -0.5, w1),
             WithinRel(std::sqrt(20.0) * (1.1 - g(0.5, 0.3) / 2.0) / f1, 1e-12));

  const std::vector<double> zeros(grid.size(), 0.0);
  CHECK_THROWS_MATCHES(profile_lambda(flat, grid, 0.5, 1.0, -1.0, zeros), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::BiasDirectionDegenerate;
                       }));
}

TEST_CASE("profile_rho recovers the bias exponent") {
  const auto grid = ThetaGrid::regular(50, 5, 180);
  const auto t = noiseless_t(grid, 0.5, 1.0, -2.0, 3.0);
  const auto fit = profile_rho(t, grid, 0.5, 1.0, SearchConfig{});
  CHECK_THAT(fit.rho, WithinAbs(-2.0, 1e-3));
  CHECK_THAT(fit.lambda, WithinRel(3.0, 1e-3));
}

TEST_CASE("log_likelihood") {
  const auto grid = ThetaGrid::regular(40, 5, 45);
  const double alpha = 1.5, delta = 0.5;
  const auto w = t_variance_weights(grid, delta);
  double sum_log_w = 0.0;
  for (const double x : w) sum_log_w += std::log(x);

  const auto t = noiseless_t(grid, alpha, delta, -1.0, 0.7);
  CHECK_THAT(log_likelihood(t, grid, alpha, delta, -1.0, 0.7),
             WithinRel(static_cast<double>(grid.size()) * std::log(alpha) + 0.5 * sum_log_w, 1e-12));

  // against a product of normal densities with sd 1/(alpha sqrt(k w_i))
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 0.05);
  auto noisy = t;
  for (auto& x : noisy) x += z(rng);
  const auto mean = noiseless_t(grid, alpha, delta, -1.0, 0.7);
  double log_density = 0.0;
  const double kd = static_cast<double>(grid.k());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    boost::math::normal_distribution<double> nd(mean[i], 1.0 / (alpha * std::sqrt(kd * w[i])));
    log_density += std::log(boost::math::pdf(nd, noisy[i]));
  }
  const double s = static_cast<double>(grid.size());
  CHECK_THAT(log_likelihood(noisy, grid, alpha, delta, -1.0, 0.7),
             WithinRel(log_density - 0.5 * s * (std::log(kd) - std::log(2.0 * M_PI)), 1e-10));
}

TEST_CASE("estimate input checks") {
  const auto small = sample_pareto(1.0, 30, 1);
  CHECK_THROWS_MATCHES(estimate(small, 10, SearchConfig::for_simulation(40)), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::InsufficientData; }));
  CHECK_THROWS_AS(estimate(small, 10, SearchConfig::for_simulation(5)), Error);
  auto bad = SearchConfig::for_data(20);
  bad.rho_min = 0.0;
  CHECK_THROWS_AS(estimate(small, 10, bad), Error);
}

TEST_CASE("grid maximum scores at least the generating cell") {
  // Noiseless input is not recovered exactly: s log(alpha) keeps pulling alpha
  // up when the residual is zero. The search must still beat the truth.
  const auto grid = ThetaGrid::regular(50, 5, 180);
  const auto t = noiseless_t(grid, 0.5, 1.0, -1.0, 0.0);
  auto c = SearchConfig::for_simulation(180);
  c.alpha_max = 2.0;
  c.delta_max = 3.0;
  c.delta_step = 0.01;
  const auto r = estimate_from_t(t, grid, c);
  CHECK(r.loglik >= log_likelihood(t, grid, 0.5, 1.0, -1.0, 0.0));
  CHECK(r.cells_failed == 0);
}

TEST_CASE("fast search matches the exhaustive search") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto s = pareto_missing(1.0, 200, 10, seed);
    auto c = coarse(40, 2);
    const auto fast = estimate(s, 20, c);
    c.exhaustive = true;
    const auto slow = estimate(s, 20, c);
    CHECK(fast.alpha_index == slow.alpha_index);
    CHECK(fast.delta_index == slow.delta_index);
    CHECK_THAT(fast.loglik, WithinRel(slow.loglik, 1e-9));
  }
}

TEST_CASE("property: argmax dominates every grid cell") {
  const auto s = pareto_missing(0.8, 200, 15, 9);
  const auto c = coarse(40, 2);
  const auto r = estimate(s, 20, c);
  const auto grid = estimation_grid(20, c);
  const auto t = t_transform(hewe_vector(s, grid, 0.0));
  for (std::size_t i = 0; i < c.delta_count(); ++i) {
    for (std::size_t j = 0; j < c.alpha_count(); ++j) {
      const double a = c.alpha_at(j), d = c.delta_at(i);
      const auto fit = profile_rho(t, grid, a, d, c);
      CHECK(log_likelihood(t, grid, a, d, fit.rho, fit.lambda) <= r.loglik + 1e-9 * std::abs(r.loglik));
    }
  }
}

TEST_CASE("property: lambda is a stationary point") {
  const auto s = pareto_missing(0.5, 300, 20, 12);
  const auto c = coarse(60, 5);
  const auto r = estimate(s, 30, c);
  const auto grid = estimation_grid(30, c);
  const auto t = t_transform(hewe_vector(s, grid, 0.0));
  for (const double eps : {-1e-4, 1e-4}) {
    CHECK(log_likelihood(t, grid, r.alpha_hat, r.delta_hat, r.rho_hat, r.lambda_hat + eps) <=
          r.loglik);
  }
}

TEST_CASE("property: scale invariance") {
  const auto s = pareto_missing(1.2, 200, 10, 5);
  std::vector<double> scaled(s.values().begin(), s.values().end());
  for (auto& v : scaled) v *= 1000.0;
  const auto c = coarse(40, 2);
  const auto a = estimate(s, 20, c);
  const auto b = estimate(OrderedSample::from_values(scaled), 20, c);
  CHECK(std::abs(a.alpha_hat - b.alpha_hat) <= c.alpha_step + 1e-12);
  CHECK(std::abs(a.delta_hat - b.delta_hat) <= c.delta_step + 1e-12);
}

TEST_CASE("sweep uses prefixes of one T vector") {
  const auto s = pareto_missing(1.0, 300, 10, 3);
  const auto c = coarse(0, 2);
  const std::vector<std::size_t> endpoints{30, 45, 60, 1000, 2};
  const auto rows = sweep_endpoints(s, 20, c, endpoints);
  REQUIRE(rows.size() == endpoints.size());
  for (std::size_t i = 0; i < 3; ++i) {
    REQUIRE(rows[i].result.has_value());
    auto ci = c;
    ci.endpoint = endpoints[i];
    const auto direct = estimate(s, 20, ci);
    CHECK(rows[i].result->alpha_hat == direct.alpha_hat);
    CHECK(rows[i].result->delta_hat == direct.delta_hat);
    CHECK(rows[i].result->loglik == direct.loglik);
  }
  CHECK(rows[3].error_code == "InsufficientData");
  CHECK(rows[4].error_code == "InvalidArgument");
}

TEST_CASE("result bookkeeping and boundary flags") {
  const auto s = pareto_missing(0.5, 300, 30, 2);
  auto c = coarse(60, 5);
  c.alpha_max = 0.2;
  const auto r = estimate(s, 30, c);
  CHECK(r.k == 30);
  CHECK(r.endpoint == 60);
  CHECK(r.theta1_offset == 5);
  CHECK(r.s == 56);
  CHECK(r.cells_evaluated == c.alpha_count() * c.delta_count());
  CHECK(r.gamma_hat == 1.0 / r.alpha_hat);
  CHECK(r.missing_hat == r.delta_hat * 30.0);
  CHECK(r.alpha_at_max == (r.alpha_index + 1 == c.alpha_count()));
  CHECK(r.delta_at_min == (r.delta_index == 0));
  CHECK(r.rho_hat <= 0.0);
  CHECK(r.rho_hat >= c.rho_min);
}

TEST_CASE("tie-break prefers smaller alpha then smaller delta") {
  detail::CellBest a{true, -3.0, 4, -1.0, 0};
  detail::CellBest b{true, -3.0, 2, -1.0, 0};
  CHECK(detail::better_cell(b, a));
  CHECK_FALSE(detail::better_cell(a, b));
  CHECK_FALSE(detail::better_cell(a, a));  // equal cells keep the earlier delta
  detail::CellBest failed;
  CHECK(detail::better_cell(a, failed));
  CHECK_FALSE(detail::better_cell(failed, a));
}
