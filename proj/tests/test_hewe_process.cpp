#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "hewe/hewe_process.hpp"

using namespace hewe;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const OrderedSample& e_powers() {
  static const auto s = OrderedSample::from_values({std::exp(3.0), std::exp(2.0), std::exp(1.0), 1.0});
  return s;
}

OrderedSample random_sample(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(1.0 - u(rng), -1.5);
  return OrderedSample::from_values(std::move(x));
}

}  // namespace

TEST_CASE("hewe hand evaluations") {
  CHECK_THAT(hewe::hewe(e_powers(), 2, 1.0, 0.0), WithinAbs(1.5, 1e-14));
  CHECK_THAT(hewe::hewe(e_powers(), 2, 1.0, 0.5), WithinAbs(1.5, 1e-14));
  CHECK(hewe::hewe(e_powers(), 2, 0.4, 0.0) == 0.0);
}

TEST_CASE("hewe needs the subtracted order statistic") {
  CHECK_THROWS_MATCHES(hewe::hewe(e_powers(), 2, 2.0, 0.0), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == ErrorCode::InsufficientData; }));
  CHECK_NOTHROW(hewe::hewe(e_powers(), 3, 1.0, 0.0));  // d + m + 1 = 4 = n
}

TEST_CASE("floor guard hits integer products") {
  // 0.3 * 10 is 2.9999999999999996 in binary floating point
  CHECK(floor_count(0.3 * 10) == 3);
  CHECK(floor_count(0.7 * 100) == 70);
  CHECK(floor_count(2.5) == 2);
}

TEST_CASE("hill curve") {
  const auto curve = hill_curve(e_powers(), 3);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].first == 1);
  CHECK_THAT(curve[0].second, WithinAbs(1.0, 1e-14));
  CHECK_THAT(curve[1].second, WithinAbs(1.5, 1e-14));

  const auto flat = hill_curve(OrderedSample::from_values({4, 4, 4}), 2);
  for (const auto& [k, h] : flat) CHECK(h == 0.0);

  CHECK_THROWS_AS(hill_curve(e_powers(), 0), Error);
  CHECK_THROWS_AS(hill_curve(e_powers(), 4), Error);
}

TEST_CASE("theta grid") {
  const auto grid = ThetaGrid::regular(50, 5, 180);
  CHECK(grid.size() == 176);
  CHECK_THAT(grid[0], WithinAbs(0.1, 1e-15));
  CHECK_THAT(grid[175], WithinAbs(3.6, 1e-15));
  CHECK(grid.ratio(0) == 0.0);
  CHECK(grid.max_rank() == 181);

  CHECK_THROWS_AS(ThetaGrid(10, {0.05, 0.2}), Error);   // theta_1 < 1/k
  CHECK_THROWS_AS(ThetaGrid(10, {0.3, 0.2}), Error);    // not increasing
  CHECK_THROWS_AS(ThetaGrid(10, {}), Error);
}

TEST_CASE("hewe_vector") {
  std::mt19937_64 rng(3);
  const auto s = random_sample(rng, 200);
  const ThetaGrid one(10, {1.3});
  CHECK(hewe_vector(s, one, 0.4).h[0] == hewe::hewe(s, 10, 1.3, 0.4));

  const auto grid = ThetaGrid::regular(20, 1, 60);
  const auto hv = hewe_vector(s, grid, 0.0);
  const auto hill = hill_curve(s, 60);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(hv.h[i] == hill[i].second);
}

TEST_CASE("t_transform") {
  const ThetaGrid grid(1, {1, 2, 3});
  const std::vector<double> h{1, 1, 1};
  const auto t = t_transform(h, grid);
  CHECK_THAT(t[0], WithinAbs(1.0, 1e-15));
  CHECK_THAT(t[1], WithinAbs(0.5, 1e-15));
  CHECK_THAT(t[2], WithinAbs(1.0 / 3.0, 1e-15));

  const auto back = inverse_t_transform(t, grid);
  for (const double x : back) CHECK_THAT(x, WithinAbs(1.0, 1e-15));

  const std::vector<double> zero(3, 0.0);
  CHECK(inverse_t_transform(zero, grid) == zero);

  const ThetaGrid single(4, {0.5});
  const std::vector<double> h1{0.7};
  CHECK(t_transform(h1, single)[0] == 0.7);
}

TEST_CASE("property: hill curve equals hewe with theta = 1, delta = 0") {
  std::mt19937_64 rng(5);
  const auto s = random_sample(rng, 300);
  const auto curve = hill_curve(s, 299);
  for (const auto& [k, h] : curve) CHECK(h == hewe::hewe(s, k, 1.0, 0.0));
}

TEST_CASE("property: shift-rank identity") {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = random_sample(rng, 400);
    const std::size_t k = 10 + static_cast<std::size_t>(rep) * 3;
    for (const double delta : {0.0, 0.25, 1.0, 2.0}) {
      for (const double theta : {0.1, 0.5, 1.0, 2.5}) {
        const auto d = floor_count(delta * static_cast<double>(k));
        const auto m = floor_count(theta * static_cast<double>(k));
        if (d + m + 1 > s.size()) continue;
        CHECK(hewe::hewe(s, k, theta, delta) == hewe::hewe(remove_top(s, d), k, theta, 0.0));
      }
    }
  }
}

TEST_CASE("property: scale invariance") {
  std::mt19937_64 rng(8);
  const auto s = random_sample(rng, 150);
  std::vector<double> scaled(s.values().begin(), s.values().end());
  for (auto& v : scaled) v *= 37.5;
  const auto t = OrderedSample::from_values(scaled);
  for (const double delta : {0.0, 0.5, 1.5}) {
    for (const double theta : {0.2, 1.0, 3.0}) {
      CHECK_THAT(hewe::hewe(t, 20, theta, delta), WithinAbs(hewe::hewe(s, 20, theta, delta), 1e-12));
    }
  }
}

TEST_CASE("property: T round-trip") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t s = 1 + static_cast<std::size_t>(rep % 40);
    const auto grid = ThetaGrid::regular(10, 1 + static_cast<std::size_t>(rep % 5), s + static_cast<std::size_t>(rep % 5));
    std::vector<double> h(grid.size());
    for (auto& x : h) x = u(rng);
    const auto back = inverse_t_transform(t_transform(h, grid), grid);
    for (std::size_t i = 0; i < h.size(); ++i) {
      CHECK_THAT(back[i], WithinAbs(h[i], 1e-12 * std::max(1.0, std::abs(h[i]))));
    }
  }
}

TEST_CASE("property: hewe is non-negative") {
  std::mt19937_64 rng(10);
  const auto s = random_sample(rng, 100);
  const auto grid = ThetaGrid::regular(10, 1, 40);
  for (const double delta : {0.0, 1.0, 5.0}) {
    for (const double h : hewe_vector(s, grid, delta).h) CHECK(h >= 0.0);
  }
}
