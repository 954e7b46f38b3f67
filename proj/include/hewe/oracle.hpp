#pragma once

// Reference values built only from the exponential-spacings representation
// of Pareto order statistics and from raw quadrature. Nothing here calls into
// limit_model.hpp, so the two can check each other.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hewe/error.hpp"

namespace hewe::oracle {

struct OracleTolerance {
  double rel_tol = 1e-8;
  double mc_se_mult = 3.0;

  void validate() const {
    if (!(rel_tol > 0.0)) fail(ErrorCode::InvalidArgument, "rel_tol must be > 0");
    if (!(mc_se_mult >= 2.0)) fail(ErrorCode::InvalidArgument, "mc_se_mult must be >= 2");
  }
};

namespace detail {

struct Ranks {
  std::size_t d;
  std::size_t m;
};

inline Ranks ranks(std::size_t k, double theta, double delta) {
  const double kd = static_cast<double>(k);
  const auto fl = [](double x) { return static_cast<std::size_t>(std::floor(x + 1e-9 * x)); };
  const Ranks r{fl(delta * kd), fl(theta * kd)};
  if (r.m < 1) fail(ErrorCode::InvalidArgument, "floor(theta k) must be >= 1");
  return r;
}

}  // namespace detail

/// E[H_{k,n}(theta; delta)] for iid Pareto(alpha) data:
/// (1/(alpha m)) sum_{j=d+1}^{d+m} (1 - d/j).
inline double pareto_hewe_mean_exact(double alpha, std::size_t k, double theta, double delta) {
  const auto [d, m] = detail::ranks(k, theta, delta);
  double sum = 0.0;
  for (std::size_t j = d + 1; j <= d + m; ++j) {
    sum += 1.0 - static_cast<double>(d) / static_cast<double>(j);
  }
  return sum / (alpha * static_cast<double>(m));
}

/// Var[H_{k,n}(theta; delta)] for iid Pareto(alpha) data:
/// (1/(alpha^2 m^2)) sum_{j=d+1}^{d+m} (1 - d/j)^2.
inline double pareto_hewe_var_exact(double alpha, std::size_t k, double theta, double delta) {
  const auto [d, m] = detail::ranks(k, theta, delta);
  double sum = 0.0;
  for (std::size_t j = d + 1; j <= d + m; ++j) {
    const double c = 1.0 - static_cast<double>(d) / static_cast<double>(j);
    sum += c * c;
  }
  const double md = static_cast<double>(m);
  return sum / (alpha * alpha * md * md);
}

/// (1/(theta1 theta2)) * integral_delta^{delta + min(theta1, theta2)} (1 - delta/x)^2 dx
/// by adaptive Gauss-Kronrod quadrature.
inline double cov_numeric(double theta1, double theta2, double delta) {
  if (!(theta1 > 0.0) || !(theta2 > 0.0) || !(delta >= 0.0)) {
    fail(ErrorCode::DomainError, "cov_numeric needs theta > 0 and delta >= 0");
  }
  const double lo = std::min(theta1, theta2);
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned kDepth = 15;
  constexpr double kTol = 1e-12;
  double integral = 0.0;
  if (delta == 0.0) {
    integral = Rule::integrate([](double) { return 1.0; }, 0.0, lo, kDepth, kTol);
  } else {
    // x = delta e^u flattens the boundary layer at x = delta when delta is tiny.
    const auto integrand = [delta](double u) {
      const double c = -std::expm1(-u);
      return c * c * delta * std::exp(u);
    };
    integral = Rule::integrate(integrand, 0.0, std::log1p(lo / delta), kDepth, kTol);
  }
  return integral / (theta1 * theta2);
}

/// lim_{rho -> 0} b_{delta,rho}(theta). Expanding 1 + x rho - (1 + x)^rho =
/// rho (x - log(1+x)) + O(rho^2) and (delta+theta)^rho = 1 + O(rho) leaves
/// (x - log(1 + x))/x with x = theta/delta, or 1 when delta = 0.
inline double bias_b_limit_rho0(double theta, double delta) {
  if (!(theta > 0.0) || !(delta >= 0.0)) fail(ErrorCode::DomainError, "bad theta or delta");
  if (delta == 0.0) return 1.0;
  const double x = theta / delta;
  if (x < 1e-3) {
    // x - log(1+x) = x^2/2 - x^3/3 + x^4/4 - ...
    double sum = 0.0;
    double power = x;
    for (int j = 2; j < 30; ++j) {
      power *= x;
      sum += ((j % 2 == 0) ? 1.0 : -1.0) * power / j;
    }
    return sum / x;
  }
  return (x - std::log(1.0 + x)) / x;
}

}  // namespace hewe::oracle
