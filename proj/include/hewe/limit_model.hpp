#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hewe/error.hpp"
#include "hewe/hewe_process.hpp"

namespace hewe {

/// delta below this routes to the delta = 0 formulas.
inline constexpr double kDeltaZero = 1e-8;
/// |rho| below this evaluates the rho -> 0 limit of the bias curve.
inline constexpr double kRhoZero = 1e-6;

struct LimitParams {
  double alpha = 1.0;
  double delta = 0.0;
  double rho = 0.0;
  double lambda = 0.0;
  std::size_t k = 1;

  [[nodiscard]] double gamma() const noexcept { return 1.0 / alpha; }

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::DomainError, "alpha must be > 0");
    if (!(delta >= 0.0) || !std::isfinite(delta)) fail(ErrorCode::DomainError, "delta must be >= 0");
    if (!(rho <= 0.0)) fail(ErrorCode::DomainError, "rho must be <= 0");
    if (!std::isfinite(lambda)) fail(ErrorCode::DomainError, "lambda must be finite");
    if (k < 1) fail(ErrorCode::DomainError, "k must be >= 1");
  }
};

namespace detail {

inline void require_positive_theta(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) fail(ErrorCode::DomainError, "theta must be > 0");
}

inline bool delta_is_zero(double delta) { return delta < kDeltaZero; }

// Pieces of b_{delta,rho}(theta) that do not depend on rho.
struct BiasNode {
  double x = 0.0;        // theta / delta (delta > 0)
  double log1p_x = 0.0;  // log(1 + x)
  double log_base = 0.0; // log(delta + theta), or log(theta) when delta = 0
  double g = 1.0;        // g_delta(theta), also the rho -> 0 limit of b
  bool delta_zero = true;
};

inline double g_value(double theta, double delta) {
  if (delta_is_zero(delta)) return 1.0;
  const double x = theta / delta;
  return 1.0 - std::log1p(x) / x;
}

inline BiasNode bias_node(double theta, double delta) {
  BiasNode node;
  node.delta_zero = delta_is_zero(delta);
  node.g = g_value(theta, delta);
  if (node.delta_zero) {
    node.log_base = std::log(theta);
  } else {
    node.x = theta / delta;
    node.log1p_x = std::log1p(node.x);
    node.log_base = std::log(delta + theta);
  }
  return node;
}

inline double bias_at(const BiasNode& node, double rho) {
  if (node.delta_zero) return std::exp(-rho * node.log_base) / (1.0 - rho);
  if (std::abs(rho) < kRhoZero) return node.g;
  // 1 + x rho - (1 + x)^rho, written to avoid cancellation for small rho.
  const double numerator = node.x * rho - std::expm1(rho * node.log1p_x);
  const double denominator = node.x * (1.0 - rho) * rho;
  return numerator / denominator * std::exp(-rho * node.log_base);
}

}  // namespace detail

/// Mean curve shape g_delta(theta); the limit of HEWE is g/alpha.
inline double g(double theta, double delta) {
  detail::require_positive_theta(theta);
  if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
  return detail::g_value(theta, delta);
}

/// Bias curve b_{delta,rho}(theta). For |rho| < kRhoZero and delta > 0 the
/// analytic limit 1 - (delta/theta) log(theta/delta + 1) is returned.
inline double bias_b(double theta, double delta, double rho) {
  detail::require_positive_theta(theta);
  if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
  return detail::bias_at(detail::bias_node(theta, delta), rho);
}

/// v(theta) = 1/theta - 2 log(theta+1)/theta^2 + 1/(theta(theta+1)).
///
/// Below 0.1 the three terms cancel to O(theta); there the alternating power
/// series sum_{m>=1} (-1)^{m+1} m/(m+2) theta^m is summed instead.
inline double v_fn(double theta) {
  detail::require_positive_theta(theta);
  if (theta < 0.1) {
    double sum = 0.0;
    double power = 1.0;
    for (int m = 1; m <= 40; ++m) {
      power *= theta;
      const double term = static_cast<double>(m) / static_cast<double>(m + 2) * power;
      sum += (m % 2 == 1) ? term : -term;
      if (term < 1e-18 * sum) break;
    }
    return sum;
  }
  return 1.0 / theta - 2.0 * std::log1p(theta) / (theta * theta) + 1.0 / (theta * (theta + 1.0));
}

/// Covariance of the limiting HEWE process at (theta1, theta2), including
/// the 1/(alpha^2 k) scale.
inline double limit_cov(double theta1, double theta2, double delta, double alpha, std::size_t k) {
  detail::require_positive_theta(theta1);
  detail::require_positive_theta(theta2);
  if (!(alpha > 0.0)) fail(ErrorCode::DomainError, "alpha must be > 0");
  if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
  if (k < 1) fail(ErrorCode::DomainError, "k must be >= 1");
  const double scale = 1.0 / (alpha * alpha * static_cast<double>(k));
  if (detail::delta_is_zero(delta)) return scale / std::max(theta1, theta2);
  const double lo = std::min(theta1, theta2);
  return scale * (lo * lo / (delta * theta1 * theta2)) * v_fn(lo / delta);
}

/// Covariance of the unscaled two-parameter field G(theta, delta):
/// (1/(theta1 theta2)) * integral over [d1 v d2, (d1+t1) ^ (d2+t2)] of
/// (1 - d1/x)(1 - d2/x) dx, zero when the supports do not overlap.
inline double field_cov(double theta1, double delta1, double theta2, double delta2) {
  detail::require_positive_theta(theta1);
  detail::require_positive_theta(theta2);
  if (!(delta1 >= 0.0) || !(delta2 >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
  const double lower = std::max(delta1, delta2);
  if (lower < kDeltaZero) return 1.0 / std::max(theta1, theta2);
  const double upper = std::min(delta1 + theta1, delta2 + theta2);
  if (upper <= lower) return 0.0;
  const double bracket = (upper - lower) - (delta1 + delta2) * std::log(upper / lower) +
                         delta1 * delta2 / lower - delta1 * delta2 / upper;
  return bracket / (theta1 * theta2);
}

/// {f_{delta,rho}}_i = b_i - (theta_{i-1}/theta_i) b_{i-1}.
inline std::vector<double> bias_f(const ThetaGrid& grid, double delta, double rho) {
  std::vector<double> b(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) b[i] = bias_b(grid[i], delta, rho);
  return t_transform(b, grid);
}

/// Inverse variances (up to 1/(alpha^2 k)) of the decorrelated coordinates T_i.
inline std::vector<double> t_variance_weights(const ThetaGrid& grid, double delta) {
  if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
  std::vector<double> w(grid.size());
  const bool zero = detail::delta_is_zero(delta);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double theta = grid[i];
    const double prev = i == 0 ? 0.0 : grid[i - 1];
    double denominator;
    if (zero) {
      // 1/theta_i - theta_{i-1}/theta_i^2
      denominator = (theta - prev) / (theta * theta);
    } else {
      const double r = prev / theta;
      denominator = v_fn(theta / delta) - (i == 0 ? 0.0 : r * r * v_fn(prev / delta));
      denominator /= delta;
    }
    if (!(denominator > 0.0) || !std::isfinite(denominator)) {
      fail(ErrorCode::DegenerateVariance,
           "non-positive variance for T_" + std::to_string(i + 1) + " at delta " +
               std::to_string(delta));
    }
    w[i] = 1.0 / denominator;
  }
  return w;
}

/// g(theta_i, delta)/alpha + (lambda/sqrt k) b(theta_i, delta, rho) on the grid.
inline std::vector<double> mean_curve(const ThetaGrid& grid, const LimitParams& params) {
  params.validate();
  const double amplitude = params.lambda / std::sqrt(static_cast<double>(params.k));
  std::vector<double> m(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    m[i] = g(grid[i], params.delta) / params.alpha +
           amplitude * bias_b(grid[i], params.delta, params.rho);
  }
  return m;
}

/// Bias curve evaluator for one (grid, delta) pair, caching every
/// rho-independent logarithm so repeated evaluation over rho costs two
/// exponentials per grid point.
class BiasCurve {
 public:
  BiasCurve(const ThetaGrid& grid, double delta) : ratios_(grid.size()) {
    nodes_.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      detail::require_positive_theta(grid[i]);
      nodes_.push_back(detail::bias_node(grid[i], delta));
      ratios_[i] = grid.ratio(i);
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

  /// Writes f_{delta,rho} into `out` (size s).
  void f(double rho, std::span<double> out) const {
    double previous = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double b = detail::bias_at(nodes_[i], rho);
      out[i] = b - ratios_[i] * previous;
      previous = b;
    }
  }

  /// Delta g_i = g_i - (theta_{i-1}/theta_i) g_{i-1}.
  [[nodiscard]] std::vector<double> delta_g() const {
    std::vector<double> out(nodes_.size());
    double previous = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      out[i] = nodes_[i].g - ratios_[i] * previous;
      previous = nodes_[i].g;
    }
    return out;
  }

 private:
  std::vector<detail::BiasNode> nodes_;
  std::vector<double> ratios_;
};

}  // namespace hewe
