#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "hewe/error.hpp"
#include "hewe/hewe_process.hpp"
#include "hewe/limit_model.hpp"
#include "hewe/parallel.hpp"
#include "hewe/sample.hpp"

namespace hewe {

/// Grid bounds and steps for the (alpha, delta) search and the rho interval.
struct SearchConfig {
  double alpha_min = 0.01;
  double alpha_max = 5.0;
  double alpha_step = 0.01;
  double delta_min = 0.0;
  double delta_max = 10.0;
  double delta_step = 0.001;
  double rho_min = -20.0;
  std::size_t endpoint = 0;       // theta_s * k
  std::size_t theta1_offset = 5;  // theta_1 * k
  std::size_t threads = 0;        // 0 = hardware concurrency
  /// Run profile_rho on every cell instead of the per-delta reduction.
  bool exhaustive = false;

  /// theta_1 = 5/k, the setting used for simulated data.
  static SearchConfig for_simulation(std::size_t endpoint) {
    SearchConfig c;
    c.endpoint = endpoint;
    c.theta1_offset = 5;
    return c;
  }

  /// theta_1 = 1/k, the setting used for observed data sets.
  static SearchConfig for_data(std::size_t endpoint) {
    SearchConfig c;
    c.endpoint = endpoint;
    c.theta1_offset = 1;
    return c;
  }

  void validate() const {
    if (!(alpha_min > 0.0) || !(alpha_max >= alpha_min) || !(alpha_step > 0.0)) {
      fail(ErrorCode::InvalidArgument, "alpha range must satisfy 0 < min <= max, step > 0");
    }
    if (!(delta_min >= 0.0) || !(delta_max >= delta_min) || !(delta_step > 0.0)) {
      fail(ErrorCode::InvalidArgument, "delta range must satisfy 0 <= min <= max, step > 0");
    }
    if (!(rho_min < 0.0) || !std::isfinite(rho_min)) {
      fail(ErrorCode::InvalidArgument, "rho_min must be negative and finite");
    }
    if (theta1_offset < 1) fail(ErrorCode::InvalidArgument, "theta1 offset must be >= 1");
  }

  [[nodiscard]] std::size_t alpha_count() const noexcept {
    return static_cast<std::size_t>(std::floor((alpha_max - alpha_min) / alpha_step + 1e-9)) + 1;
  }
  [[nodiscard]] double alpha_at(std::size_t j) const noexcept {
    return alpha_min + static_cast<double>(j) * alpha_step;
  }
  [[nodiscard]] std::size_t delta_count() const noexcept {
    return static_cast<std::size_t>(std::floor((delta_max - delta_min) / delta_step + 1e-9)) + 1;
  }
  [[nodiscard]] double delta_at(std::size_t i) const noexcept {
    return delta_min + static_cast<double>(i) * delta_step;
  }
};

struct EstimateResult {
  double alpha_hat = 0.0;
  double gamma_hat = 0.0;
  double delta_hat = 0.0;
  double missing_hat = 0.0;  // delta_hat * k, not rounded
  double rho_hat = 0.0;
  double lambda_hat = 0.0;
  double loglik = 0.0;

  std::size_t k = 0;
  std::size_t endpoint = 0;
  std::size_t theta1_offset = 0;
  std::size_t s = 0;

  std::size_t alpha_index = 0;
  std::size_t delta_index = 0;
  bool alpha_at_min = false;
  bool alpha_at_max = false;
  bool delta_at_min = false;
  bool delta_at_max = false;
  bool rho_at_min = false;
  bool rho_at_zero = false;
  std::size_t cells_evaluated = 0;
  std::size_t cells_failed = 0;
};

struct RhoFit {
  double rho = 0.0;
  double lambda = 0.0;
  double wss = 0.0;
};

namespace detail {

inline double weighted_dot(std::span<const double> w, std::span<const double> a,
                           std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) sum += w[i] * a[i] * b[i];
  return sum;
}

inline void check_lengths(std::span<const double> t, const ThetaGrid& grid) {
  if (t.size() != grid.size()) fail(ErrorCode::InvalidArgument, "t length does not match grid");
}

/// Trial points for rho: dense near 0, sparse towards rho_min.
inline std::vector<double> rho_table(double rho_min) {
  constexpr int kPoints = 40;
  std::vector<double> table(kPoints + 1);
  for (int j = 0; j <= kPoints; ++j) {
    const double u = static_cast<double>(j) / kPoints;
    table[j] = rho_min * u * u;
  }
  table.back() = rho_min;
  return table;
}

/// Minimises objective(rho) over [rho_min, 0]: a table scan locates the best
/// bracket, then Brent's method refines it to a relative x-tolerance below
/// 1e-6. Ties go to the larger rho.
template <typename Objective>
std::pair<double, double> minimize_over_rho(Objective&& objective, double rho_min) {
  const auto table = rho_table(rho_min);
  const auto checked = [&](double rho) {
    const double value = objective(rho);
    if (!std::isfinite(value)) {
      fail(ErrorCode::EstimationFailed, "objective is not finite at rho = " + std::to_string(rho));
    }
    return value;
  };
  std::size_t best = 0;
  double best_value = checked(table[0]);
  for (std::size_t j = 1; j < table.size(); ++j) {
    const double value = checked(table[j]);
    if (value < best_value) {
      best_value = value;
      best = j;
    }
  }
  const double hi = best == 0 ? table[0] : table[best - 1];
  const double lo = best + 1 < table.size() ? table[best + 1] : table.back();
  constexpr int kBits = 21;  // relative tolerance 2^-20 < 1e-6
  boost::uintmax_t max_iter = 200;
  const auto [rho, value] = boost::math::tools::brent_find_minima(checked, lo, hi, kBits, max_iter);
  if (value < best_value) return {rho, value};
  return {table[best], best_value};
}

/// Everything about one delta that does not depend on alpha or rho.
class DeltaModel {
 public:
  DeltaModel(std::span<const double> t, const ThetaGrid& grid, double delta)
      : t_(t.begin(), t.end()),
        w_(t_variance_weights(grid, delta)),
        curve_(grid, delta),
        dg_(curve_.delta_g()),
        f_(grid.size()),
        k_(static_cast<double>(grid.k())) {
    for (const double wi : w_) sum_log_w_ += std::log(wi);
    stt_ = weighted_dot(w_, t_, t_);
    stg_ = weighted_dot(w_, t_, dg_);
    sgg_ = weighted_dot(w_, dg_, dg_);
  }

  struct Quadratic {
    // alpha^2 * WSS(alpha) = a alpha^2 - 2 b alpha + c after profiling lambda
    double a, b, c;
    double stf, sgf, sff;
  };

  /// Profiles lambda out at this rho; reuses the internal f buffer.
  Quadratic quadratic(double rho) {
    curve_.f(rho, f_);
    Quadratic q{};
    q.stf = weighted_dot(w_, t_, f_);
    q.sgf = weighted_dot(w_, dg_, f_);
    q.sff = weighted_dot(w_, f_, f_);
    if (q.sff > 0.0) {
      q.a = stt_ - q.stf * q.stf / q.sff;
      q.b = stg_ - q.stf * q.sgf / q.sff;
      q.c = sgg_ - q.sgf * q.sgf / q.sff;
    } else {
      q.a = stt_;
      q.b = stg_;
      q.c = sgg_;
    }
    return q;
  }

  [[nodiscard]] double loglik(const Quadratic& q, double alpha) const {
    const double s = static_cast<double>(w_.size());
    return s * std::log(alpha) + 0.5 * sum_log_w_ -
           0.5 * k_ * (q.a * alpha * alpha - 2.0 * q.b * alpha + q.c);
  }

  /// Best alpha on the grid for a fixed rho. The log-likelihood is concave
  /// in alpha, so only the grid neighbours of the stationary point compete.
  std::pair<double, std::size_t> best_alpha(const Quadratic& q, const SearchConfig& config) const {
    const double s = static_cast<double>(w_.size());
    const std::size_t last = config.alpha_count() - 1;
    double stationary = std::numeric_limits<double>::infinity();
    const double a = std::max(q.a, 0.0);
    if (a > 0.0) {
      stationary = (k_ * q.b + std::sqrt(k_ * k_ * q.b * q.b + 4.0 * k_ * a * s)) / (2.0 * k_ * a);
    }
    std::size_t j0 = last;
    if (stationary < config.alpha_max) {
      const double pos = (stationary - config.alpha_min) / config.alpha_step;
      j0 = pos <= 0.0 ? 0 : std::min(last, static_cast<std::size_t>(std::floor(pos)));
    }
    const std::size_t j1 = std::min(last, j0 + 1);
    const double l0 = loglik(q, config.alpha_at(j0));
    const double l1 = loglik(q, config.alpha_at(j1));
    if (l1 > l0) return {l1, j1};
    return {l0, j0};
  }

 private:
  std::vector<double> t_;
  std::vector<double> w_;
  BiasCurve curve_;
  std::vector<double> dg_;
  std::vector<double> f_;
  double k_;
  double sum_log_w_ = 0.0;
  double stt_ = 0.0, stg_ = 0.0, sgg_ = 0.0;
};

}  // namespace detail

/// Weighted least-squares amplitude of the bias direction f for fixed
/// (alpha, delta, rho): sqrt(k) <t - Delta g/alpha, f>_w / <f, f>_w.
inline double profile_lambda(std::span<const double> t, const ThetaGrid& grid, double alpha,
                             double delta, double rho, std::span<const double> w) {
  detail::check_lengths(t, grid);
  if (w.size() != grid.size()) fail(ErrorCode::InvalidArgument, "w length does not match grid");
  const BiasCurve curve(grid, delta);
  const auto dg = curve.delta_g();
  std::vector<double> f(grid.size());
  curve.f(rho, f);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += w[i] * (t[i] - dg[i] / alpha) * f[i];
    den += w[i] * f[i] * f[i];
  }
  if (!(den > 0.0)) fail(ErrorCode::BiasDirectionDegenerate, "sum w f^2 is zero");
  return std::sqrt(static_cast<double>(grid.k())) * num / den;
}

/// s log(alpha) + 1/2 sum log w - 1/2 alpha^2 k sum w (t - m)^2, the
/// Gaussian log-likelihood of T without its constant.
inline double log_likelihood(std::span<const double> t, const ThetaGrid& grid, double alpha,
                             double delta, double rho, double lambda) {
  detail::check_lengths(t, grid);
  if (!(alpha > 0.0)) fail(ErrorCode::DomainError, "alpha must be > 0");
  const auto w = t_variance_weights(grid, delta);
  const BiasCurve curve(grid, delta);
  const auto dg = curve.delta_g();
  std::vector<double> f(grid.size());
  curve.f(rho, f);
  const double kd = static_cast<double>(grid.k());
  const double amplitude = lambda / std::sqrt(kd);
  double sum_log_w = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = t[i] - dg[i] / alpha - amplitude * f[i];
    sum_log_w += std::log(w[i]);
    quad += w[i] * r * r;
  }
  return static_cast<double>(t.size()) * std::log(alpha) + 0.5 * sum_log_w -
         0.5 * alpha * alpha * kd * quad;
}

/// rho in [rho_min, 0] minimising the weighted sum of squares with lambda
/// profiled out, for fixed (alpha, delta).
inline RhoFit profile_rho(std::span<const double> t, const ThetaGrid& grid, double alpha,
                          double delta, const SearchConfig& config) {
  detail::check_lengths(t, grid);
  if (!(alpha > 0.0)) fail(ErrorCode::DomainError, "alpha must be > 0");
  const auto w = t_variance_weights(grid, delta);
  const BiasCurve curve(grid, delta);
  const auto dg = curve.delta_g();
  const double root_k = std::sqrt(static_cast<double>(grid.k()));
  std::vector<double> f(grid.size());
  std::vector<double> base(grid.size());
  for (std::size_t i = 0; i < t.size(); ++i) base[i] = t[i] - dg[i] / alpha;

  const auto lambda_at = [&](double rho) {
    curve.f(rho, f);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      num += w[i] * base[i] * f[i];
      den += w[i] * f[i] * f[i];
    }
    return den > 0.0 ? root_k * num / den : 0.0;
  };
  const auto wss_at = [&](double rho) {
    const double amplitude = lambda_at(rho) / root_k;  // leaves f filled for rho
    double sum = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = base[i] - amplitude * f[i];
      sum += w[i] * r * r;
    }
    return sum;
  };
  const auto [rho, wss] = detail::minimize_over_rho(wss_at, config.rho_min);
  return RhoFit{rho, lambda_at(rho), wss};
}

namespace detail {

struct CellBest {
  bool ok = false;
  double loglik = -std::numeric_limits<double>::infinity();
  std::size_t alpha_index = 0;
  double rho = 0.0;
  std::size_t failed = 0;
};

inline bool better_cell(const CellBest& a, const CellBest& b) {
  if (!a.ok) return false;
  if (!b.ok) return true;
  if (a.loglik != b.loglik) return a.loglik > b.loglik;
  return a.alpha_index < b.alpha_index;
}

inline CellBest search_delta_fast(std::span<const double> t, const ThetaGrid& grid, double delta,
                                  const SearchConfig& config) {
  CellBest out;
  DeltaModel model(t, grid, delta);
  const auto profile = [&](double rho) {
    const auto q = model.quadratic(rho);
    return model.best_alpha(q, config);
  };
  const auto [rho, neg] =
      minimize_over_rho([&](double rho) { return -profile(rho).first; }, config.rho_min);
  const auto [loglik, j] = profile(rho);
  out.ok = std::isfinite(loglik);
  out.loglik = loglik;
  out.alpha_index = j;
  out.rho = rho;
  (void)neg;
  return out;
}

inline CellBest search_delta_exhaustive(std::span<const double> t, const ThetaGrid& grid,
                                        double delta, const SearchConfig& config) {
  CellBest out;
  for (std::size_t j = 0; j < config.alpha_count(); ++j) {
    const double alpha = config.alpha_at(j);
    try {
      const auto fit = profile_rho(t, grid, alpha, delta, config);
      const double ll = log_likelihood(t, grid, alpha, delta, fit.rho, fit.lambda);
      CellBest cell{std::isfinite(ll), ll, j, fit.rho, 0};
      if (better_cell(cell, out)) {
        cell.failed = out.failed;
        out = cell;
      }
    } catch (const Error&) {
      ++out.failed;
    }
  }
  return out;
}

}  // namespace detail

/// Approximate maximum likelihood over the (alpha, delta) grid given the
/// decorrelated coordinates t on `grid`.
inline EstimateResult estimate_from_t(std::span<const double> t, const ThetaGrid& grid,
                                      const SearchConfig& config) {
  config.validate();
  detail::check_lengths(t, grid);
  if (grid.size() < 2) fail(ErrorCode::InvalidArgument, "estimation needs at least two grid points");
  const std::size_t n_delta = config.delta_count();
  const std::size_t n_alpha = config.alpha_count();
  std::vector<detail::CellBest> per_delta(n_delta);
  parallel_for(n_delta, config.threads, [&](std::size_t i) {
    const double delta = config.delta_at(i);
    try {
      per_delta[i] = config.exhaustive ? detail::search_delta_exhaustive(t, grid, delta, config)
                                       : detail::search_delta_fast(t, grid, delta, config);
    } catch (const Error&) {
      per_delta[i] = detail::CellBest{};
      per_delta[i].failed = n_alpha;
    }
  });

  EstimateResult result;
  std::size_t failed = 0;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < n_delta; ++i) {
    failed += per_delta[i].failed;
    if (!best || detail::better_cell(per_delta[i], per_delta[*best])) {
      if (per_delta[i].ok) best = i;
    }
  }
  if (!best) fail(ErrorCode::EstimationFailed, "every (alpha, delta) cell failed");

  const auto& cell = per_delta[*best];
  const double alpha = config.alpha_at(cell.alpha_index);
  const double delta = config.delta_at(*best);

  // Re-profile the winning cell through the direct route; keep whichever rho
  // scores higher.
  const auto fit = profile_rho(t, grid, alpha, delta, config);
  double rho = fit.rho;
  double lambda = fit.lambda;
  double loglik = log_likelihood(t, grid, alpha, delta, rho, lambda);
  if (cell.rho != fit.rho) {
    const auto w = t_variance_weights(grid, delta);
    double alt_lambda = 0.0;
    try {
      alt_lambda = profile_lambda(t, grid, alpha, delta, cell.rho, w);
    } catch (const Error&) {
    }
    const double alt = log_likelihood(t, grid, alpha, delta, cell.rho, alt_lambda);
    if (alt > loglik || (alt == loglik && cell.rho > rho)) {
      rho = cell.rho;
      lambda = alt_lambda;
      loglik = alt;
    }
  }

  result.alpha_hat = alpha;
  result.gamma_hat = 1.0 / alpha;
  result.delta_hat = delta;
  result.missing_hat = delta * static_cast<double>(grid.k());
  result.rho_hat = rho;
  result.lambda_hat = lambda;
  result.loglik = loglik;
  result.k = grid.k();
  result.s = grid.size();
  result.theta1_offset = floor_count(grid[0] * static_cast<double>(grid.k()));
  result.endpoint = floor_count(grid[grid.size() - 1] * static_cast<double>(grid.k()));
  result.alpha_index = cell.alpha_index;
  result.delta_index = *best;
  result.alpha_at_min = cell.alpha_index == 0;
  result.alpha_at_max = cell.alpha_index + 1 == n_alpha;
  result.delta_at_min = *best == 0;
  result.delta_at_max = *best + 1 == n_delta;
  result.rho_at_min = rho <= config.rho_min * (1.0 - 1e-6);
  result.rho_at_zero = rho >= -1e-6;
  result.cells_evaluated = n_alpha * n_delta;
  result.cells_failed = failed;
  return result;
}

/// Grid theta_i = (theta1_offset + i - 1)/k up to theta_s = endpoint/k.
inline ThetaGrid estimation_grid(std::size_t k, const SearchConfig& config) {
  if (config.endpoint <= config.theta1_offset) {
    fail(ErrorCode::InvalidArgument, "endpoint must exceed the theta_1 offset");
  }
  return ThetaGrid::regular(k, config.theta1_offset, config.endpoint);
}

/// Full procedure on a sample: Hill values on the grid, T-transform, then
/// the (alpha, delta) search.
inline EstimateResult estimate(const OrderedSample& sample, std::size_t k,
                               const SearchConfig& config) {
  config.validate();
  const auto grid = estimation_grid(k, config);
  if (grid.max_rank() > sample.size()) {
    fail(ErrorCode::InsufficientData, "endpoint " + std::to_string(config.endpoint) +
                                          " needs " + std::to_string(grid.max_rank()) +
                                          " values, sample has " + std::to_string(sample.size()));
  }
  const auto t = t_transform(hewe_vector(sample, grid, 0.0));
  return estimate_from_t(t, grid, config);
}

struct SweepRow {
  std::size_t endpoint = 0;
  std::optional<EstimateResult> result;
  std::string error_code;
  std::string error_message;
};

/// One estimate per endpoint. The Hill values for the largest feasible
/// endpoint are computed once and every endpoint uses a prefix of them.
inline std::vector<SweepRow> sweep_endpoints(const OrderedSample& sample, std::size_t k,
                                             const SearchConfig& config,
                                             std::span<const std::size_t> endpoints) {
  config.validate();
  std::vector<SweepRow> rows;
  rows.reserve(endpoints.size());
  std::size_t feasible_max = 0;
  for (const std::size_t e : endpoints) {
    if (e > config.theta1_offset && e + 1 <= sample.size()) feasible_max = std::max(feasible_max, e);
  }
  std::vector<double> t_all;
  if (feasible_max > 0) {
    auto wide = config;
    wide.endpoint = feasible_max;
    t_all = t_transform(hewe_vector(sample, estimation_grid(k, wide), 0.0));
  }
  for (const std::size_t e : endpoints) {
    SweepRow row;
    row.endpoint = e;
    try {
      auto c = config;
      c.endpoint = e;
      const auto grid = estimation_grid(k, c);
      if (grid.max_rank() > sample.size()) {
        fail(ErrorCode::InsufficientData, "endpoint " + std::to_string(e) + " needs " +
                                              std::to_string(grid.max_rank()) + " values");
      }
      row.result = estimate_from_t(std::span<const double>(t_all).first(grid.size()), grid, c);
    } catch (const Error& err) {
      row.error_code = std::string(err.name());
      row.error_message = err.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace hewe
