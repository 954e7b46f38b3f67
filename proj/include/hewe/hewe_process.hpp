#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hewe/error.hpp"
#include "hewe/sample.hpp"

namespace hewe {

/// floor(x) with a relative guard so products like (i/k)*k land on i.
inline std::size_t floor_count(double x) {
  if (!(x >= 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 1e-9 * x));
}

/// Increasing evaluation points theta_1 < ... < theta_s tied to k, with the
/// implicit theta_0 = 0.
class ThetaGrid {
 public:
  ThetaGrid(std::size_t k, std::vector<double> thetas) : k_(k), thetas_(std::move(thetas)) {
    if (k_ < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
    if (thetas_.empty()) fail(ErrorCode::InvalidArgument, "theta grid is empty");
    for (std::size_t i = 0; i < thetas_.size(); ++i) {
      if (!std::isfinite(thetas_[i])) fail(ErrorCode::InvalidArgument, "theta must be finite");
      if (i > 0 && !(thetas_[i] > thetas_[i - 1])) {
        fail(ErrorCode::InvalidArgument, "theta grid must be strictly increasing");
      }
    }
    if (floor_count(thetas_.front() * static_cast<double>(k_)) < 1) {
      fail(ErrorCode::InvalidArgument, "theta_1 must be at least 1/k");
    }
  }

  /// theta_i = rank_i / k for consecutive ranks first_rank..last_rank.
  static ThetaGrid regular(std::size_t k, std::size_t first_rank, std::size_t last_rank) {
    if (first_rank < 1 || last_rank < first_rank) {
      fail(ErrorCode::InvalidArgument, "need 1 <= first rank <= last rank");
    }
    std::vector<double> thetas;
    thetas.reserve(last_rank - first_rank + 1);
    for (std::size_t r = first_rank; r <= last_rank; ++r) {
      thetas.push_back(static_cast<double>(r) / static_cast<double>(k));
    }
    return ThetaGrid(k, std::move(thetas));
  }

  [[nodiscard]] std::size_t k() const noexcept { return k_; }
  [[nodiscard]] std::size_t size() const noexcept { return thetas_.size(); }
  [[nodiscard]] std::span<const double> thetas() const noexcept { return thetas_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return thetas_[i]; }
  /// theta_{i-1}/theta_i with theta_0 = 0.
  [[nodiscard]] double ratio(std::size_t i) const noexcept {
    return i == 0 ? 0.0 : thetas_[i - 1] / thetas_[i];
  }
  /// Largest order-statistic rank touched by the grid when delta = 0.
  [[nodiscard]] std::size_t max_rank() const noexcept {
    return floor_count(thetas_.back() * static_cast<double>(k_)) + 1;
  }

 private:
  std::size_t k_;
  std::vector<double> thetas_;
};

/// H_{k,n}(theta_i; delta) on every grid point.
struct HeweVector {
  ThetaGrid grid;
  double delta = 0.0;
  std::vector<double> h;
};

/// Hill estimator without the top floor(delta k) extremes, based on the next
/// floor(theta k) order statistics. Zero when floor(theta k) = 0.
inline double hewe(const OrderedSample& sample, std::size_t k, double theta, double delta) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be nonnegative");
  const double kd = static_cast<double>(k);
  const std::size_t m = floor_count(theta * kd);
  if (m == 0) return 0.0;
  const std::size_t d = floor_count(delta * kd);
  if (d + m + 1 > sample.size()) {
    fail(ErrorCode::InsufficientData,
         "need order statistic " + std::to_string(d + m + 1) + " but sample has " +
             std::to_string(sample.size()) + " values");
  }
  const auto logs = sample.logs();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) sum += logs[d + i];
  return sum / static_cast<double>(m) - logs[d + m];
}

/// Classical Hill estimates H_n(k) for k = 1..k_max, as (k, H_n(k)) pairs.
inline std::vector<std::pair<std::size_t, double>> hill_curve(const OrderedSample& sample,
                                                              std::size_t k_max) {
  if (k_max < 1 || k_max + 1 > sample.size()) {
    fail(ErrorCode::RankOutOfRange, "k_max must lie in [1, " +
                                        std::to_string(sample.size() > 0 ? sample.size() - 1 : 0) +
                                        "]");
  }
  const auto logs = sample.logs();
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(k_max);
  double sum = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    sum += logs[k - 1];
    out.emplace_back(k, sum / static_cast<double>(k) - logs[k]);
  }
  return out;
}

inline HeweVector hewe_vector(const OrderedSample& sample, const ThetaGrid& grid, double delta) {
  HeweVector out{grid, delta, {}};
  out.h.reserve(grid.size());
  for (const double theta : grid.thetas()) out.h.push_back(hewe(sample, grid.k(), theta, delta));
  return out;
}

/// x_i - (theta_{i-1}/theta_i) x_{i-1}, theta_0 = 0. Used for T, Delta g and f.
inline std::vector<double> t_transform(std::span<const double> x, const ThetaGrid& grid) {
  if (x.size() != grid.size()) fail(ErrorCode::InvalidArgument, "length does not match grid");
  std::vector<double> t(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    t[i] = i == 0 ? x[0] : x[i] - grid.ratio(i) * x[i - 1];
  }
  return t;
}

inline std::vector<double> t_transform(const HeweVector& hv) { return t_transform(hv.h, hv.grid); }

inline std::vector<double> inverse_t_transform(std::span<const double> t, const ThetaGrid& grid) {
  if (t.size() != grid.size()) fail(ErrorCode::InvalidArgument, "length does not match grid");
  std::vector<double> h(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    h[i] = i == 0 ? t[0] : t[i] + grid.ratio(i) * h[i - 1];
  }
  return h;
}

}  // namespace hewe
