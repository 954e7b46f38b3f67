#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hewe/error.hpp"
#include "hewe/estimator.hpp"
#include "hewe/hewe_process.hpp"
#include "hewe/limit_model.hpp"
#include "hewe/parallel.hpp"
#include "hewe/sample.hpp"

namespace hewe {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream); streams never share state.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform on the open interval (0, 1).
inline double open_uniform(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
}

inline OrderedSample sample_pareto(double alpha, std::size_t n, Rng& rng) {
  if (!(alpha > 0.0)) fail(ErrorCode::DomainError, "alpha must be > 0");
  std::vector<double> x(n);
  for (auto& v : x) v = std::pow(open_uniform(rng), -1.0 / alpha);
  return OrderedSample::from_values(std::move(x));
}

/// |C| for standard Cauchy C = tan(pi (U - 1/2)); tail index 1.
inline OrderedSample sample_cauchy(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (auto& v : x) {
    do {
      v = std::abs(std::tan(std::numbers::pi * (open_uniform(rng) - 0.5)));
    } while (!(v > 0.0));
  }
  return OrderedSample::from_values(std::move(x));
}

/// |Z / sqrt(V/df)| with Z normal and V chi-square(df); tail index df.
inline OrderedSample sample_student_t(double df, std::size_t n, Rng& rng) {
  if (!(df > 0.0)) fail(ErrorCode::DomainError, "df must be > 0");
  std::normal_distribution<double> normal;
  std::chi_squared_distribution<double> chi2(df);
  std::vector<double> x(n);
  for (auto& v : x) {
    do {
      v = std::abs(normal(rng) / std::sqrt(chi2(rng) / df));
    } while (!(v > 0.0) || !std::isfinite(v));
  }
  return OrderedSample::from_values(std::move(x));
}

/// Standard exponential -log U, the light-tailed (gamma = 0) case.
inline OrderedSample sample_exponential(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  for (auto& v : x) v = -std::log(open_uniform(rng));
  return OrderedSample::from_values(std::move(x));
}

inline OrderedSample sample_pareto(double alpha, std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sample_pareto(alpha, n, rng);
}
inline OrderedSample sample_cauchy(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sample_cauchy(n, rng);
}
inline OrderedSample sample_student_t(double df, std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sample_student_t(df, n, rng);
}
inline OrderedSample sample_exponential(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed);
  return sample_exponential(n, rng);
}

struct Distribution {
  enum class Kind { Pareto, Cauchy, StudentT, Exponential };
  Kind kind = Kind::Pareto;
  double param = 0.5;  // alpha for Pareto, df for Student t

  /// Accepts "pareto(0.5)", "cauchy", "student_t(2.5)", "exponential".
  static Distribution parse(std::string_view text) {
    const auto open = text.find('(');
    const auto name = text.substr(0, open);
    std::optional<double> arg;
    if (open != std::string_view::npos) {
      const auto close = text.find(')', open);
      if (close == std::string_view::npos) fail(ErrorCode::ParseError, "missing ')' in distribution");
      arg = detail::parse_number(detail::trim(text.substr(open + 1, close - open - 1)));
      if (!arg) fail(ErrorCode::ParseError, "bad distribution parameter");
    }
    Distribution d;
    if (name == "pareto") {
      d.kind = Kind::Pareto;
      d.param = arg.value_or(0.5);
    } else if (name == "cauchy") {
      d.kind = Kind::Cauchy;
      d.param = 1.0;
    } else if (name == "student_t" || name == "t") {
      if (!arg) fail(ErrorCode::ParseError, "student_t needs df, e.g. student_t(2.5)");
      d.kind = Kind::StudentT;
      d.param = *arg;
    } else if (name == "exponential") {
      d.kind = Kind::Exponential;
      d.param = std::numeric_limits<double>::infinity();
    } else {
      fail(ErrorCode::ParseError, "unknown distribution '" + std::string(text) + "'");
    }
    return d;
  }

  [[nodiscard]] std::string name() const {
    std::ostringstream out;
    switch (kind) {
      case Kind::Pareto: out << "pareto(" << param << ")"; break;
      case Kind::Cauchy: out << "cauchy"; break;
      case Kind::StudentT: out << "student_t(" << param << ")"; break;
      case Kind::Exponential: out << "exponential"; break;
    }
    return out.str();
  }

  /// Tail index; infinite for the exponential.
  [[nodiscard]] double alpha() const noexcept {
    switch (kind) {
      case Kind::Pareto: return param;
      case Kind::Cauchy: return 1.0;
      case Kind::StudentT: return param;
      case Kind::Exponential: return std::numeric_limits<double>::infinity();
    }
    return param;
  }
  [[nodiscard]] double gamma() const noexcept { return 1.0 / alpha(); }

  [[nodiscard]] OrderedSample draw(std::size_t n, Rng& rng) const {
    switch (kind) {
      case Kind::Pareto: return sample_pareto(param, n, rng);
      case Kind::Cauchy: return sample_cauchy(n, rng);
      case Kind::StudentT: return sample_student_t(param, n, rng);
      case Kind::Exponential: return sample_exponential(n, rng);
    }
    fail(ErrorCode::InvalidArgument, "unknown distribution");
  }
};

/// One realisation of the Gaussian limit of HEWE on `grid`:
///   g(theta_i, delta)/alpha + (1/(alpha sqrt(k) theta_i)) int_delta^{delta+theta_i} (1 - delta/x) dW
///   + bias_amplitude * b(theta_i, delta, rho).
///
/// W is built in two stages so that different meshes share one Brownian path:
/// the increments of W over [delta + theta_{i-1}, delta + theta_i] come from
/// stream 0, and the interior of interval i is filled by a Brownian bridge
/// driven by stream i + 1. Each interval is cut into ceil(mesh * length)
/// equal cells and the integrand is taken at the cell midpoints.
///
/// `normal(stream)` must return the next standard normal of that stream.
template <typename NormalSource>
std::vector<double> limit_path(const ThetaGrid& grid, const LimitParams& params,
                               double bias_amplitude, std::size_t mesh, NormalSource&& normal) {
  params.validate();
  if (mesh < 1000) fail(ErrorCode::InvalidArgument, "mesh must be >= 1000 points per unit theta");
  const double delta = params.delta;
  const double scale = 1.0 / (params.alpha * std::sqrt(static_cast<double>(params.k)));
  std::vector<double> path(grid.size());
  double integral = 0.0;
  double left = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double right = grid[i];
    const double length = right - left;
    const auto cells = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(static_cast<double>(mesh) * length - 1e-9)));
    const double h = length / static_cast<double>(cells);
    const double total = std::sqrt(length) * normal(std::size_t{0});
    double w_prev = 0.0;
    for (std::size_t j = 0; j < cells; ++j) {
      double w_next = total;
      if (j + 1 < cells) {
        const double remaining = length - static_cast<double>(j) * h;
        const double mean = w_prev + (total - w_prev) * h / remaining;
        const double sd = std::sqrt(h * (remaining - h) / remaining);
        w_next = mean + sd * normal(i + 1);
      }
      const double x = delta + left + (static_cast<double>(j) + 0.5) * h;
      integral += (1.0 - delta / x) * (w_next - w_prev);
      w_prev = w_next;
    }
    path[i] = g(right, delta) / params.alpha + scale * integral / right +
              bias_amplitude * bias_b(right, delta, params.rho);
    left = right;
  }
  return path;
}

inline std::vector<double> simulate_limit_path(const ThetaGrid& grid, const LimitParams& params,
                                               double bias_amplitude, std::size_t mesh,
                                               std::uint64_t seed) {
  std::vector<Rng> streams;
  streams.reserve(grid.size() + 1);
  for (std::size_t i = 0; i <= grid.size(); ++i) streams.push_back(make_rng(seed, i));
  std::normal_distribution<double> normal;
  return limit_path(grid, params, bias_amplitude, mesh, [&](std::size_t stream) {
    return normal(streams[stream]);
  });
}

struct ExperimentConfig {
  Distribution distribution;
  std::size_t n = 500;
  std::size_t k = 50;
  double delta_true = 1.0;
  std::size_t replicates = 200;
  std::vector<std::size_t> endpoints;
  std::uint64_t seed = 1;
  SearchConfig search = SearchConfig::for_simulation(0);
  std::size_t threads = 0;

  [[nodiscard]] std::size_t removed() const {
    return floor_count(delta_true * static_cast<double>(k));
  }

  void validate() const {
    if (replicates < 1) fail(ErrorCode::InvalidArgument, "replicates must be >= 1");
    if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
    if (!(delta_true >= 0.0)) fail(ErrorCode::InvalidArgument, "delta must be >= 0");
    if (removed() >= n) fail(ErrorCode::InvalidArgument, "floor(delta k) must be < n");
    if (endpoints.empty()) fail(ErrorCode::InvalidArgument, "no endpoints given");
    search.validate();
  }
};

/// Per-replicate estimate at one endpoint.
struct ReplicateEstimate {
  std::size_t replicate = 0;
  std::size_t endpoint = 0;
  bool ok = false;
  std::string error_code;
  EstimateResult result;
};

struct SummaryStats {
  double mean = 0.0;
  double rmse = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // population variance over replicates
  double median = 0.0;
};

struct EndpointSummary {
  std::size_t endpoint = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  SummaryStats missing;  // against delta_true * k
  SummaryStats alpha;    // against the true tail index (NaN when infinite)
  SummaryStats gamma;    // against 1/alpha
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<EndpointSummary> endpoints;
  std::vector<ReplicateEstimate> estimates;  // replicate-major
};

/// Mean, RMSE against `truth`, bias, variance and median of `xs`.
inline SummaryStats summarize(std::vector<double> xs, double truth) {
  SummaryStats s;
  if (xs.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan, nan, nan};
  }
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (const double x : xs) sum += x;
  s.mean = sum / n;
  double sq_err = 0.0;
  double sq_dev = 0.0;
  for (const double x : xs) {
    sq_err += (x - truth) * (x - truth);
    sq_dev += (x - s.mean) * (x - s.mean);
  }
  s.rmse = std::sqrt(sq_err / n);
  s.bias = s.mean - truth;
  s.variance = sq_dev / n;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  s.median = xs.size() % 2 == 1 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
  return s;
}

/// Draw, remove the top floor(delta k), sweep the endpoints; repeat and
/// aggregate. Replicate r uses the generator make_rng(seed, r).
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::size_t n_end = config.endpoints.size();
  std::vector<ReplicateEstimate> estimates(config.replicates * n_end);
  auto search = config.search;
  search.threads = 1;
  parallel_for(config.replicates, config.threads, [&](std::size_t r) {
    auto rng = make_rng(config.seed, r);
    const auto sample = config.distribution.draw(config.n, rng).remove_top(config.removed());
    const auto rows = sweep_endpoints(sample, config.k, search, config.endpoints);
    for (std::size_t e = 0; e < n_end; ++e) {
      auto& slot = estimates[r * n_end + e];
      slot.replicate = r;
      slot.endpoint = rows[e].endpoint;
      slot.ok = rows[e].result.has_value();
      slot.error_code = rows[e].error_code;
      if (slot.ok) slot.result = *rows[e].result;
    }
  });

  ExperimentReport report;
  report.config = config;
  const double missing_true = config.delta_true * static_cast<double>(config.k);
  const double alpha_true = config.distribution.alpha();
  const double gamma_true = config.distribution.gamma();
  for (std::size_t e = 0; e < n_end; ++e) {
    EndpointSummary summary;
    summary.endpoint = config.endpoints[e];
    std::vector<double> missing, alpha, gamma;
    for (std::size_t r = 0; r < config.replicates; ++r) {
      const auto& est = estimates[r * n_end + e];
      if (!est.ok) {
        ++summary.failed;
        continue;
      }
      ++summary.ok;
      missing.push_back(est.result.missing_hat);
      alpha.push_back(est.result.alpha_hat);
      gamma.push_back(est.result.gamma_hat);
    }
    summary.missing = summarize(missing, missing_true);
    summary.alpha = summarize(alpha, alpha_true);
    if (!std::isfinite(alpha_true)) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      summary.alpha.rmse = summary.alpha.bias = nan;
    }
    summary.gamma = summarize(gamma, gamma_true);
    report.endpoints.push_back(summary);
  }
  report.estimates = std::move(estimates);
  return report;
}

namespace detail {

inline std::vector<std::size_t> parse_endpoint_list(std::string_view text) {
  // "40,60,80" or "start:stop:step"
  std::vector<std::size_t> out;
  const auto to_count = [&](std::string_view s) {
    const auto v = parse_number(trim(s));
    if (!v || *v < 0 || std::floor(*v) != *v) {
      fail(ErrorCode::ParseError, "bad endpoint value '" + std::string(s) + "'");
    }
    return static_cast<std::size_t>(*v);
  };
  if (text.find(':') != std::string_view::npos) {
    const auto a = text.find(':');
    const auto b = text.find(':', a + 1);
    const auto start = to_count(text.substr(0, a));
    const auto stop = to_count(text.substr(a + 1, b == text.npos ? text.npos : b - a - 1));
    const auto step = b == text.npos ? std::size_t{1} : to_count(text.substr(b + 1));
    if (step == 0 || stop < start) fail(ErrorCode::ParseError, "bad endpoint range");
    for (std::size_t e = start; e <= stop; e += step) out.push_back(e);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    const auto piece = trim(text.substr(start, pos == text.npos ? text.npos : pos - start));
    if (!piece.empty()) out.push_back(to_count(piece));
    if (pos == text.npos) break;
    start = pos + 1;
  }
  return out;
}

inline void parse_range(std::string_view text, double& lo, double& hi, std::optional<double*> step) {
  // "lo:hi" or "lo:hi:step"
  std::vector<double> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(':', start);
    const auto v = parse_number(trim(text.substr(start, pos == text.npos ? text.npos : pos - start)));
    if (!v) fail(ErrorCode::ParseError, "bad range '" + std::string(text) + "'");
    parts.push_back(*v);
    if (pos == text.npos) break;
    start = pos + 1;
  }
  if (parts.size() < 2 || parts.size() > 3) fail(ErrorCode::ParseError, "range needs lo:hi[:step]");
  lo = parts[0];
  hi = parts[1];
  if (parts.size() == 3) {
    if (!step) fail(ErrorCode::ParseError, "this range takes no step");
    **step = parts[2];
  }
}

}  // namespace detail

/// Reads `key = value` lines ('#' starts a comment). Keys: distribution, n,
/// k, delta, replicates, endpoints, seed, threads, theta1, alpha_range,
/// delta_range, rho_min.
inline ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  const auto count = [&](std::string_view v) {
    const auto x = detail::parse_number(v);
    if (!x || *x < 0 || std::floor(*x) != *x) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected a count");
    }
    return static_cast<std::size_t>(*x);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto text = std::string_view(line);
    if (const auto hash = text.find('#'); hash != text.npos) text = text.substr(0, hash);
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == text.npos) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing '='");
    const auto key = detail::trim(text.substr(0, eq));
    const auto value = detail::trim(text.substr(eq + 1));
    if (key == "distribution") {
      config.distribution = Distribution::parse(value);
    } else if (key == "n") {
      config.n = count(value);
    } else if (key == "k") {
      config.k = count(value);
    } else if (key == "delta") {
      const auto x = detail::parse_number(value);
      if (!x) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad delta");
      config.delta_true = *x;
    } else if (key == "replicates") {
      config.replicates = count(value);
    } else if (key == "endpoints") {
      config.endpoints = detail::parse_endpoint_list(value);
    } else if (key == "seed") {
      config.seed = count(value);
    } else if (key == "threads") {
      config.threads = count(value);
    } else if (key == "theta1") {
      config.search.theta1_offset = count(value);
    } else if (key == "alpha_range") {
      detail::parse_range(value, config.search.alpha_min, config.search.alpha_max,
                          &config.search.alpha_step);
    } else if (key == "delta_range") {
      detail::parse_range(value, config.search.delta_min, config.search.delta_max,
                          &config.search.delta_step);
    } else if (key == "rho_min") {
      const auto x = detail::parse_number(value);
      if (!x) fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad rho_min");
      config.search.rho_min = *x;
    } else {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown key '" +
                                      std::string(key) + "'");
    }
  }
  config.validate();
  return config;
}

}  // namespace hewe
