#pragma once

// JSON and CSV renderings shared by the CLI and the HTTP service, so both
// emit the same bytes for the same result.

#include <cmath>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hewe/estimator.hpp"
#include "hewe/simulator.hpp"

namespace hewe {

using Json = nlohmann::json;

namespace detail {

// NaN/inf are not JSON; they become null.
inline Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace detail

/// Round-trip text for a double in CSV cells.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json to_json(const EstimateResult& r) {
  using detail::number;
  return Json{
      {"alpha_hat", number(r.alpha_hat)},
      {"gamma_hat", number(r.gamma_hat)},
      {"delta_hat", number(r.delta_hat)},
      {"missing_hat", number(r.missing_hat)},
      {"rho_hat", number(r.rho_hat)},
      {"lambda_hat", number(r.lambda_hat)},
      {"loglik", number(r.loglik)},
      {"k", r.k},
      {"endpoint", r.endpoint},
      {"theta1_offset", r.theta1_offset},
      {"s", r.s},
      {"alpha_index", r.alpha_index},
      {"delta_index", r.delta_index},
      {"boundary",
       {{"alpha_min", r.alpha_at_min},
        {"alpha_max", r.alpha_at_max},
        {"delta_min", r.delta_at_min},
        {"delta_max", r.delta_at_max},
        {"rho_min", r.rho_at_min},
        {"rho_zero", r.rho_at_zero}}},
      {"cells_evaluated", r.cells_evaluated},
      {"cells_failed", r.cells_failed},
  };
}

inline Json to_json(const SearchConfig& c) {
  return Json{{"alpha_min", c.alpha_min}, {"alpha_max", c.alpha_max}, {"alpha_step", c.alpha_step},
              {"delta_min", c.delta_min}, {"delta_max", c.delta_max}, {"delta_step", c.delta_step},
              {"rho_min", c.rho_min},     {"endpoint", c.endpoint},   {"theta1", c.theta1_offset}};
}

/// Overrides fields of `base` from a JSON object; unknown keys are rejected.
inline SearchConfig search_config_from_json(const Json& j, SearchConfig base) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "search config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "alpha_min") base.alpha_min = value.get<double>();
      else if (key == "alpha_max") base.alpha_max = value.get<double>();
      else if (key == "alpha_step") base.alpha_step = value.get<double>();
      else if (key == "delta_min") base.delta_min = value.get<double>();
      else if (key == "delta_max") base.delta_max = value.get<double>();
      else if (key == "delta_step") base.delta_step = value.get<double>();
      else if (key == "rho_min") base.rho_min = value.get<double>();
      else if (key == "endpoint") base.endpoint = value.get<std::size_t>();
      else if (key == "theta1") base.theta1_offset = value.get<std::size_t>();
      else if (key == "threads") base.threads = value.get<std::size_t>();
      else if (key == "k") continue;  // read by the caller
      else fail(ErrorCode::InvalidArgument, "unknown search field '" + key + "'");
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("bad search config: ") + e.what());
  }
  base.validate();
  return base;
}

inline Json to_json(const SweepRow& row) {
  Json j{{"endpoint", row.endpoint}};
  if (row.result) {
    j["result"] = to_json(*row.result);
  } else {
    j["error"] = {{"code", row.error_code}, {"message", row.error_message}};
  }
  return j;
}

inline Json to_json(std::span<const SweepRow> rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(to_json(r));
  return out;
}

inline std::string hill_csv(std::span<const std::pair<std::size_t, double>> curve) {
  std::string out = "k,hill\n";
  for (const auto& [k, h] : curve) out += std::to_string(k) + "," + format_double(h) + "\n";
  return out;
}

inline std::string sweep_csv_header() {
  return "endpoint,alpha_hat,gamma_hat,delta_hat,missing_hat,rho_hat,lambda_hat,loglik,"
         "delta_at_max,alpha_at_max,error\n";
}

inline std::string sweep_csv_row(const SweepRow& row, std::string_view prefix = {}) {
  std::string out(prefix);
  out += std::to_string(row.endpoint);
  if (row.result) {
    const auto& r = *row.result;
    for (const double x : {r.alpha_hat, r.gamma_hat, r.delta_hat, r.missing_hat, r.rho_hat,
                           r.lambda_hat, r.loglik}) {
      out += "," + format_double(x);
    }
    out += r.delta_at_max ? ",1" : ",0";
    out += r.alpha_at_max ? ",1," : ",0,";
  } else {
    out += ",,,,,,,,,," + row.error_code;
  }
  return out + "\n";
}

inline std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = sweep_csv_header();
  for (const auto& r : rows) out += sweep_csv_row(r);
  return out;
}

/// Paired before/after sweeps from an artificial removal of m extra values.
struct WhatIf {
  std::size_t removed = 0;
  std::size_t k = 0;
  std::vector<SweepRow> before;
  std::vector<SweepRow> after;  // endpoints shifted left by `removed`
};

/// The artificial-removal check: sweep the sample at `endpoints`, drop the
/// top m, and sweep again at the same order statistics (endpoints - m).
/// Endpoints that do not survive the shift are reported as errors.
inline WhatIf what_if(const OrderedSample& sample, std::size_t k, const SearchConfig& config,
                      std::span<const std::size_t> endpoints, std::size_t m) {
  WhatIf out;
  out.removed = m;
  out.k = k;
  out.before = sweep_endpoints(sample, k, config, endpoints);
  const auto reduced = sample.remove_top(m);
  std::vector<std::size_t> shifted;
  std::vector<std::size_t> slot;
  out.after.resize(endpoints.size());
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    out.after[i].endpoint = endpoints[i] >= m ? endpoints[i] - m : 0;
    if (endpoints[i] > m + config.theta1_offset) {
      shifted.push_back(endpoints[i] - m);
      slot.push_back(i);
    } else {
      out.after[i].error_code = std::string(code_name(ErrorCode::InvalidArgument));
      out.after[i].error_message = "endpoint does not survive the left shift by " + std::to_string(m);
    }
  }
  auto rows = sweep_endpoints(reduced, k, config, shifted);
  for (std::size_t j = 0; j < rows.size(); ++j) out.after[slot[j]] = std::move(rows[j]);
  return out;
}

inline Json to_json(const WhatIf& w) {
  return Json{{"remove_top", w.removed},
              {"k", w.k},
              {"before", to_json(std::span<const SweepRow>(w.before))},
              {"after", to_json(std::span<const SweepRow>(w.after))}};
}

inline std::string what_if_csv(const WhatIf& w) {
  std::string out = "table," + sweep_csv_header();
  for (const auto& r : w.before) out += sweep_csv_row(r, "before,");
  for (const auto& r : w.after) out += sweep_csv_row(r, "after,");
  return out;
}

inline Json to_json(const SummaryStats& s) {
  using detail::number;
  return Json{{"mean", number(s.mean)},
              {"rmse", number(s.rmse)},
              {"bias", number(s.bias)},
              {"variance", number(s.variance)},
              {"median", number(s.median)}};
}

inline Json to_json(const ExperimentReport& report, bool include_replicates = true) {
  const auto& c = report.config;
  Json j;
  j["config"] = {{"distribution", c.distribution.name()},
                 {"n", c.n},
                 {"k", c.k},
                 {"delta", c.delta_true},
                 {"replicates", c.replicates},
                 {"endpoints", c.endpoints},
                 {"seed", c.seed},
                 {"search", to_json(c.search)}};
  j["endpoints"] = Json::array();
  for (const auto& e : report.endpoints) {
    j["endpoints"].push_back({{"endpoint", e.endpoint},
                              {"ok", e.ok},
                              {"failed", e.failed},
                              {"missing", to_json(e.missing)},
                              {"alpha", to_json(e.alpha)},
                              {"gamma", to_json(e.gamma)}});
  }
  if (include_replicates) {
    j["replicates"] = Json::array();
    for (const auto& r : report.estimates) {
      Json row{{"replicate", r.replicate}, {"endpoint", r.endpoint}};
      if (r.ok) row["result"] = to_json(r.result);
      else row["error"] = r.error_code;
      j["replicates"].push_back(std::move(row));
    }
  }
  return j;
}

/// endpoint x statistic table.
inline std::string experiment_csv(const ExperimentReport& report) {
  std::string out =
      "endpoint,ok,failed,missing_mean,missing_rmse,missing_median,alpha_mean,alpha_rmse,"
      "alpha_median,gamma_mean,gamma_rmse,gamma_median\n";
  for (const auto& e : report.endpoints) {
    out += std::to_string(e.endpoint) + "," + std::to_string(e.ok) + "," + std::to_string(e.failed);
    for (const auto* s : {&e.missing, &e.alpha, &e.gamma}) {
      out += "," + format_double(s->mean) + "," + format_double(s->rmse) + "," +
             format_double(s->median);
    }
    out += "\n";
  }
  return out;
}

/// Plain table helper: a header row and rows of numbers.
inline std::string table_csv(std::span<const std::string> header,
                             std::span<const std::vector<double>> rows) {
  std::ostringstream out;
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
  return out.str();
}

}  // namespace hewe
