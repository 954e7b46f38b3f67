#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "hewe/error.hpp"
#include "hewe/estimator.hpp"
#include "hewe/hewe_process.hpp"
#include "hewe/limit_model.hpp"
#include "hewe/report.hpp"
#include "hewe/sample.hpp"
#include "hewe/session_store.hpp"
#include "hewe/simulator.hpp"

namespace hewe {

struct ServiceRequest {
  std::string method;  // "GET" / "POST"
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct ServiceResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

struct ServiceOptions {
  std::size_t store_capacity = 64;
  std::size_t estimate_threads = 0;
  std::size_t max_gp_paths = 1000;
};

namespace detail {

inline std::optional<std::string> param(const ServiceRequest& req, const std::string& name) {
  const auto it = req.params.find(name);
  if (it == req.params.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

inline std::optional<double> param_double(const ServiceRequest& req, const std::string& name) {
  const auto text = param(req, name);
  if (!text) return std::nullopt;
  const auto v = parse_number(*text);
  if (!v) fail(ErrorCode::InvalidArgument, "parameter '" + name + "' is not a number");
  return v;
}

inline std::optional<std::size_t> param_count(const ServiceRequest& req, const std::string& name) {
  const auto text = param(req, name);
  if (!text) return std::nullopt;
  std::size_t value = 0;
  const auto* end = text->data() + text->size();
  const auto [ptr, ec] = std::from_chars(text->data(), end, value);
  if (ec != std::errc() || ptr != end) {
    fail(ErrorCode::InvalidArgument, "parameter '" + name + "' must be a non-negative integer");
  }
  return value;
}

inline std::size_t require_count(const ServiceRequest& req, const std::string& name) {
  const auto v = param_count(req, name);
  if (!v) fail(ErrorCode::InvalidArgument, "missing parameter '" + name + "'");
  return *v;
}

inline Json parse_body(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
  }
}

inline std::size_t json_count(const Json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

inline std::vector<std::size_t> json_counts(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    fail(ErrorCode::InvalidArgument, std::string("field '") + key + "' must be an array");
  }
  std::vector<std::size_t> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      fail(ErrorCode::InvalidArgument, std::string("entries of '") + key + "' must be integers >= 0");
    }
    out.push_back(v.get<std::size_t>());
  }
  return out;
}

inline bool wants_csv(const ServiceRequest& req) {
  const auto f = param(req, "format");
  if (!f || *f == "json") return false;
  if (*f == "csv") return true;
  fail(ErrorCode::InvalidArgument, "format must be json or csv");
}

inline std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start < path.size()) {
    const auto pos = path.find('/', start);
    const auto piece = path.substr(start, pos == path.npos ? path.npos : pos - start);
    if (!piece.empty()) parts.emplace_back(piece);
    if (pos == path.npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace detail

/// Rendering of an estimate shared by the CLI and the service.
inline std::string estimate_json(const EstimateResult& r) { return to_json(r).dump(2) + "\n"; }

/// HTTP front end. `handle` does all the work and is usable without a
/// socket; `bind` wires it into an httplib server.
class Service {
 public:
  explicit Service(ServiceOptions options = {})
      : options_(options), store_(options.store_capacity) {}

  SessionStore& store() noexcept { return store_; }

  ServiceResponse handle(const ServiceRequest& req) {
    try {
      return route(req);
    } catch (const Error& e) {
      const int status = e.code() == ErrorCode::NotFound ? 404 : 400;
      return error_response(status, std::string(e.name()), e.what());
    } catch (const Json::exception& e) {
      return error_response(400, "InvalidArgument", e.what());
    }
  }

  void bind(httplib::Server& server) {
    const auto adapt = [this](const httplib::Request& hreq, httplib::Response& hres) {
      ServiceRequest req;
      req.method = hreq.method;
      req.path = hreq.path;
      for (const auto& [key, value] : hreq.params) req.params.emplace(key, value);
      req.body = hreq.body;
      const auto res = handle(req);
      hres.status = res.status;
      hres.set_content(res.body, res.content_type);
    };
    server.Get(R"(/(samples|meancurve|gp-paths)(/.*)?)", adapt);
    server.Post(R"(/samples(/.*)?)", adapt);
  }

 private:
  static ServiceResponse error_response(int status, const std::string& code, const std::string& msg) {
    return {status, "application/json",
            Json{{"error", {{"code", code}, {"message", msg}}}}.dump() + "\n"};
  }

  static ServiceResponse json_response(const Json& j, int status = 200) {
    return {status, "application/json", j.dump() + "\n"};
  }

  static ServiceResponse csv_response(std::string body) {
    return {200, "text/csv", std::move(body)};
  }

  ServiceResponse route(const ServiceRequest& req) {
    const auto parts = detail::split_path(req.path);
    const bool get = req.method == "GET";
    const bool post = req.method == "POST";
    if (parts.size() == 1 && parts[0] == "samples" && post) return upload(req);
    if (parts.size() == 1 && parts[0] == "meancurve" && get) return meancurve(req);
    if (parts.size() == 1 && parts[0] == "gp-paths" && get) return gp_paths(req);
    if (parts.size() == 3 && parts[0] == "samples") {
      const auto entry = store_.get(parts[1]);
      if (parts[2] == "hill" && get) return hill(req, *entry);
      if (parts[2] == "hewe" && get) return hewe_curve(req, *entry);
      if (parts[2] == "estimate" && post) return estimate_route(req, *entry);
      if (parts[2] == "whatif" && post) return whatif(req, *entry);
    }
    if (parts.size() == 2 && parts[0] == "samples" && get) {
      const auto entry = store_.get(parts[1]);
      return json_response(summary(parts[1], entry->sample));
    }
    fail(ErrorCode::NotFound, "no route for " + req.method + " " + req.path);
  }

  static Json summary(const std::string& id, const OrderedSample& s) {
    return Json{{"id", id},
                {"n", s.size()},
                {"max", s.values().front()},
                {"min", s.values().back()}};
  }

  // Body is CSV/whitespace text, or JSON {"values": [...]}. ?column= picks
  // the column of text uploads (default 0).
  ServiceResponse upload(const ServiceRequest& req) {
    const auto first = req.body.find_first_not_of(" \t\r\n");
    OrderedSample sample = [&] {
      if (first != std::string::npos && req.body[first] == '{') {
        const auto j = detail::parse_body(req.body);
        if (!j.contains("values") || !j.at("values").is_array()) {
          fail(ErrorCode::ParseError, "JSON upload needs a 'values' array");
        }
        std::vector<double> values;
        for (const auto& v : j.at("values")) {
          if (!v.is_number()) fail(ErrorCode::ParseError, "'values' must be numbers");
          values.push_back(v.get<double>());
        }
        if (values.empty()) fail(ErrorCode::EmptyData, "no values uploaded");
        return OrderedSample::from_values(std::move(values));
      }
      std::istringstream in(req.body);
      return load_sample(in, parse_column_ref(detail::param(req, "column").value_or("0")));
    }();
    const auto id = store_.put(sample);
    return json_response(summary(id, sample), 201);
  }

  static ServiceResponse hill(const ServiceRequest& req, const SessionStore::Entry& entry) {
    const auto& s = entry.sample;
    if (s.size() < 2) fail(ErrorCode::InsufficientData, "need at least 2 values for a Hill curve");
    const auto kmax = detail::param_count(req, "kmax").value_or(s.size() - 1);
    const auto curve = hill_curve(s, kmax);
    if (detail::wants_csv(req)) return csv_response(hill_csv(curve));
    Json out = Json::array();
    for (const auto& [k, h] : curve) out.push_back(Json::array({k, h}));
    return json_response(out);
  }

  // theta1 and thetas are ranks (theta * k), like the endpoints elsewhere.
  static ServiceResponse hewe_curve(const ServiceRequest& req, const SessionStore::Entry& entry) {
    const auto& s = entry.sample;
    const auto k = detail::require_count(req, "k");
    const double delta = detail::param_double(req, "delta").value_or(0.0);
    if (!(delta >= 0.0)) fail(ErrorCode::DomainError, "delta must be >= 0");
    const auto first = detail::param_count(req, "theta1").value_or(1);
    const auto d = floor_count(delta * static_cast<double>(k));
    if (d + 2 > s.size()) fail(ErrorCode::InsufficientData, "delta removes the whole sample");
    const auto last = detail::param_count(req, "thetas").value_or(s.size() - d - 1);
    const auto grid = ThetaGrid::regular(k, first, last);
    const auto hv = hewe_vector(s, grid, delta);
    if (detail::wants_csv(req)) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({static_cast<double>(first + i), grid[i], hv.h[i]});
      }
      const std::vector<std::string> header{"rank", "theta", "hewe"};
      return csv_response(table_csv(header, rows));
    }
    Json points = Json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) points.push_back(Json::array({first + i, hv.h[i]}));
    return json_response(points);
  }

  SearchConfig search_from(const Json& body) const {
    auto base = SearchConfig::for_data(0);
    base.threads = options_.estimate_threads;
    return search_config_from_json(body, base);
  }

  ServiceResponse estimate_route(const ServiceRequest& req, const SessionStore::Entry& entry) {
    const auto body = detail::parse_body(req.body);
    const auto k = detail::json_count(body, "k");
    detail::json_count(body, "endpoint");
    const auto config = search_from(body);
    if (detail::wants_csv(req)) {
      const std::vector<SweepRow> row{{config.endpoint, estimate(entry.sample, k, config), {}, {}}};
      return csv_response(sweep_csv(row));
    }
    const auto key = "estimate:" + std::to_string(k) + ":" + to_json(config).dump();
    return {200, "application/json", SessionStore::cached(entry, key, [&] {
              return estimate_json(estimate(entry.sample, k, config));
            })};
  }

  ServiceResponse whatif(const ServiceRequest& req, const SessionStore::Entry& entry) {
    auto body = detail::parse_body(req.body);
    const auto k = detail::json_count(body, "k");
    const auto m = detail::json_count(body, "remove_top");
    const auto endpoints = detail::json_counts(body, "endpoints");
    body.erase("remove_top");
    body.erase("endpoints");
    const auto config = search_from(body);
    const auto w = what_if(entry.sample, k, config, endpoints, m);
    if (detail::wants_csv(req)) return csv_response(what_if_csv(w));
    return json_response(to_json(w));
  }

  static LimitParams limit_params_from(const ServiceRequest& req) {
    LimitParams p;
    p.alpha = detail::param_double(req, "alpha").value_or(1.0);
    p.delta = detail::param_double(req, "delta").value_or(0.0);
    p.rho = detail::param_double(req, "rho").value_or(0.0);
    p.lambda = detail::param_double(req, "lambda").value_or(0.0);
    p.k = detail::require_count(req, "k");
    p.validate();
    return p;
  }

  static ThetaGrid overlay_grid(const ServiceRequest& req, std::size_t k) {
    const auto first = detail::param_count(req, "theta1").value_or(1);
    const auto last = detail::param_count(req, "thetas").value_or(2 * k);
    if (last >= first && last - first > 100000) fail(ErrorCode::InvalidArgument, "grid too long");
    return ThetaGrid::regular(k, first, last);
  }

  static ServiceResponse meancurve(const ServiceRequest& req) {
    const auto p = limit_params_from(req);
    const auto grid = overlay_grid(req, p.k);
    const auto m = mean_curve(grid, p);
    if (detail::wants_csv(req)) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        rows.push_back({static_cast<double>(floor_count(grid[i] * static_cast<double>(p.k))), m[i]});
      }
      const std::vector<std::string> header{"rank", "mean"};
      return csv_response(table_csv(header, rows));
    }
    const auto first = detail::param_count(req, "theta1").value_or(1);
    Json points = Json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) points.push_back(Json::array({first + i, m[i]}));
    return json_response(points);
  }

  // Path i uses seed + i. `bias` is the amplitude in front of b.
  ServiceResponse gp_paths(const ServiceRequest& req) const {
    const auto p = limit_params_from(req);
    const auto grid = overlay_grid(req, p.k);
    const auto count = detail::param_count(req, "count").value_or(50);
    if (count < 1 || count > options_.max_gp_paths) {
      fail(ErrorCode::InvalidArgument,
           "count must be in [1, " + std::to_string(options_.max_gp_paths) + "]");
    }
    const double bias = detail::param_double(req, "bias").value_or(0.0);
    const auto mesh = detail::param_count(req, "mesh").value_or(1000);
    const auto seed = detail::param_count(req, "seed").value_or(1);
    std::vector<std::vector<double>> paths;
    for (std::size_t i = 0; i < count; ++i) {
      paths.push_back(simulate_limit_path(grid, p, bias, mesh, seed + i));
    }
    if (detail::wants_csv(req)) {
      std::vector<std::string> header{"rank"};
      for (std::size_t i = 0; i < count; ++i) header.push_back("path" + std::to_string(i));
      std::vector<std::vector<double>> rows;
      for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> row{static_cast<double>(floor_count(grid[j] * static_cast<double>(p.k)))};
        for (const auto& path : paths) row.push_back(path[j]);
        rows.push_back(std::move(row));
      }
      return csv_response(table_csv(header, rows));
    }
    std::vector<std::size_t> ranks(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) ranks[i] = floor_count(grid[i] * static_cast<double>(p.k));
    return json_response({{"rank", ranks}, {"paths", paths}});
  }

  ServiceOptions options_;
  SessionStore store_;
};

}  // namespace hewe
