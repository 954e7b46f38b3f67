#pragma once

// Command-line front end. `run_cli` returns the exit status instead of
// exiting so tests can drive it in-process.
//
// Exit codes: 0 success, 2 input error, 3 estimation failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "httplib.h"

#include "hewe/error.hpp"
#include "hewe/estimator.hpp"
#include "hewe/oracle.hpp"
#include "hewe/report.hpp"
#include "hewe/sample.hpp"
#include "hewe/service.hpp"
#include "hewe/simulator.hpp"

namespace hewe {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitEstimation = 3;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::EstimationFailed:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::BiasDirectionDegenerate:
      return kExitEstimation;
    default:
      return kExitInput;
  }
}

namespace detail {

struct CommonArgs {
  std::string input;
  std::string column = "0";
  std::string output;
  std::string format;
};

struct SearchArgs {
  std::size_t theta1 = 1;
  std::string alpha_range;
  std::string delta_range;
  std::optional<double> rho_min;
  std::size_t threads = 0;
  bool exhaustive = false;
};

inline OrderedSample read_input(const CommonArgs& args) {
  const auto column = parse_column_ref(args.column);
  if (args.input == "-") return load_sample(std::cin, column);
  std::ifstream in(args.input);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + args.input + "'");
  return load_sample(in, column);
}

inline void write_output(const CommonArgs& args, const std::string& text, std::ostream& out) {
  if (args.output.empty() || args.output == "-") {
    out << text;
    return;
  }
  std::ofstream file(args.output);
  if (!file) fail(ErrorCode::InvalidArgument, "cannot write '" + args.output + "'");
  file << text;
}

inline SearchConfig build_search(const SearchArgs& a) {
  auto c = SearchConfig::for_data(0);
  c.theta1_offset = a.theta1;
  c.threads = a.threads;
  c.exhaustive = a.exhaustive;
  if (!a.alpha_range.empty()) parse_range(a.alpha_range, c.alpha_min, c.alpha_max, &c.alpha_step);
  if (!a.delta_range.empty()) parse_range(a.delta_range, c.delta_min, c.delta_max, &c.delta_step);
  if (a.rho_min) c.rho_min = *a.rho_min;
  c.validate();
  return c;
}

inline void add_common(CLI::App* cmd, CommonArgs& a, const char* default_format) {
  cmd->add_option("--input,-i", a.input, "data file (CSV or whitespace columns; '-' for stdin)")
      ->required();
  cmd->add_option("--column,-c", a.column, "0-based column index or header name")
      ->capture_default_str();
  cmd->add_option("--output,-o", a.output, "output file (default stdout)");
  a.format = default_format;
  cmd->add_option("--format", a.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

inline void add_search(CLI::App* cmd, SearchArgs& a) {
  cmd->add_option("--theta1", a.theta1, "theta_1 * k (1 for data, 5 for simulations)")
      ->capture_default_str();
  cmd->add_option("--alpha-range", a.alpha_range, "lo:hi[:step], default 0.01:5:0.01");
  cmd->add_option("--delta-range", a.delta_range, "lo:hi[:step], default 0:10:0.001");
  cmd->add_option("--rho-min", a.rho_min, "lower end of the rho interval, default -20");
  cmd->add_option("--threads", a.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--exhaustive", a.exhaustive, "profile rho on every grid cell (slow)");
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Tail index estimation when the largest observations are missing"};
  app.require_subcommand(1);

  // hill
  CommonArgs hill_args;
  std::optional<std::size_t> kmax;
  auto* hill_cmd = app.add_subcommand("hill", "Hill estimates for k = 1..kmax");
  add_common(hill_cmd, hill_args, "csv");
  hill_cmd->add_option("--kmax,--k", kmax, "largest k (default n - 1)");

  // estimate
  CommonArgs est_args;
  SearchArgs est_search;
  std::size_t est_k = 0, est_endpoint = 0, est_remove = 0;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate alpha and the number of missing extremes");
  add_common(est_cmd, est_args, "json");
  add_search(est_cmd, est_search);
  est_cmd->add_option("--k", est_k, "k_n")->required();
  est_cmd->add_option("--endpoint", est_endpoint, "theta_s * k")->required();
  est_cmd->add_option("--remove-top", est_remove, "drop this many largest values first");

  // sweep
  CommonArgs sweep_args;
  SearchArgs sweep_search;
  std::size_t sweep_k = 0, sweep_remove = 0;
  std::string sweep_spec;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Estimates over endpoints; with --remove-top, paired before/after tables");
  add_common(sweep_cmd, sweep_args, "csv");
  add_search(sweep_cmd, sweep_search);
  sweep_cmd->add_option("--k", sweep_k, "k_n")->required();
  sweep_cmd->add_option("--endpoints", sweep_spec, "e1,e2,... or start:stop:step")->required();
  sweep_cmd->add_option("--remove-top", sweep_remove,
                        "artificially remove m more values; after-endpoints shift left by m");

  // experiment
  std::string exp_config, exp_output, exp_format = "json";
  std::optional<std::uint64_t> exp_seed;
  std::optional<std::size_t> exp_replicates, exp_threads;
  bool exp_summary_only = false;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a simulation study from a config file");
  exp_cmd->add_option("--config", exp_config, "key = value config file")->required();
  exp_cmd->add_option("--seed", exp_seed, "override the config seed");
  exp_cmd->add_option("--replicates", exp_replicates, "override the replicate count");
  exp_cmd->add_option("--threads", exp_threads, "override the worker count");
  exp_cmd->add_option("--output,-o", exp_output, "output file (default stdout)");
  exp_cmd->add_option("--format", exp_format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  exp_cmd->add_flag("--summary-only", exp_summary_only, "omit per-replicate rows from JSON");

  // serve
  std::string host = "127.0.0.1", static_dir;
  int port = 8080;
  std::size_t capacity = 64;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP service");
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--store-capacity", capacity, "samples kept in memory")->capture_default_str();
  serve_cmd->add_option("--static-dir", static_dir, "serve UI assets from this directory");

  // oracle (hidden)
  double o_alpha = 1.0, o_theta = 1.0, o_delta = 0.0;
  std::optional<double> o_theta2;
  std::size_t o_k = 1;
  auto* oracle_cmd = app.add_subcommand("oracle", "exact Pareto moments and quadrature covariance");
  oracle_cmd->group("");
  oracle_cmd->add_option("--alpha", o_alpha);
  oracle_cmd->add_option("--k", o_k);
  oracle_cmd->add_option("--theta", o_theta);
  oracle_cmd->add_option("--theta2", o_theta2);
  oracle_cmd->add_option("--delta", o_delta);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help surfaces as a ParseError with exit code 0.
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*hill_cmd) {
      const auto sample = read_input(hill_args);
      if (sample.size() < 2) fail(ErrorCode::InsufficientData, "need at least 2 values");
      const auto curve = hill_curve(sample, kmax.value_or(sample.size() - 1));
      if (hill_args.format == "csv") {
        write_output(hill_args, hill_csv(curve), out);
      } else {
        Json j = Json::array();
        for (const auto& [k, h] : curve) j.push_back(Json::array({k, h}));
        write_output(hill_args, j.dump() + "\n", out);
      }
      return kExitOk;
    }

    if (*est_cmd) {
      auto config = build_search(est_search);
      config.endpoint = est_endpoint;
      const auto sample = read_input(est_args).remove_top(est_remove);
      const auto result = estimate(sample, est_k, config);
      if (est_args.format == "json") {
        write_output(est_args, estimate_json(result), out);
      } else {
        const std::vector<SweepRow> row{{est_endpoint, result, {}, {}}};
        write_output(est_args, sweep_csv(row), out);
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const auto config = build_search(sweep_search);
      const auto endpoints = parse_endpoint_list(sweep_spec);
      if (endpoints.empty()) fail(ErrorCode::InvalidArgument, "no endpoints");
      const auto sample = read_input(sweep_args);
      std::size_t succeeded = 0;
      std::string text;
      if (sweep_remove > 0) {
        const auto w = what_if(sample, sweep_k, config, endpoints, sweep_remove);
        for (const auto& r : w.after) succeeded += r.result.has_value();
        text = sweep_args.format == "csv" ? what_if_csv(w) : to_json(w).dump() + "\n";
      } else {
        const auto rows = sweep_endpoints(sample, sweep_k, config, endpoints);
        for (const auto& r : rows) succeeded += r.result.has_value();
        text = sweep_args.format == "csv" ? sweep_csv(rows)
                                          : to_json(std::span<const SweepRow>(rows)).dump() + "\n";
      }
      write_output(sweep_args, text, out);
      return succeeded > 0 ? kExitOk : kExitEstimation;
    }

    if (*exp_cmd) {
      std::ifstream in(exp_config);
      if (!in) fail(ErrorCode::InvalidArgument, "cannot open '" + exp_config + "'");
      auto config = parse_experiment_config(in);
      if (exp_seed) config.seed = *exp_seed;
      if (exp_replicates) config.replicates = *exp_replicates;
      if (exp_threads) config.threads = *exp_threads;
      const auto report = run_experiment(config);
      const auto text = exp_format == "csv" ? experiment_csv(report)
                                            : to_json(report, !exp_summary_only).dump(2) + "\n";
      write_output(CommonArgs{"", "0", exp_output, exp_format}, text, out);
      return kExitOk;
    }

    if (*serve_cmd) {
      ServiceOptions options;
      options.store_capacity = capacity;
      Service service(options);
      httplib::Server server;
      service.bind(server);
      if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
        fail(ErrorCode::InvalidArgument, "static dir '" + static_dir + "' not found");
      }
      err << "listening on " << host << ":" << port << "\n";
      if (!server.listen(host, port)) fail(ErrorCode::InvalidArgument, "cannot bind " + host);
      return kExitOk;
    }

    if (*oracle_cmd) {
      Json j{{"mean_exact", oracle::pareto_hewe_mean_exact(o_alpha, o_k, o_theta, o_delta)},
             {"var_exact", oracle::pareto_hewe_var_exact(o_alpha, o_k, o_theta, o_delta)}};
      if (o_theta2) j["cov_numeric"] = oracle::cov_numeric(o_theta, *o_theta2, o_delta);
      out << j.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error [" << e.name() << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return kExitInput;
}

}  // namespace hewe
