// Copyright 2026 The tracemix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// tracemix: command-line front end. Each subcommand reads its inputs, runs
// one pipeline stage and writes the serialized result to --out (default
// stdout).
//
//   stats    hourly request/job statistics (CSV)
//   fit      regression models from a profile catalog (JSON)
//   cluster  BIC-selected k-means over a job trace (JSON)
//   match    cluster-to-workload matching (JSON)
//   script   replay script from jobs, queries, clusters and matches (NDJSON)
//   replay   multi-tenant open-loop replay of a script (CSV report)
//   serve    HTTP service
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "tracemix/tracemix.hpp"

namespace {

using namespace tracemix;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write '" + path + "'");
  out << text;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return nlohmann::json::parse(in);
}

std::optional<TraceWindow> parse_window(const std::string& text,
                                        const std::string& machine) {
  if (text.empty()) {
    if (!machine.empty()) return TraceWindow::make(0, std::numeric_limits<TimestampMs>::max(), machine);
    return std::nullopt;
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "--window expects START_MS:END_MS");
  }
  const auto start = csv::parse_int(text.substr(0, colon), 0, "window start");
  const auto end = csv::parse_int(text.substr(colon + 1), 0, "window end");
  std::optional<std::string> m;
  if (!machine.empty()) m = machine;
  return TraceWindow::make(start, end, m);
}

template <typename Record>
std::vector<Record> maybe_filter(std::vector<Record> records,
                                 const std::optional<TraceWindow>& window) {
  return window ? filter_window(records, *window) : records;
}

int report_error(std::string_view code, const std::string& message) {
  nlohmann::json j = {{"code", code}, {"message", message}};
  std::cerr << "error: " << j.dump() << '\n';
  return 1;
}

Service* g_service = nullptr;

void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven mixed workload generation"};
  app.require_subcommand(1);

  std::string jobs_path, queries_path, profiles_path, models_path, clusters_path,
      matches_path, script_path, machines_path, out_path = "-";
  std::string window_spec, machine_class;

  // stats
  auto* stats = app.add_subcommand("stats", "Hourly request and job statistics (CSV)");
  std::int64_t hours = 24;
  stats->add_option("--jobs", jobs_path, "Job-trace CSV");
  stats->add_option("--queries", queries_path, "Query-log CSV");
  stats->add_option("--window", window_spec, "START_MS:END_MS");
  stats->add_option("--hours", hours, "Minimum hours reported without --window")
      ->check(CLI::NonNegativeNumber);
  stats->add_option("--out", out_path, "Output path, '-' for stdout");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit per-workload regression models (JSON)");
  fit->add_option("--profiles", profiles_path, "Profile CSV")->required();
  fit->add_option("--out", out_path, "Output path");

  // cluster
  auto* cluster = app.add_subcommand("cluster", "BIC k-means over anonymous jobs (JSON)");
  SelectOptions select;
  cluster->add_option("--jobs", jobs_path, "Job-trace CSV")->required();
  cluster->add_option("--window", window_spec, "START_MS:END_MS");
  cluster->add_option("--machine-class", machine_class, "Keep jobs of this machine class");
  cluster->add_option("--k-max", select.k_max, "Largest k tried (0: min(20, sqrt n))");
  cluster->add_option("--seed", select.seed, "Random seed");
  cluster->add_option("--restarts", select.restarts, "k-means++ restarts per k")
      ->check(CLI::PositiveNumber);
  cluster->add_option("--out", out_path, "Output path");

  // match
  auto* match = app.add_subcommand("match", "Match clusters to profiled workloads (JSON)");
  Thresholds thresholds;
  std::vector<double> sizes;
  std::uint64_t match_seed = 0;
  match->add_option("--clusters", clusters_path, "Clusters JSON from 'cluster'")->required();
  auto* models_opt = match->add_option("--models", models_path, "Models JSON from 'fit'");
  auto* profiles_opt = match->add_option("--profiles", profiles_path, "Profile CSV (fitted inline)");
  models_opt->excludes(profiles_opt);
  match->add_option("--theta1", thresholds.cv_max, "Cluster CV threshold")
      ->check(CLI::PositiveNumber);
  match->add_option("--theta2", thresholds.delta_max, "CV change threshold");
  match->add_option("--sizes", sizes, "Candidate input sizes in MB (default: training sizes)");
  match->add_option("--seed", match_seed, "Seed echoed in the output header");
  match->add_option("--out", out_path, "Output path");

  // script
  auto* script = app.add_subcommand("script", "Build the replay script (NDJSON)");
  script->add_option("--jobs", jobs_path, "Job-trace CSV")->required();
  script->add_option("--queries", queries_path, "Query-log CSV");
  script->add_option("--clusters", clusters_path, "Clusters JSON")->required();
  script->add_option("--matches", matches_path, "Matches JSON")->required();
  script->add_option("--window", window_spec, "START_MS:END_MS");
  script->add_option("--machine-class", machine_class, "Keep jobs of this machine class");
  script->add_option("--out", out_path, "Output path");

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a script open-loop (CSV report)");
  double scale_factor = 1.0;
  std::uint64_t replay_seed = 0;
  ReplayOptions ropts;
  std::string executor_kind = "mock", tmpl;
  replay->add_option("--script", script_path, "Replay script NDJSON")->required();
  replay->add_option("--scale-factor", scale_factor, "Tenant population multiplier")
      ->check(CLI::PositiveNumber);
  replay->add_option("--seed", replay_seed, "Random seed for scaling");
  replay->add_option("--compression", ropts.compression, "Trace ms per wall ms")
      ->check(CLI::PositiveNumber);
  replay->add_option("--start-delay", ropts.start_delay_ms, "Wall ms before trace time 0");
  replay->add_option("--tolerance", ropts.lateness_tolerance_ms, "p99 lateness target (ms)");
  replay->add_option("--executor", executor_kind, "mock | shell | http")
      ->check(CLI::IsMember({"mock", "shell", "http"}));
  replay->add_option("--template", tmpl, "Command or URL template");
  replay->add_option("--out", out_path, "Report CSV path");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  ServiceConfig config;
  std::string listen = "127.0.0.1:8080";
  serve->add_option("--listen", listen, "HOST:PORT");
  serve->add_option("--data-dir", config.data_dir, "Artifact directory");
  serve->add_option("--jobs", config.jobs_path, "Job-trace CSV");
  serve->add_option("--queries", config.queries_path, "Query-log CSV");
  serve->add_option("--machines", config.machines_path, "Machine-class CSV");
  serve->add_option("--profiles", config.profiles_path, "Default profile CSV");
  serve->add_option("--static-dir", config.static_dir, "Portal assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*stats) {
      const auto window = parse_window(window_spec, "");
      const auto jobs = jobs_path.empty() ? std::vector<AnonymousJob>{} : parse_job_trace(jobs_path);
      const auto reqs =
          queries_path.empty() ? std::vector<ServiceRequest>{} : parse_query_log(queries_path);
      const auto rows = window ? hourly_stats(jobs, reqs, *window) : hourly_stats(jobs, reqs, hours);
      write_output(out_path, format_hourly_stats(rows));
    } else if (*fit) {
      const auto models = fit_catalog(load_profiles(profiles_path));
      write_output(out_path, models_to_json(models).dump(2) + "\n");
    } else if (*cluster) {
      const auto jobs = maybe_filter(parse_job_trace(jobs_path), parse_window(window_spec, machine_class));
      if (jobs.empty()) throw Error(ErrorCode::kEmptyResult, "no jobs to cluster");
      const auto result = cluster_jobs(jobs, select);
      write_output(out_path, nlohmann::json(result).dump(2) + "\n");
    } else if (*match) {
      if (models_path.empty() && profiles_path.empty()) {
        std::cerr << "match: one of --models or --profiles is required\n";
        return 2;
      }
      const auto clustering = read_json(clusters_path).get<ClusteringResult>();
      const auto models = !models_path.empty() ? models_from_json(read_json(models_path))
                                               : fit_catalog(load_profiles(profiles_path));
      const auto results = match_clusters(clustering.clusters, models, sizes, thresholds);
      write_output(out_path, matches_to_json(results, thresholds, match_seed).dump(2) + "\n");
    } else if (*script) {
      const auto window = parse_window(window_spec, machine_class);
      const auto jobs = maybe_filter(parse_job_trace(jobs_path), window);
      const auto reqs = maybe_filter(
          queries_path.empty() ? std::vector<ServiceRequest>{} : parse_query_log(queries_path),
          window);
      const auto clustering = read_json(clusters_path).get<ClusteringResult>();
      const auto matches = matches_from_json(read_json(matches_path));
      write_output(out_path, format_replay_script(
                                 build_replay_script(jobs, clustering.clusters, matches, reqs)));
    } else if (*replay) {
      std::ifstream in(script_path);
      if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + script_path + "'");
      const auto parsed = read_replay_script(in);
      ScalePlan plan{scale_factor, replay_seed, 0};
      const auto schedules = scale_tenants(extract_tenants(parsed), plan);
      auto executor = make_executor(executor_kind, tmpl);
      const auto report = run_replay(schedules, *executor, ropts);
      std::ostringstream text;
      text << "# seed=" << replay_seed << " scale_factor=" << scale_factor
           << " compression=" << ropts.compression << " tenants=" << plan.resulting_tenants
           << '\n'
           << format_replay_report(report);
      write_output(out_path, text.str());
      auto summary = summary_to_json(report.summary);
      summary["seed"] = replay_seed;
      summary["tenants"] = plan.resulting_tenants;
      std::cerr << summary.dump() << '\n';
    } else if (*serve) {
      const auto colon = listen.rfind(':');
      if (colon == std::string::npos) {
        std::cerr << "serve: --listen expects HOST:PORT\n";
        return 2;
      }
      const auto port = static_cast<int>(csv::parse_int(listen.substr(colon + 1), 0, "port"));
      Service service(config);
      const int bound = service.bind(listen.substr(0, colon), port);
      std::cerr << "listening on " << listen.substr(0, colon) << ':' << bound << '\n';
      g_service = &service;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      service.serve();
      g_service = nullptr;
    }
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.detail());
  } catch (const nlohmann::json::exception& e) {
    return report_error("BadJson", e.what());
  } catch (const std::exception& e) {
    return report_error("Error", e.what());
  }
  return 0;
}
