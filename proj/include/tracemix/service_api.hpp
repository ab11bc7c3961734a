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

// HTTP/JSON front end for the three-step flow: inspect machines and hourly
// trace statistics, match a window of the trace against the profile catalog
// (producing a replay script), then start and poll replay runs.
//
//   GET  /machines
//   GET  /stats[?start_ms=..&end_ms=..]
//   POST /match    {window, profile_path?, thresholds?, k_max?, seed?, restarts?}
//   POST /replay   {script_id, scale?, compression?, executor?, template?, seed?}
//   GET  /replay/{run_id}
//
// Errors are returned as {"code", "message", "detail"}. Handlers only
// serialize module outputs; the work happens in the pipeline modules.

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "tracemix/clustering.hpp"
#include "tracemix/combiner.hpp"
#include "tracemix/ingestion.hpp"
#include "tracemix/profiling.hpp"
#include "tracemix/replay.hpp"

namespace tracemix {

struct ServiceConfig {
  std::string jobs_path;
  std::string queries_path;
  std::string machines_path;
  std::string profiles_path;  // default catalog for POST /match
  std::string data_dir = "tracemix-data";
  std::string static_dir;     // optional portal assets, mounted at /
};

inline nlohmann::json error_body(std::string_view code, std::string_view message,
                                 std::string_view detail = {}) {
  return {{"code", code}, {"message", message}, {"detail", detail}};
}

/// Response payload of GET /machines.
inline nlohmann::json machines_to_json(const std::vector<MachineClass>& machines) {
  long total = 0;
  for (const auto& m : machines) total += m.count;
  return {{"machines", machines}, {"total_count", total}};
}

/// Response payload of GET /stats.
inline nlohmann::json stats_to_json(const std::vector<HourlyStats>& rows,
                                    const std::optional<TraceWindow>& window) {
  nlohmann::json j = {{"window", nullptr}, {"hours", rows}};
  if (window) j["window"] = *window;
  return j;
}

struct MatchRequest {
  TraceWindow window;
  std::string profile_path;
  Thresholds thresholds;
  SelectOptions select;
  std::vector<double> size_grid;
};

inline MatchRequest parse_match_request(const nlohmann::json& body,
                                        const std::string& default_profiles) {
  MatchRequest req;
  req.window = body.at("window").get<TraceWindow>();
  req.profile_path = body.value("profile_path", default_profiles);
  if (body.contains("thresholds")) {
    const auto& t = body.at("thresholds");
    req.thresholds.cv_max = t.value("theta1", req.thresholds.cv_max);
    req.thresholds.delta_max = t.value("theta2", req.thresholds.delta_max);
  }
  req.select.k_max = body.value("k_max", std::size_t{0});
  req.select.seed = body.value("seed", std::uint64_t{0});
  req.select.restarts = body.value("restarts", std::size_t{8});
  req.size_grid = body.value("size_grid", std::vector<double>{});
  return req;
}

/// Outcome of the matching step for one window.
struct MatchStage {
  std::optional<ClusteringResult> clustering;  // absent when the window has no jobs
  std::vector<MatchResult> matches;
  ReplayScript script;
};

inline MatchStage run_match_stage(const std::vector<AnonymousJob>& all_jobs,
                                  const std::vector<ServiceRequest>& all_requests,
                                  const std::vector<RegressionModel>& catalog,
                                  const MatchRequest& req) {
  if (catalog.empty()) throw Error(ErrorCode::kInvalidArgument, "profile catalog is empty");
  MatchStage stage;
  const auto jobs = filter_window(all_jobs, req.window);
  const auto requests = filter_window(all_requests, req.window);
  std::vector<Cluster> clusters;
  if (!jobs.empty()) {
    stage.clustering = cluster_jobs(jobs, req.select);
    clusters = stage.clustering->clusters;
    stage.matches = match_clusters(clusters, catalog, req.size_grid, req.thresholds);
  }
  stage.script = build_replay_script(jobs, clusters, stage.matches, requests);
  return stage;
}

/// Response payload of POST /match.
inline nlohmann::json match_stage_to_json(const MatchStage& stage,
                                          const std::string& script_id,
                                          const MatchRequest& req) {
  nlohmann::json j;
  j["script_id"] = script_id;
  j["window"] = req.window;
  j["clustering"] = nullptr;
  if (stage.clustering) {
    j["clustering"] = {{"k", stage.clustering->k},
                       {"bic", stage.clustering->bic ? nlohmann::json(*stage.clustering->bic)
                                                     : nlohmann::json(nullptr)},
                       {"seed", stage.clustering->seed}};
  }
  j["matches"] = matches_to_json(stage.matches, req.thresholds, req.select.seed);
  j["coverage"] = coverage_to_json(stage.script.coverage);
  j["event_count"] = stage.script.events.size();
  return j;
}

struct ReplayRequest {
  std::string script_id;
  double scale = 1.0;
  double compression = 1.0;
  std::string executor = "mock";
  std::string tmpl;
  std::uint64_t seed = 0;
};

inline ReplayRequest parse_replay_request(const nlohmann::json& body) {
  ReplayRequest r;
  r.script_id = body.at("script_id").get<std::string>();
  r.scale = body.value("scale", 1.0);
  r.compression = body.value("compression", 1.0);
  r.executor = body.value("executor", std::string("mock"));
  r.tmpl = body.value("template", std::string());
  r.seed = body.value("seed", std::uint64_t{0});
  if (!(r.scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale must be positive");
  if (!(r.compression > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "compression must be positive");
  }
  return r;
}

class Service {
 public:
  enum class RunState { kRunning, kDone, kFailed };

  explicit Service(ServiceConfig config) : config_(std::move(config)) {
    if (!config_.jobs_path.empty()) jobs_ = parse_job_trace(config_.jobs_path);
    if (!config_.queries_path.empty()) requests_ = parse_query_log(config_.queries_path);
    if (!config_.machines_path.empty()) machines_ = parse_machine_classes(config_.machines_path);
    std::filesystem::create_directories(std::filesystem::path(config_.data_dir) / "scripts");
    std::filesystem::create_directories(std::filesystem::path(config_.data_dir) / "runs");
    install_routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() {
    stop();
    std::vector<std::shared_ptr<Run>> runs;
    {
      std::lock_guard lock(mu_);
      for (auto& [id, run] : runs_) runs.push_back(run);
    }
    for (auto& r : runs) {
      if (r->worker.joinable()) r->worker.join();
    }
  }

  /// Binds to host:port (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    if (!server_.bind_to_port(host, port)) {
      throw Error(ErrorCode::kIoError, "cannot listen on " + host + ":" + std::to_string(port));
    }
    return port;
  }

  /// Serves until stop(); call after bind().
  void serve() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  static std::string to_string(RunState s) {
    switch (s) {
      case RunState::kRunning: return "running";
      case RunState::kDone: return "done";
      case RunState::kFailed: return "failed";
    }
    return "unknown";
  }

 private:
  struct Run {
    std::string id;
    std::string script_id;
    std::atomic<RunState> state{RunState::kRunning};
    std::mutex mu;
    nlohmann::json summary;
    std::string error;
    std::string report_path;
    std::thread worker;
  };

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Handler>
  static auto guarded(Handler h) {
    return [h](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const nlohmann::json::exception& e) {
        reply(res, 400, error_body("BadRequest", "invalid request body", e.what()));
      } catch (const Error& e) {
        reply(res, status_for(e.code()), error_body(tracemix::to_string(e.code()),
                                                   e.what(), e.detail()));
      } catch (const std::exception& e) {
        reply(res, 500, error_body("Internal", "internal error", e.what()));
      }
    };
  }

  static int status_for(ErrorCode code) {
    switch (code) {
      case ErrorCode::kNotFound: return 404;
      case ErrorCode::kInvalidArgument: return 400;
      default: return 422;
    }
  }

  void install_routes() {
    server_.Get("/machines", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, machines_to_json(machines_));
    }));

    server_.Get("/stats", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const bool has_start = req.has_param("start_ms");
      const bool has_end = req.has_param("end_ms");
      if (has_start != has_end) {
        throw Error(ErrorCode::kInvalidArgument, "start_ms and end_ms go together");
      }
      if (!has_start) {
        reply(res, 200, stats_to_json(hourly_stats(jobs_, requests_), std::nullopt));
        return;
      }
      TimestampMs start = 0, end = 0;
      try {
        start = csv::parse_int(req.get_param_value("start_ms"), 0, "start_ms");
        end = csv::parse_int(req.get_param_value("end_ms"), 0, "end_ms");
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidArgument, e.detail());
      }
      std::optional<std::string> machine;
      if (req.has_param("machine_class")) machine = req.get_param_value("machine_class");
      const auto window = TraceWindow::make(start, end, machine);
      reply(res, 200, stats_to_json(hourly_stats(jobs_, requests_, window), window));
    }));

    server_.Post("/match", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      MatchRequest mreq;
      try {
        mreq = parse_match_request(body, config_.profiles_path);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidArgument, e.detail());
      }
      if (mreq.profile_path.empty()) {
        throw Error(ErrorCode::kEmptyResult, "no profile catalog configured");
      }
      const auto catalog = fit_catalog(load_profiles(mreq.profile_path));
      if (catalog.empty()) throw Error(ErrorCode::kEmptyResult, "profile catalog is empty");
      auto stage = run_match_stage(jobs_, requests_, catalog, mreq);
      const auto id = store_script(stage.script);
      reply(res, 200, match_stage_to_json(stage, id, mreq));
    }));

    server_.Post("/replay", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto rreq = parse_replay_request(nlohmann::json::parse(req.body));
      auto script = find_script(rreq.script_id);
      auto executor = make_executor(rreq.executor, rreq.tmpl);
      auto run = start_run(rreq, std::move(script), std::move(executor));
      reply(res, 202, {{"run_id", run}, {"state", "running"}});
    }));

    server_.Get(R"(/replay/([A-Za-z0-9_-]+))",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 200, run_status(req.matches[1]));
                }));

    if (!config_.static_dir.empty()) server_.set_mount_point("/", config_.static_dir);
  }

  std::string store_script(const ReplayScript& script) {
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = "script-" + std::to_string(++script_serial_);
      scripts_[id] = std::make_shared<const ReplayScript>(script);
    }
    std::ofstream out(std::filesystem::path(config_.data_dir) / "scripts" / (id + ".ndjson"));
    write_replay_script(out, script);
    return id;
  }

  std::shared_ptr<const ReplayScript> find_script(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = scripts_.find(id);
    if (it == scripts_.end()) throw Error(ErrorCode::kNotFound, "unknown script '" + id + "'");
    return it->second;
  }

  std::string start_run(const ReplayRequest& rreq, std::shared_ptr<const ReplayScript> script,
                        std::unique_ptr<Executor> executor) {
    auto run = std::make_shared<Run>();
    {
      std::lock_guard lock(mu_);
      run->id = "run-" + std::to_string(++run_serial_);
      runs_[run->id] = run;
    }
    run->script_id = rreq.script_id;
    run->report_path =
        (std::filesystem::path(config_.data_dir) / "runs" / (run->id + ".csv")).string();
    run->worker = std::thread([run, rreq, script, exec = std::move(executor)]() mutable {
      try {
        ScalePlan plan{rreq.scale, rreq.seed, 0};
        const auto schedules = scale_tenants(extract_tenants(*script), plan);
        ReplayOptions opts;
        opts.compression = rreq.compression;
        const auto report = run_replay(schedules, *exec, opts);
        std::ofstream(run->report_path) << format_replay_report(report);
        std::lock_guard lock(run->mu);
        run->summary = summary_to_json(report.summary);
        run->summary["tenants"] = plan.resulting_tenants;
        run->state = RunState::kDone;
      } catch (const std::exception& e) {
        std::lock_guard lock(run->mu);
        run->error = e.what();
        run->state = RunState::kFailed;
      }
    });
    return run->id;
  }

  nlohmann::json run_status(const std::string& id) {
    std::shared_ptr<Run> run;
    {
      std::lock_guard lock(mu_);
      auto it = runs_.find(id);
      if (it == runs_.end()) throw Error(ErrorCode::kNotFound, "unknown run '" + id + "'");
      run = it->second;
    }
    std::lock_guard lock(run->mu);
    nlohmann::json j = {{"run_id", run->id},
                        {"script_id", run->script_id},
                        {"state", to_string(run->state.load())},
                        {"summary", nullptr},
                        {"error", nullptr}};
    if (run->state == RunState::kDone) {
      j["summary"] = run->summary;
      j["report_path"] = run->report_path;
    }
    if (run->state == RunState::kFailed) j["error"] = run->error;
    return j;
  }

  ServiceConfig config_;
  std::vector<AnonymousJob> jobs_;
  std::vector<ServiceRequest> requests_;
  std::vector<MachineClass> machines_;
  httplib::Server server_;

  std::mutex mu_;
  std::size_t script_serial_ = 0;
  std::size_t run_serial_ = 0;
  std::map<std::string, std::shared_ptr<const ReplayScript>> scripts_;
  std::map<std::string, std::shared_ptr<Run>> runs_;
};

}  // namespace tracemix
