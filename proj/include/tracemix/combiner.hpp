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

// Combines clustered anonymous jobs with the profiled actual workloads.
//
// A cluster is matched to an actual job (workload type + input size) when
//   (i)  the cluster's coefficient of variation is below theta1, and
//   (ii) adding the job's predicted metric vector to the cluster changes that
//        CV by less than theta2.
// Among feasible candidates the smallest CV change wins. Matched clusters
// then turn their anonymous jobs into typed analysis-job submissions in the
// replay script, merged with the service requests of the query log.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tracemix/clustering.hpp"
#include "tracemix/error.hpp"
#include "tracemix/profiling.hpp"
#include "tracemix/trace_model.hpp"

namespace tracemix {

// ---------------------------------------------------------------------------
// Coefficient of variation

template <std::size_t D>
struct CvReportT {
  std::array<double, D> per_dim_cv{};
  // False where the mean is zero but the spread is not; such dimensions are
  // left out of the aggregate.
  std::array<bool, D> defined{};
  double aggregate_cv = 0.0;
};

using CvReport = CvReportT<kMetricDims>;

/// Per-dimension sigma/mu (population sigma) over `members` plus the optional
/// `extra` point, and their mean over defined dimensions. A dimension with
/// mu == 0 and sigma == 0 has CV 0.
template <std::size_t D>
CvReportT<D> coefficient_of_variation(std::span<const PointT<D>> members,
                                      const std::optional<PointT<D>>& extra = {}) {
  if (members.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster must have members");
  }
  std::vector<PointT<D>> pts(members.begin(), members.end());
  if (extra) pts.push_back(*extra);
  const auto [mean, sd] = population_moments<D>(pts);
  CvReportT<D> r;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t d = 0; d < D; ++d) {
    if (mean[d] != 0.0) {
      r.per_dim_cv[d] = sd[d] / std::abs(mean[d]);
      r.defined[d] = true;
    } else if (sd[d] == 0.0) {
      r.per_dim_cv[d] = 0.0;
      r.defined[d] = true;
    } else {
      r.per_dim_cv[d] = 0.0;
      r.defined[d] = false;
    }
    if (r.defined[d]) {
      sum += r.per_dim_cv[d];
      ++defined;
    }
  }
  r.aggregate_cv = defined ? sum / static_cast<double>(defined) : 0.0;
  return r;
}

inline CvReport cluster_cv(const Cluster& cluster,
                           const std::optional<MetricVector>& extra = {}) {
  std::vector<Point> pts;
  pts.reserve(cluster.member_metrics.size());
  for (const auto& m : cluster.member_metrics) pts.push_back(m.as_array());
  std::optional<Point> e;
  if (extra) e = extra->as_array();
  return coefficient_of_variation<kMetricDims>(pts, e);
}

// ---------------------------------------------------------------------------
// Matching

enum class MatchStatus { kMatched, kDispersionTooHigh, kNoFeasibleCandidate };

inline std::string to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::kMatched: return "Matched";
    case MatchStatus::kDispersionTooHigh: return "DispersionTooHigh";
    case MatchStatus::kNoFeasibleCandidate: return "NoFeasibleCandidate";
  }
  return "Unknown";
}

inline MatchStatus parse_match_status(const std::string& s) {
  if (s == "Matched") return MatchStatus::kMatched;
  if (s == "DispersionTooHigh") return MatchStatus::kDispersionTooHigh;
  if (s == "NoFeasibleCandidate") return MatchStatus::kNoFeasibleCandidate;
  throw Error(ErrorCode::kInvalidArgument, "unknown match status '" + s + "'");
}

struct MatchedWorkload {
  WorkloadType workload;
  double input_size_mb = 0.0;

  friend bool operator==(const MatchedWorkload&, const MatchedWorkload&) = default;
};

struct MatchResult {
  std::size_t cluster_id = 0;
  std::size_t cluster_size = 0;
  MatchStatus status = MatchStatus::kNoFeasibleCandidate;
  std::optional<MatchedWorkload> matched;
  double cv_before = 0.0;
  // For unmatched clusters with candidates: the candidate with the smallest
  // delta, feasible or not. With no candidates evaluated: cv_before, delta 0.
  double cv_after = 0.0;
  double delta_cv = 0.0;
  std::size_t candidates_evaluated = 0;
  std::array<double, kMetricDims> per_dim_cv_before{};

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

struct Thresholds {
  double cv_max = 0.5;     // condition (i)
  double delta_max = 0.1;  // condition (ii)
};

struct Candidate {
  WorkloadType workload;
  double input_size_mb = 0.0;
  MetricVector predicted;
};

struct CandidateScore {
  Candidate candidate;
  double cv_after = 0.0;
  double delta_cv = 0.0;
  bool feasible = false;
};

/// Total order used to pick among candidates: delta_cv, then workload name,
/// then input size.
inline bool candidate_before(const CandidateScore& a, const CandidateScore& b) {
  if (a.delta_cv != b.delta_cv) return a.delta_cv < b.delta_cv;
  if (a.candidate.workload.name != b.candidate.workload.name) {
    return a.candidate.workload.name < b.candidate.workload.name;
  }
  return a.candidate.input_size_mb < b.candidate.input_size_mb;
}

/// Every (model, size) pair with its predicted metric vector.
inline std::vector<Candidate> enumerate_candidates(
    const std::vector<RegressionModel>& catalog, const std::vector<double>& size_grid) {
  std::vector<Candidate> out;
  out.reserve(catalog.size() * size_grid.size());
  for (const auto& model : catalog) {
    for (double size : size_grid) {
      out.push_back({model.workload, size, predict_metrics(model, size)});
    }
  }
  return out;
}

inline std::vector<CandidateScore> score_candidates(
    const Cluster& cluster, double cv_before, const std::vector<Candidate>& candidates,
    const Thresholds& t) {
  std::vector<CandidateScore> scores;
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    CandidateScore s;
    s.candidate = c;
    s.cv_after = cluster_cv(cluster, c.predicted).aggregate_cv;
    s.delta_cv = s.cv_after - cv_before;
    s.feasible = s.delta_cv < t.delta_max;
    scores.push_back(std::move(s));
  }
  return scores;
}

inline MatchResult match_cluster(const Cluster& cluster,
                                 const std::vector<Candidate>& candidates,
                                 const Thresholds& t = {}) {
  const auto before = cluster_cv(cluster);
  MatchResult r;
  r.cluster_id = cluster.cluster_id;
  r.cluster_size = cluster.member_job_ids.size();
  r.cv_before = before.aggregate_cv;
  r.cv_after = r.cv_before;
  r.per_dim_cv_before = before.per_dim_cv;
  if (!(r.cv_before < t.cv_max)) {
    r.status = MatchStatus::kDispersionTooHigh;
    return r;
  }
  const auto scores = score_candidates(cluster, r.cv_before, candidates, t);
  r.candidates_evaluated = scores.size();
  const CandidateScore* best = nullptr;
  const CandidateScore* best_feasible = nullptr;
  for (const auto& s : scores) {
    if (!best || candidate_before(s, *best)) best = &s;
    if (s.feasible && (!best_feasible || candidate_before(s, *best_feasible))) {
      best_feasible = &s;
    }
  }
  const CandidateScore* pick = best_feasible ? best_feasible : best;
  if (pick) {
    r.cv_after = pick->cv_after;
    r.delta_cv = pick->delta_cv;
  }
  if (best_feasible) {
    r.status = MatchStatus::kMatched;
    r.matched = MatchedWorkload{best_feasible->candidate.workload,
                                best_feasible->candidate.input_size_mb};
  } else {
    r.status = MatchStatus::kNoFeasibleCandidate;
  }
  return r;
}

/// Matches every cluster independently against the catalog evaluated on
/// `size_grid` (empty selects the catalog's training sizes). The same actual
/// job may match several clusters.
inline std::vector<MatchResult> match_clusters(const std::vector<Cluster>& clusters,
                                               const std::vector<RegressionModel>& catalog,
                                               std::vector<double> size_grid = {},
                                               const Thresholds& t = {}) {
  if (catalog.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "profile catalog is empty");
  }
  if (size_grid.empty()) size_grid = default_size_grid(catalog);
  if (size_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "size grid is empty");
  for (double s : size_grid) {
    if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sizes must be positive");
  }
  const auto candidates = enumerate_candidates(catalog, size_grid);
  std::vector<MatchResult> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(match_cluster(c, candidates, t));
  return out;
}

inline void to_json(nlohmann::json& j, const MatchResult& r) {
  j = {{"cluster_id", r.cluster_id},
       {"cluster_size", r.cluster_size},
       {"status", to_string(r.status)},
       {"matched", nullptr},
       {"cv_before", r.cv_before},
       {"cv_after", r.cv_after},
       {"delta_cv", r.delta_cv},
       {"candidates_evaluated", r.candidates_evaluated},
       {"per_dim_cv_before", r.per_dim_cv_before}};
  if (r.matched) {
    j["matched"] = {{"workload", r.matched->workload},
                    {"input_size_mb", r.matched->input_size_mb}};
  }
}

inline void from_json(const nlohmann::json& j, MatchResult& r) {
  r.cluster_id = j.at("cluster_id").get<std::size_t>();
  r.cluster_size = j.at("cluster_size").get<std::size_t>();
  r.status = parse_match_status(j.at("status").get<std::string>());
  r.matched.reset();
  if (!j.at("matched").is_null()) {
    r.matched = MatchedWorkload{j.at("matched").at("workload").get<WorkloadType>(),
                                j.at("matched").at("input_size_mb").get<double>()};
  }
  r.cv_before = j.at("cv_before").get<double>();
  r.cv_after = j.at("cv_after").get<double>();
  r.delta_cv = j.at("delta_cv").get<double>();
  r.candidates_evaluated = j.at("candidates_evaluated").get<std::size_t>();
  r.per_dim_cv_before = j.at("per_dim_cv_before").get<std::array<double, kMetricDims>>();
}

inline constexpr std::string_view kMatchesSchema = "tracemix.matches/1";

inline nlohmann::json matches_to_json(const std::vector<MatchResult>& matches,
                                      const Thresholds& t, std::uint64_t seed) {
  return {{"schema", kMatchesSchema},
          {"seed", seed},
          {"theta1", t.cv_max},
          {"theta2", t.delta_max},
          {"matches", matches}};
}

inline std::vector<MatchResult> matches_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kMatchesSchema) {
    throw Error(ErrorCode::kInvalidArgument, "not a matches document");
  }
  return j.at("matches").get<std::vector<MatchResult>>();
}

// ---------------------------------------------------------------------------
// Replay script

struct ServiceRequestPayload {
  std::string query;
  friend bool operator==(const ServiceRequestPayload&, const ServiceRequestPayload&) = default;
};

struct AnalysisJobPayload {
  std::string workload;
  double input_size_mb = 0.0;
  friend bool operator==(const AnalysisJobPayload&, const AnalysisJobPayload&) = default;
};

struct ReplayEvent {
  TimestampMs ts_ms = 0;
  TenantId tenant_id;
  std::variant<ServiceRequestPayload, AnalysisJobPayload> payload;

  bool is_service() const {
    return std::holds_alternative<ServiceRequestPayload>(payload);
  }
  std::string_view kind() const {
    return is_service() ? "service_request" : "analysis_job";
  }

  friend bool operator==(const ReplayEvent&, const ReplayEvent&) = default;
};

struct CoverageReport {
  std::size_t total_jobs = 0;
  std::size_t matched_jobs = 0;
  std::size_t dropped_jobs = 0;  // jobs of unmatched clusters or of no cluster
  std::size_t unclustered_jobs = 0;
  std::size_t service_requests = 0;
  std::vector<std::size_t> unmatched_clusters;

  friend bool operator==(const CoverageReport&, const CoverageReport&) = default;
};

struct ReplayScript {
  std::string epoch = "trace-relative milliseconds";
  CoverageReport coverage;
  std::vector<ReplayEvent> events;

  friend bool operator==(const ReplayScript&, const ReplayScript&) = default;
};

/// Turns the jobs of matched clusters into analysis-job events (original
/// timestamp and tenant, matched workload and size) and every request into a
/// service-request event. Jobs of unmatched clusters, and jobs absent from
/// every cluster, are dropped and counted in the coverage report.
///
/// Events are sorted by timestamp; ties keep input order with jobs (in trace
/// order) ahead of requests (in log order).
inline ReplayScript build_replay_script(const std::vector<AnonymousJob>& jobs,
                                        const std::vector<Cluster>& clusters,
                                        const std::vector<MatchResult>& matches,
                                        const std::vector<ServiceRequest>& requests) {
  std::unordered_map<std::size_t, const MatchResult*> by_cluster;
  for (const auto& m : matches) by_cluster[m.cluster_id] = &m;
  std::unordered_map<std::string_view, std::size_t> cluster_of;
  for (const auto& c : clusters) {
    for (const auto& id : c.member_job_ids) cluster_of[id] = c.cluster_id;
  }

  ReplayScript script;
  auto& cov = script.coverage;
  cov.total_jobs = jobs.size();
  cov.service_requests = requests.size();
  for (const auto& c : clusters) {
    auto it = by_cluster.find(c.cluster_id);
    if (it == by_cluster.end() || !it->second->matched) {
      cov.unmatched_clusters.push_back(c.cluster_id);
    }
  }
  std::sort(cov.unmatched_clusters.begin(), cov.unmatched_clusters.end());

  script.events.reserve(jobs.size() + requests.size());
  for (const auto& job : jobs) {
    auto c = cluster_of.find(job.job_id);
    if (c == cluster_of.end()) {
      ++cov.unclustered_jobs;
      ++cov.dropped_jobs;
      continue;
    }
    auto m = by_cluster.find(c->second);
    if (m == by_cluster.end() || !m->second->matched) {
      ++cov.dropped_jobs;
      continue;
    }
    ++cov.matched_jobs;
    script.events.push_back(
        {job.submit_ts_ms, job.tenant_id,
         AnalysisJobPayload{m->second->matched->workload.name,
                            m->second->matched->input_size_mb}});
  }
  for (const auto& r : requests) {
    script.events.push_back({r.ts_ms, r.tenant_id, ServiceRequestPayload{r.query}});
  }
  std::stable_sort(script.events.begin(), script.events.end(),
                   [](const ReplayEvent& a, const ReplayEvent& b) {
                     return a.ts_ms < b.ts_ms;
                   });
  return script;
}

inline constexpr std::string_view kReplaySchema = "tracemix.replay/1";

inline nlohmann::ordered_json event_to_json(const ReplayEvent& e) {
  nlohmann::ordered_json j;
  j["ts_ms"] = e.ts_ms;
  j["tenant"] = e.tenant_id;
  j["kind"] = std::string(e.kind());
  if (const auto* job = std::get_if<AnalysisJobPayload>(&e.payload)) {
    j["workload"] = job->workload;
    j["input_size_mb"] = job->input_size_mb;
  } else {
    j["query"] = std::get<ServiceRequestPayload>(e.payload).query;
  }
  return j;
}

inline ReplayEvent event_from_json(const nlohmann::json& j) {
  ReplayEvent e;
  e.ts_ms = j.at("ts_ms").get<TimestampMs>();
  e.tenant_id = j.at("tenant").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "analysis_job") {
    e.payload = AnalysisJobPayload{j.at("workload").get<std::string>(),
                                   j.at("input_size_mb").get<double>()};
  } else if (kind == "service_request") {
    e.payload = ServiceRequestPayload{j.at("query").get<std::string>()};
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown event kind '" + kind + "'");
  }
  return e;
}

inline nlohmann::ordered_json coverage_to_json(const CoverageReport& c) {
  nlohmann::ordered_json j;
  j["total_jobs"] = c.total_jobs;
  j["matched_jobs"] = c.matched_jobs;
  j["dropped_jobs"] = c.dropped_jobs;
  j["unclustered_jobs"] = c.unclustered_jobs;
  j["service_requests"] = c.service_requests;
  j["unmatched_clusters"] = c.unmatched_clusters;
  return j;
}

inline CoverageReport coverage_from_json(const nlohmann::json& j) {
  CoverageReport c;
  c.total_jobs = j.at("total_jobs").get<std::size_t>();
  c.matched_jobs = j.at("matched_jobs").get<std::size_t>();
  c.dropped_jobs = j.at("dropped_jobs").get<std::size_t>();
  c.unclustered_jobs = j.at("unclustered_jobs").get<std::size_t>();
  c.service_requests = j.at("service_requests").get<std::size_t>();
  c.unmatched_clusters = j.at("unmatched_clusters").get<std::vector<std::size_t>>();
  return c;
}

/// Newline-delimited JSON: one header line, then one line per event.
inline void write_replay_script(std::ostream& out, const ReplayScript& script) {
  nlohmann::ordered_json header;
  header["schema"] = kReplaySchema;
  header["epoch"] = script.epoch;
  header["event_count"] = script.events.size();
  header["coverage"] = coverage_to_json(script.coverage);
  out << header.dump() << '\n';
  for (const auto& e : script.events) out << event_to_json(e).dump() << '\n';
}

inline std::string format_replay_script(const ReplayScript& script) {
  std::ostringstream out;
  write_replay_script(out, script);
  return out.str();
}

inline ReplayScript read_replay_script(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw Error(ErrorCode::kMissingHeader, "replay script has no header line");
  }
  ReplayScript script;
  std::size_t expected = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.value("schema", std::string()) != kReplaySchema) {
      throw Error(ErrorCode::kMissingHeader, "unsupported replay script schema");
    }
    script.epoch = header.at("epoch").get<std::string>();
    script.coverage = coverage_from_json(header.at("coverage"));
    expected = header.at("event_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMissingHeader, std::string("bad header: ") + e.what());
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      script.events.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw malformed_row(line_no, e.what());
    } catch (const Error& e) {
      throw malformed_row(line_no, e.detail());
    }
    if (script.events.size() > 1 &&
        script.events.back().ts_ms < script.events[script.events.size() - 2].ts_ms) {
      throw malformed_row(line_no, "events are not sorted by ts_ms");
    }
  }
  if (script.events.size() != expected) {
    throw Error(ErrorCode::kMalformedRow,
                "header announces " + std::to_string(expected) + " events, found " +
                    std::to_string(script.events.size()));
  }
  return script;
}

inline ReplayScript parse_replay_script(const std::string& text) {
  std::istringstream in(text);
  return read_replay_script(in);
}

}  // namespace tracemix
