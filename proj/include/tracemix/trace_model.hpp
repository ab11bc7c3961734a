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

// Core value types shared by every stage of the pipeline. Nothing in here
// performs I/O; JSON conversions are provided for the serialized formats.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracemix/error.hpp"

namespace tracemix {

using JobId = std::string;
using TenantId = std::string;
using TimestampMs = std::int64_t;

inline constexpr std::size_t kMetricDims = 5;
inline constexpr TimestampMs kMsPerHour = 3'600'000;

/// The five workload characteristics of a job, in fixed order:
/// execution time (s), CPU usage (CPU-seconds per wall second, i.e. average
/// core occupancy), memory (GB), cycles per instruction, and memory accesses
/// per instruction.
struct MetricVector {
  double exec_time_s = 0.0;
  double cpu_usage = 0.0;
  double mem_gb = 0.0;
  double cpi = 0.0;
  double mai = 0.0;

  static constexpr std::array<const char*, kMetricDims> kNames = {
      "exec_time_s", "cpu_usage", "mem_gb", "cpi", "mai"};

  std::array<double, kMetricDims> as_array() const {
    return {exec_time_s, cpu_usage, mem_gb, cpi, mai};
  }

  static MetricVector from_array(const std::array<double, kMetricDims>& a) {
    return {a[0], a[1], a[2], a[3], a[4]};
  }

  double operator[](std::size_t dim) const { return as_array()[dim]; }

  bool is_valid() const {
    for (double v : as_array()) {
      if (!std::isfinite(v) || v < 0.0) return false;
    }
    return true;
  }

  friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

struct AnonymousJob {
  JobId job_id;
  TimestampMs submit_ts_ms = 0;
  TenantId tenant_id;
  MetricVector metrics;
  // Set only when the trace carries the optional machine_class column.
  std::optional<std::string> machine_class;

  TimestampMs timestamp() const { return submit_ts_ms; }

  friend bool operator==(const AnonymousJob&, const AnonymousJob&) = default;
};

struct ServiceRequest {
  TimestampMs ts_ms = 0;
  TenantId tenant_id;
  std::string query;

  TimestampMs timestamp() const { return ts_ms; }

  friend bool operator==(const ServiceRequest&, const ServiceRequest&) = default;
};

enum class WorkloadKind { kAnalysis, kService };

struct WorkloadType {
  std::string name;
  WorkloadKind kind = WorkloadKind::kAnalysis;

  friend bool operator==(const WorkloadType&, const WorkloadType&) = default;
};

/// One measurement of an actual workload at a given input size (MB).
struct ProfileSample {
  WorkloadType workload;
  double input_size_mb = 0.0;
  MetricVector metrics;

  friend bool operator==(const ProfileSample&, const ProfileSample&) = default;
};

/// Half-open interval [start_ms, end_ms) of trace time.
struct TraceWindow {
  TimestampMs start_ms = 0;
  TimestampMs end_ms = 0;
  std::optional<std::string> machine_class;

  bool is_valid() const { return start_ms < end_ms; }
  bool contains(TimestampMs ts) const { return start_ms <= ts && ts < end_ms; }

  static TraceWindow make(TimestampMs start, TimestampMs end,
                          std::optional<std::string> machine = std::nullopt) {
    if (start >= end) {
      throw Error(ErrorCode::kInvalidArgument,
                  "window start " + std::to_string(start) +
                      " must be before end " + std::to_string(end));
    }
    return {start, end, std::move(machine)};
  }

  friend bool operator==(const TraceWindow&, const TraceWindow&) = default;
};

struct MachineClass {
  std::string class_id;
  int cores = 1;
  double mem_gb = 0.0;
  int count = 1;

  friend bool operator==(const MachineClass&, const MachineClass&) = default;
};

/// Euclidean distance between two metric vectors.
inline double metric_distance(const MetricVector& a, const MetricVector& b) {
  const auto x = a.as_array();
  const auto y = b.as_array();
  double sum = 0.0;
  for (std::size_t i = 0; i < kMetricDims; ++i) {
    const double d = x[i] - y[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const MetricVector& m) {
  j = nlohmann::json::array({m.exec_time_s, m.cpu_usage, m.mem_gb, m.cpi, m.mai});
}

inline void from_json(const nlohmann::json& j, MetricVector& m) {
  if (!j.is_array() || j.size() != kMetricDims) {
    throw Error(ErrorCode::kInvalidArgument, "metric vector must have 5 entries");
  }
  std::array<double, kMetricDims> a{};
  for (std::size_t i = 0; i < kMetricDims; ++i) a[i] = j.at(i).get<double>();
  m = MetricVector::from_array(a);
}

inline std::string to_string(WorkloadKind kind) {
  return kind == WorkloadKind::kService ? "service" : "analysis";
}

inline WorkloadKind parse_workload_kind(const std::string& s) {
  if (s == "analysis") return WorkloadKind::kAnalysis;
  if (s == "service") return WorkloadKind::kService;
  throw Error(ErrorCode::kInvalidArgument, "unknown workload kind '" + s + "'");
}

inline void to_json(nlohmann::json& j, const WorkloadType& w) {
  j = {{"name", w.name}, {"kind", to_string(w.kind)}};
}

inline void from_json(const nlohmann::json& j, WorkloadType& w) {
  w.name = j.at("name").get<std::string>();
  w.kind = parse_workload_kind(j.value("kind", std::string("analysis")));
}

inline void to_json(nlohmann::json& j, const AnonymousJob& job) {
  j = {{"job_id", job.job_id},
       {"submit_ts_ms", job.submit_ts_ms},
       {"tenant_id", job.tenant_id},
       {"metrics", job.metrics}};
  if (job.machine_class) j["machine_class"] = *job.machine_class;
}

inline void from_json(const nlohmann::json& j, AnonymousJob& job) {
  job.job_id = j.at("job_id").get<std::string>();
  job.submit_ts_ms = j.at("submit_ts_ms").get<TimestampMs>();
  job.tenant_id = j.at("tenant_id").get<std::string>();
  job.metrics = j.at("metrics").get<MetricVector>();
  job.machine_class.reset();
  if (j.contains("machine_class")) {
    job.machine_class = j.at("machine_class").get<std::string>();
  }
}

inline void to_json(nlohmann::json& j, const ServiceRequest& r) {
  j = {{"ts_ms", r.ts_ms}, {"tenant_id", r.tenant_id}, {"query", r.query}};
}

inline void from_json(const nlohmann::json& j, ServiceRequest& r) {
  r.ts_ms = j.at("ts_ms").get<TimestampMs>();
  r.tenant_id = j.at("tenant_id").get<std::string>();
  r.query = j.at("query").get<std::string>();
}

inline void to_json(nlohmann::json& j, const ProfileSample& s) {
  j = {{"workload", s.workload},
       {"input_size_mb", s.input_size_mb},
       {"metrics", s.metrics}};
}

inline void from_json(const nlohmann::json& j, ProfileSample& s) {
  s.workload = j.at("workload").get<WorkloadType>();
  s.input_size_mb = j.at("input_size_mb").get<double>();
  s.metrics = j.at("metrics").get<MetricVector>();
}

inline void to_json(nlohmann::json& j, const TraceWindow& w) {
  j = {{"start_ms", w.start_ms}, {"end_ms", w.end_ms}};
  if (w.machine_class) j["machine_class"] = *w.machine_class;
}

inline void from_json(const nlohmann::json& j, TraceWindow& w) {
  std::optional<std::string> machine;
  if (j.contains("machine_class") && !j.at("machine_class").is_null()) {
    machine = j.at("machine_class").get<std::string>();
  }
  w = TraceWindow::make(j.at("start_ms").get<TimestampMs>(),
                        j.at("end_ms").get<TimestampMs>(), std::move(machine));
}

inline void to_json(nlohmann::json& j, const MachineClass& m) {
  j = {{"class_id", m.class_id},
       {"cores", m.cores},
       {"mem_gb", m.mem_gb},
       {"count", m.count}};
}

inline void from_json(const nlohmann::json& j, MachineClass& m) {
  m.class_id = j.at("class_id").get<std::string>();
  m.cores = j.at("cores").get<int>();
  m.mem_gb = j.at("mem_gb").get<double>();
  m.count = j.at("count").get<int>();
}

}  // namespace tracemix
