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

// Trace ingestion: job-trace, query-log and machine-class CSV readers, window
// filtering and the per-hour statistics shown when choosing a replay period.
//
// Any malformed row rejects the whole file; nothing is silently skipped.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tracemix/csv.hpp"
#include "tracemix/error.hpp"
#include "tracemix/trace_model.hpp"

namespace tracemix {

inline const std::vector<std::string> kJobTraceColumns = {
    "job_id", "submit_ts_ms", "tenant_id", "exec_time_s",
    "cpu_usage", "mem_gb", "cpi", "mai"};
inline const std::vector<std::string> kQueryLogColumns = {"ts_ms", "tenant_id",
                                                          "query"};
inline const std::vector<std::string> kMachineClassColumns = {
    "class_id", "cores", "mem_gb", "count"};
// Optional trailing job-trace column used for machine-class filtering.
inline constexpr std::string_view kMachineClassColumn = "machine_class";

namespace detail {

inline void expect_width(const csv::Row& row, std::size_t width,
                         std::size_t line) {
  if (row.size() != width) {
    throw malformed_row(line, "expected " + std::to_string(width) +
                                  " columns, got " + std::to_string(row.size()));
  }
}

inline TimestampMs parse_timestamp(std::string_view s, std::size_t line,
                                   std::string_view column) {
  const auto ts = csv::parse_int(s, line, column);
  if (ts < 0) throw malformed_row(line, std::string(column) + " is negative");
  return ts;
}

}  // namespace detail

inline std::vector<AnonymousJob> parse_job_trace(const csv::Document& doc) {
  const std::size_t extra = csv::expect_header(doc.header, kJobTraceColumns);
  const bool has_machine =
      extra == 1 && doc.header.back() == kMachineClassColumn;
  if (extra != 0 && !has_machine) {
    throw Error(ErrorCode::kMissingHeader,
                "unexpected extra job-trace columns: '" + csv::join(doc.header) +
                    "'");
  }
  std::vector<AnonymousJob> jobs;
  jobs.reserve(doc.rows.size());
  std::unordered_set<std::string> seen;
  for (const auto& [line, row] : doc.rows) {
    detail::expect_width(row, doc.header.size(), line);
    AnonymousJob job;
    job.job_id = row[0];
    if (job.job_id.empty()) throw malformed_row(line, "empty job_id");
    if (!seen.insert(job.job_id).second) {
      throw malformed_row(line, "duplicate job_id '" + job.job_id + "'");
    }
    job.submit_ts_ms = detail::parse_timestamp(row[1], line, "submit_ts_ms");
    job.tenant_id = row[2];
    if (job.tenant_id.empty()) throw malformed_row(line, "empty tenant_id");
    std::array<double, kMetricDims> m{};
    for (std::size_t d = 0; d < kMetricDims; ++d) {
      m[d] = csv::parse_double(row[3 + d], line, kJobTraceColumns[3 + d]);
      if (m[d] < 0.0) {
        throw malformed_row(line, "negative " + kJobTraceColumns[3 + d]);
      }
    }
    job.metrics = MetricVector::from_array(m);
    if (has_machine) job.machine_class = row[8];
    jobs.push_back(std::move(job));
  }
  return jobs;
}

inline std::vector<AnonymousJob> parse_job_trace(const std::string& path) {
  return parse_job_trace(csv::parse_file(path));
}

inline std::vector<ServiceRequest> parse_query_log(const csv::Document& doc) {
  if (csv::expect_header(doc.header, kQueryLogColumns) != 0) {
    throw Error(ErrorCode::kMissingHeader,
                "unexpected query-log columns: '" + csv::join(doc.header) + "'");
  }
  std::vector<ServiceRequest> requests;
  requests.reserve(doc.rows.size());
  for (const auto& [line, row] : doc.rows) {
    detail::expect_width(row, kQueryLogColumns.size(), line);
    ServiceRequest r;
    r.ts_ms = detail::parse_timestamp(row[0], line, "ts_ms");
    r.tenant_id = row[1];
    if (r.tenant_id.empty()) throw malformed_row(line, "empty tenant_id");
    r.query = row[2];
    if (r.query.empty()) throw malformed_row(line, "empty query");
    requests.push_back(std::move(r));
  }
  return requests;
}

inline std::vector<ServiceRequest> parse_query_log(const std::string& path) {
  return parse_query_log(csv::parse_file(path));
}

inline std::vector<MachineClass> parse_machine_classes(const csv::Document& doc) {
  if (csv::expect_header(doc.header, kMachineClassColumns) != 0) {
    throw Error(ErrorCode::kMissingHeader, "unexpected machine-class columns: '" +
                                               csv::join(doc.header) + "'");
  }
  std::vector<MachineClass> classes;
  for (const auto& [line, row] : doc.rows) {
    detail::expect_width(row, kMachineClassColumns.size(), line);
    MachineClass m;
    m.class_id = row[0];
    const auto cores = csv::parse_int(row[1], line, "cores");
    m.mem_gb = csv::parse_double(row[2], line, "mem_gb");
    const auto count = csv::parse_int(row[3], line, "count");
    if (m.class_id.empty()) throw malformed_row(line, "empty class_id");
    if (cores <= 0) throw malformed_row(line, "cores must be positive");
    if (m.mem_gb <= 0.0) throw malformed_row(line, "mem_gb must be positive");
    if (count < 1) throw malformed_row(line, "count must be at least 1");
    m.cores = static_cast<int>(cores);
    m.count = static_cast<int>(count);
    classes.push_back(std::move(m));
  }
  return classes;
}

inline std::vector<MachineClass> parse_machine_classes(const std::string& path) {
  return parse_machine_classes(csv::parse_file(path));
}

inline std::string format_job_trace(const std::vector<AnonymousJob>& jobs) {
  const bool with_machine =
      std::any_of(jobs.begin(), jobs.end(),
                  [](const AnonymousJob& j) { return j.machine_class.has_value(); });
  std::ostringstream out;
  out.precision(17);
  csv::Row header = kJobTraceColumns;
  if (with_machine) header.emplace_back(kMachineClassColumn);
  out << csv::join(header) << '\n';
  for (const auto& j : jobs) {
    out << csv::quote(j.job_id) << ',' << j.submit_ts_ms << ','
        << csv::quote(j.tenant_id);
    for (double v : j.metrics.as_array()) out << ',' << v;
    if (with_machine) out << ',' << csv::quote(j.machine_class.value_or(""));
    out << '\n';
  }
  return out.str();
}

inline std::string format_query_log(const std::vector<ServiceRequest>& requests) {
  std::ostringstream out;
  out << csv::join(kQueryLogColumns) << '\n';
  for (const auto& r : requests) {
    out << r.ts_ms << ',' << csv::quote(r.tenant_id) << ',' << csv::quote(r.query)
        << '\n';
  }
  return out.str();
}

/// Keeps records with start_ms <= ts < end_ms, in their original order. For
/// jobs, a window machine_class additionally requires an equal job
/// machine_class; requests carry no machine information and ignore it.
template <typename Record>
std::vector<Record> filter_window(const std::vector<Record>& records,
                                  const TraceWindow& window) {
  if (!window.is_valid()) {
    throw Error(ErrorCode::kInvalidArgument, "window start must precede end");
  }
  std::vector<Record> out;
  for (const auto& r : records) {
    if (!window.contains(r.timestamp())) continue;
    if constexpr (requires { r.machine_class; }) {
      if (window.machine_class && r.machine_class != window.machine_class) continue;
    }
    out.push_back(r);
  }
  return out;
}

struct HourlyStats {
  std::int64_t hour_index = 0;
  double requests_per_sec = 0.0;
  double users_per_sec = 0.0;
  std::int64_t job_count = 0;
  double avg_cpu = 0.0;
  double avg_mem_gb = 0.0;

  friend bool operator==(const HourlyStats&, const HourlyStats&) = default;
};

namespace detail {

struct HourAccumulator {
  std::int64_t requests = 0;
  std::vector<std::pair<std::int64_t, std::string_view>> active;  // (second, tenant)
  std::int64_t jobs = 0;
  double cpu_sum = 0.0;
  double mem_sum = 0.0;

  HourlyStats finish(std::int64_t hour) {
    std::sort(active.begin(), active.end());
    const auto distinct =
        std::unique(active.begin(), active.end()) - active.begin();
    HourlyStats s;
    s.hour_index = hour;
    s.requests_per_sec = static_cast<double>(requests) / 3600.0;
    s.users_per_sec = static_cast<double>(distinct) / 3600.0;
    s.job_count = jobs;
    if (jobs > 0) {
      s.avg_cpu = cpu_sum / static_cast<double>(jobs);
      s.avg_mem_gb = mem_sum / static_cast<double>(jobs);
    }
    return s;
  }
};

}  // namespace detail

/// Per-hour statistics for hours [first_hour, first_hour + hours). Hour h
/// covers trace time [h*3600000, (h+1)*3600000). Records outside the range
/// are ignored.
///
/// users_per_sec is the mean, over the 3600 seconds of the hour, of the
/// number of distinct tenants issuing at least one request in that second.
inline std::vector<HourlyStats> hourly_stats_range(
    const std::vector<AnonymousJob>& jobs,
    const std::vector<ServiceRequest>& requests, std::int64_t first_hour,
    std::int64_t hours) {
  std::vector<detail::HourAccumulator> acc(static_cast<std::size_t>(
      std::max<std::int64_t>(hours, 0)));
  auto slot = [&](TimestampMs ts) -> detail::HourAccumulator* {
    const std::int64_t h = ts / kMsPerHour - first_hour;
    if (ts < 0 || h < 0 || h >= hours) return nullptr;
    return &acc[static_cast<std::size_t>(h)];
  };
  for (const auto& r : requests) {
    if (auto* a = slot(r.ts_ms)) {
      ++a->requests;
      a->active.emplace_back(r.ts_ms / 1000, r.tenant_id);
    }
  }
  for (const auto& j : jobs) {
    if (auto* a = slot(j.submit_ts_ms)) {
      ++a->jobs;
      a->cpu_sum += j.metrics.cpu_usage;
      a->mem_sum += j.metrics.mem_gb;
    }
  }
  std::vector<HourlyStats> out;
  out.reserve(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out.push_back(acc[i].finish(first_hour + static_cast<std::int64_t>(i)));
  }
  return out;
}

/// Statistics from hour 0 over at least `min_hours` hours; longer traces
/// extend the report to cover their last record.
inline std::vector<HourlyStats> hourly_stats(
    const std::vector<AnonymousJob>& jobs,
    const std::vector<ServiceRequest>& requests, std::int64_t min_hours = 24) {
  TimestampMs last = -1;
  for (const auto& j : jobs) last = std::max(last, j.submit_ts_ms);
  for (const auto& r : requests) last = std::max(last, r.ts_ms);
  const std::int64_t needed = last < 0 ? 0 : last / kMsPerHour + 1;
  return hourly_stats_range(jobs, requests, 0, std::max(min_hours, needed));
}

/// Statistics for every hour overlapping `window`.
inline std::vector<HourlyStats> hourly_stats(
    const std::vector<AnonymousJob>& jobs,
    const std::vector<ServiceRequest>& requests, const TraceWindow& window) {
  if (!window.is_valid()) {
    throw Error(ErrorCode::kInvalidArgument, "window start must precede end");
  }
  const std::int64_t first = std::max<TimestampMs>(window.start_ms, 0) / kMsPerHour;
  const std::int64_t last = (window.end_ms - 1) / kMsPerHour;
  return hourly_stats_range(filter_window(jobs, window),
                            filter_window(requests, window), first,
                            std::max<std::int64_t>(last - first + 1, 0));
}

inline std::string format_hourly_stats(const std::vector<HourlyStats>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "hour_index,requests_per_sec,users_per_sec,job_count,avg_cpu,avg_mem_gb\n";
  for (const auto& s : rows) {
    out << s.hour_index << ',' << s.requests_per_sec << ',' << s.users_per_sec
        << ',' << s.job_count << ',' << s.avg_cpu << ',' << s.avg_mem_gb << '\n';
  }
  return out.str();
}

inline void to_json(nlohmann::json& j, const HourlyStats& s) {
  j = {{"hour_index", s.hour_index},
       {"requests_per_sec", s.requests_per_sec},
       {"users_per_sec", s.users_per_sec},
       {"job_count", s.job_count},
       {"avg_cpu", s.avg_cpu},
       {"avg_mem_gb", s.avg_mem_gb}};
}

}  // namespace tracemix
