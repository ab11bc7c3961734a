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

// Multi-tenant open-loop replay of a replay script.
//
// The script is split into one schedule per tenant (an end user or a job
// submitter). The tenant population can be scaled up by cloning schedules or
// down by sampling them. Replay then acts as one logical client per tenant:
// each event is handed to the executor at start + ts / compression,
// regardless of whether earlier submissions have finished.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tracemix/combiner.hpp"
#include "tracemix/error.hpp"
#include "tracemix/executors.hpp"
#include "tracemix/random.hpp"

namespace tracemix {

struct TenantSchedule {
  TenantId tenant_id;
  std::vector<ReplayEvent> events;

  friend bool operator==(const TenantSchedule&, const TenantSchedule&) = default;
};

/// Partitions the script's events by tenant. Schedules appear in order of
/// each tenant's first event; events keep script order.
inline std::vector<TenantSchedule> extract_tenants(const ReplayScript& script) {
  std::vector<TenantSchedule> out;
  std::unordered_map<std::string_view, std::size_t> index;
  for (const auto& e : script.events) {
    auto [it, inserted] = index.try_emplace(e.tenant_id, out.size());
    if (inserted) out.push_back({e.tenant_id, {}});
    out[it->second].events.push_back(e);
  }
  return out;
}

inline std::size_t count_events(const std::vector<TenantSchedule>& schedules) {
  std::size_t n = 0;
  for (const auto& s : schedules) n += s.events.size();
  return n;
}

struct ScalePlan {
  double factor = 1.0;
  std::uint64_t seed = 0;
  std::size_t resulting_tenants = 0;  // filled in by scale_tenants
};

/// round(factor * n) with halves rounded up.
inline std::size_t scaled_count(double factor, std::size_t n) {
  return static_cast<std::size_t>(std::floor(factor * static_cast<double>(n) + 0.5));
}

namespace detail {

inline TenantSchedule clone_schedule(const TenantSchedule& src, TenantId id) {
  TenantSchedule c{std::move(id), src.events};
  for (auto& e : c.events) e.tenant_id = c.tenant_id;
  return c;
}

}  // namespace detail

/// Scales the tenant population to round(factor * n).
///
/// Integer factors f keep every original and add f - 1 clones of each.
/// Other factors >= 1 keep every original and add clones of tenants drawn
/// uniformly with replacement. Factors < 1 keep a uniform sample without
/// replacement, in original order. Clones are renamed "<tenant>#<n>" and
/// keep the source's exact timestamps. Throws EmptyResult if the target is 0.
inline std::vector<TenantSchedule> scale_tenants(const std::vector<TenantSchedule>& schedules,
                                                 ScalePlan& plan) {
  if (!(plan.factor > 0.0) || !std::isfinite(plan.factor)) {
    throw Error(ErrorCode::kInvalidArgument, "scale factor must be positive");
  }
  const std::size_t n = schedules.size();
  const std::size_t target = scaled_count(plan.factor, n);
  if (target == 0) {
    throw Error(ErrorCode::kEmptyResult,
                "scaling " + std::to_string(n) + " tenants leaves none");
  }
  plan.resulting_tenants = target;
  Rng rng(plan.seed);

  if (target <= n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < target; ++i) {
      std::swap(idx[i], idx[i + rng.index(n - i)]);
    }
    idx.resize(target);
    std::sort(idx.begin(), idx.end());
    std::vector<TenantSchedule> out;
    out.reserve(target);
    for (auto i : idx) out.push_back(schedules[i]);
    return out;
  }

  std::unordered_set<std::string> taken;
  for (const auto& s : schedules) taken.insert(s.tenant_id);
  std::size_t serial = 0;
  auto fresh_id = [&](const TenantId& base) {
    std::string id;
    do {
      id = base + "#" + std::to_string(++serial);
    } while (!taken.insert(id).second);
    return id;
  };

  std::vector<TenantSchedule> out = schedules;
  out.reserve(target);
  const double whole = std::floor(plan.factor);
  if (whole == plan.factor) {
    const auto copies = static_cast<std::size_t>(whole) - 1;
    for (std::size_t c = 0; c < copies; ++c) {
      for (const auto& s : schedules) {
        out.push_back(detail::clone_schedule(s, fresh_id(s.tenant_id)));
      }
    }
  } else {
    while (out.size() < target) {
      const auto& src = schedules[rng.index(n)];
      out.push_back(detail::clone_schedule(src, fresh_id(src.tenant_id)));
    }
  }
  return out;
}

inline std::vector<TenantSchedule> scale_tenants(const std::vector<TenantSchedule>& schedules,
                                                 double factor, std::uint64_t seed = 0) {
  ScalePlan plan{factor, seed, 0};
  return scale_tenants(schedules, plan);
}

// ---------------------------------------------------------------------------
// Replay

struct ReplayOptions {
  double compression = 1.0;          // trace ms per wall ms
  double start_delay_ms = 10.0;       // wall delay before trace time 0
  double lateness_tolerance_ms = 50;  // p99 target reported in the summary
};

struct DispatchRecord {
  double scheduled_ms = 0.0;  // wall ms since replay start
  double actual_ms = 0.0;     // wall ms since replay start, at hand-off
  TimestampMs trace_ts_ms = 0;
  TenantId tenant_id;
  std::string kind;
  bool ok = true;
  std::string detail;

  double lateness_ms() const { return actual_ms - scheduled_ms; }
};

struct ReplaySummary {
  std::size_t count = 0;
  std::size_t failures = 0;
  double p50_lateness_ms = 0.0;
  double p99_lateness_ms = 0.0;
  double max_lateness_ms = 0.0;
  double tolerance_ms = 0.0;
  double wall_ms = 0.0;

  bool within_tolerance() const { return p99_lateness_ms <= tolerance_ms; }
};

struct ReplayReport {
  std::vector<DispatchRecord> records;  // sorted by (scheduled_ms, tenant)
  ReplaySummary summary;
};

/// Nearest-rank percentile of absolute lateness; 0 for an empty set.
inline double lateness_percentile(const std::vector<DispatchRecord>& records, double q) {
  if (records.empty()) return 0.0;
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(std::abs(r.lateness_ms()));
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline ReplaySummary summarize(const std::vector<DispatchRecord>& records,
                               double tolerance_ms) {
  ReplaySummary s;
  s.count = records.size();
  s.tolerance_ms = tolerance_ms;
  for (const auto& r : records) {
    if (!r.ok) ++s.failures;
    s.max_lateness_ms = std::max(s.max_lateness_ms, std::abs(r.lateness_ms()));
  }
  s.p50_lateness_ms = lateness_percentile(records, 0.50);
  s.p99_lateness_ms = lateness_percentile(records, 0.99);
  return s;
}

namespace detail {

// Worker pool that grows whenever a task arrives and no worker is idle, so a
// submission never waits for an earlier one to finish.
class ElasticPool {
 public:
  ElasticPool() = default;
  ElasticPool(const ElasticPool&) = delete;
  ElasticPool& operator=(const ElasticPool&) = delete;
  ~ElasticPool() { join(); }

  void submit(std::function<void()> task) {
    std::unique_lock lock(mu_);
    tasks_.push_back(std::move(task));
    if (idle_ < tasks_.size()) {
      workers_.emplace_back([this] { loop(); });
    }
    lock.unlock();
    cv_.notify_one();
  }

  /// Waits for every submitted task, then stops the workers.
  void join() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) {
      if (w.joinable()) w.join();
    }
    workers_.clear();
  }

  std::size_t peak_workers() const {
    std::lock_guard lock(mu_);
    return workers_.size();
  }

 private:
  void loop() {
    std::unique_lock lock(mu_);
    while (true) {
      ++idle_;
      cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
      --idle_;
      if (tasks_.empty()) return;  // stopping and drained
      auto task = std::move(tasks_.front());
      tasks_.pop_front();
      lock.unlock();
      task();
      lock.lock();
    }
  }

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  std::vector<std::thread> workers_;
  std::size_t idle_ = 0;
  bool stopping_ = false;
};

}  // namespace detail

/// Replays the schedules open-loop through `executor` and blocks until every
/// dispatched event has completed. Executor failures and exceptions are
/// recorded per event and never abort the run.
inline ReplayReport run_replay(const std::vector<TenantSchedule>& schedules,
                               Executor& executor, const ReplayOptions& opts = {}) {
  if (!(opts.compression > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "compression must be positive");
  }
  using Clock = std::chrono::steady_clock;
  const std::size_t total = count_events(schedules);
  std::vector<DispatchRecord> records(total);

  // One cursor per tenant; the heap always yields the earliest pending event
  // across tenants (ties by tenant index), so each tenant dispatches in order.
  struct Cursor {
    double due_ms;
    std::size_t tenant;
    std::size_t event;
    bool operator>(const Cursor& o) const {
      if (due_ms != o.due_ms) return due_ms > o.due_ms;
      if (tenant != o.tenant) return tenant > o.tenant;
      return event > o.event;
    }
  };
  auto due = [&](const ReplayEvent& e) {
    return opts.start_delay_ms + static_cast<double>(e.ts_ms) / opts.compression;
  };
  std::priority_queue<Cursor, std::vector<Cursor>, std::greater<>> heap;
  for (std::size_t t = 0; t < schedules.size(); ++t) {
    if (!schedules[t].events.empty()) heap.push({due(schedules[t].events[0]), t, 0});
  }

  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };
  {
    detail::ElasticPool pool;
    std::size_t slot = 0;
    while (!heap.empty()) {
      const Cursor cur = heap.top();
      heap.pop();
      const auto& sched = schedules[cur.tenant];
      const auto& event = sched.events[cur.event];
      std::this_thread::sleep_until(
          start + std::chrono::duration_cast<Clock::duration>(
                      std::chrono::duration<double, std::milli>(cur.due_ms)));
      auto& rec = records[slot++];
      rec.scheduled_ms = cur.due_ms;
      rec.trace_ts_ms = event.ts_ms;
      rec.tenant_id = sched.tenant_id;
      rec.kind = std::string(event.kind());
      rec.actual_ms = elapsed_ms();
      pool.submit([&executor, &event, &rec] {
        try {
          auto outcome = executor.execute(event);
          rec.ok = outcome.ok;
          rec.detail = std::move(outcome.detail);
        } catch (const std::exception& e) {
          rec.ok = false;
          rec.detail = e.what();
        }
      });
      if (cur.event + 1 < sched.events.size()) {
        heap.push({due(sched.events[cur.event + 1]), cur.tenant, cur.event + 1});
      }
    }
    pool.join();
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const DispatchRecord& a, const DispatchRecord& b) {
                     if (a.scheduled_ms != b.scheduled_ms) return a.scheduled_ms < b.scheduled_ms;
                     return a.tenant_id < b.tenant_id;
                   });
  ReplayReport report;
  report.summary = summarize(records, opts.lateness_tolerance_ms);
  report.summary.wall_ms = elapsed_ms();
  report.records = std::move(records);
  return report;
}

/// CSV: scheduled_ts_ms,actual_ts_ms,tenant,kind,outcome. Times are wall
/// milliseconds since replay start; outcome is "ok" or "failed: <detail>".
inline std::string format_replay_report(const ReplayReport& report) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "scheduled_ts_ms,actual_ts_ms,tenant,kind,outcome\n";
  for (const auto& r : report.records) {
    out << r.scheduled_ms << ',' << r.actual_ms << ',' << csv::quote(r.tenant_id) << ','
        << r.kind << ',' << csv::quote(r.ok ? "ok" : "failed: " + r.detail) << '\n';
  }
  return out.str();
}

inline nlohmann::json summary_to_json(const ReplaySummary& s) {
  return {{"count", s.count},
          {"failures", s.failures},
          {"p50_lateness_ms", s.p50_lateness_ms},
          {"p99_lateness_ms", s.p99_lateness_ms},
          {"max_lateness_ms", s.max_lateness_ms},
          {"tolerance_ms", s.tolerance_ms},
          {"within_tolerance", s.within_tolerance()},
          {"wall_ms", s.wall_ms}};
}

}  // namespace tracemix
