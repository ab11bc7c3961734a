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

// Synthetic traces and profiles with the same schemas as real inputs. Used
// for demos and tests; every generator is deterministic in its seed.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tracemix/random.hpp"
#include "tracemix/trace_model.hpp"

namespace tracemix::synth {

/// Ground-truth affine behaviour of an actual workload: metric d at size s
/// is intercept[d] + slope[d] * s.
struct WorkloadShape {
  std::string name;
  std::array<double, kMetricDims> intercept{};
  std::array<double, kMetricDims> slope{};

  MetricVector at(double size_mb) const {
    std::array<double, kMetricDims> m{};
    for (std::size_t d = 0; d < kMetricDims; ++d) {
      m[d] = std::max(0.0, intercept[d] + slope[d] * size_mb);
    }
    return MetricVector::from_array(m);
  }
};

inline std::vector<WorkloadShape> default_workloads() {
  // exec_time_s, cpu_usage, mem_gb, cpi, mai
  return {
      {"grep", {4.0, 1.5, 0.5, 0.9, 0.012}, {0.010, 0.0004, 0.0004, 0.00001, 0.000002}},
      {"sort", {6.0, 3.0, 1.0, 1.4, 0.030}, {0.045, 0.0020, 0.0030, 0.00004, 0.000010}},
      {"wordcount", {5.0, 6.0, 0.8, 1.1, 0.020}, {0.025, 0.0050, 0.0010, 0.00002, 0.000004}},
  };
}

/// `count` sizes evenly spaced over [lo, hi].
inline std::vector<double> linear_sizes(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(count == 1 ? lo
                             : lo + (hi - lo) * static_cast<double>(i) /
                                        static_cast<double>(count - 1));
  }
  return out;
}

/// One sample per (workload, size). Gaussian noise with standard deviation
/// `noise_of_range` times the metric's range over `sizes` is added, then
/// clamped at zero.
inline std::vector<ProfileSample> make_profiles(const std::vector<WorkloadShape>& workloads,
                                                const std::vector<double>& sizes,
                                                double noise_of_range, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<ProfileSample> out;
  for (const auto& w : workloads) {
    std::array<double, kMetricDims> range{};
    if (!sizes.empty()) {
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      for (std::size_t d = 0; d < kMetricDims; ++d) {
        range[d] = std::abs(w.slope[d] * (*hi - *lo));
      }
    }
    for (double s : sizes) {
      auto m = w.at(s).as_array();
      for (std::size_t d = 0; d < kMetricDims; ++d) {
        m[d] = std::max(0.0, m[d] + noise_of_range * range[d] * rng.normal());
      }
      out.push_back({{w.name, WorkloadKind::kAnalysis}, s, MetricVector::from_array(m)});
    }
  }
  return out;
}

/// A population of anonymous jobs sharing one characteristic vector.
struct JobGroup {
  MetricVector center;
  std::size_t count = 0;
  double spread = 0.02;
};

/// Jobs from all groups, submitted uniformly over [0, span_ms) by `tenants`
/// submitters ("u0".."u<tenants-1>"), returned in submission order with ids
/// "j0", "j1", ...
///
/// Each component gets Gaussian noise with standard deviation
/// `spread * scale[d]`, where scale[d] is the median of the group centers in
/// dimension d, so every group has the same absolute noise level.
inline std::vector<AnonymousJob> make_jobs(const std::vector<JobGroup>& groups,
                                           std::size_t tenants, TimestampMs span_ms,
                                           std::uint64_t seed) {
  std::array<double, kMetricDims> scale{};
  for (std::size_t d = 0; d < kMetricDims && !groups.empty(); ++d) {
    std::vector<double> v;
    for (const auto& g : groups) v.push_back(g.center[d]);
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    scale[d] = v[v.size() / 2];
  }
  Rng rng(seed);
  std::vector<AnonymousJob> jobs;
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.count; ++i) {
      auto m = g.center.as_array();
      for (std::size_t d = 0; d < kMetricDims; ++d) {
        m[d] = std::max(0.0, m[d] + g.spread * scale[d] * rng.normal());
      }
      AnonymousJob j;
      j.submit_ts_ms = static_cast<TimestampMs>(rng.index(static_cast<std::size_t>(span_ms)));
      j.tenant_id = "u" + std::to_string(rng.index(std::max<std::size_t>(tenants, 1)));
      j.metrics = MetricVector::from_array(m);
      jobs.push_back(std::move(j));
    }
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const AnonymousJob& a, const AnonymousJob& b) {
    return a.submit_ts_ms < b.submit_ts_ms;
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) jobs[i].job_id = "j" + std::to_string(i);
  return jobs;
}

/// `count` requests from `users` end users ("q0"..), uniformly over
/// [0, span_ms), in time order. Queries are drawn from a small vocabulary.
inline std::vector<ServiceRequest> make_queries(std::size_t count, std::size_t users,
                                                TimestampMs span_ms, std::uint64_t seed) {
  static const std::vector<std::string> kTerms = {
      "weather", "news", "map", "music", "video", "stock", "train", "recipe",
      "football", "translate", "hotel", "movie times", "c++ ranges", "a,b"};
  Rng rng(seed);
  std::vector<ServiceRequest> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ServiceRequest r;
    r.ts_ms = static_cast<TimestampMs>(rng.index(static_cast<std::size_t>(span_ms)));
    r.tenant_id = "q" + std::to_string(rng.index(std::max<std::size_t>(users, 1)));
    r.query = kTerms[rng.index(kTerms.size())];
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const ServiceRequest& a, const ServiceRequest& b) {
    return a.ts_ms < b.ts_ms;
  });
  return out;
}

inline std::vector<MachineClass> default_machines() {
  return {{"type-one", 2, 4.0, 40},  {"type-two", 4, 8.0, 32},
          {"type-three", 8, 16.0, 24}, {"type-four", 12, 24.0, 16},
          {"type-five", 16, 32.0, 8},  {"type-six", 24, 64.0, 4}};
}

/// Planted Gaussian blobs in D dimensions: `k` centers on a scaled simplex-like
/// lattice at least `separation` apart, `n` points round-robin, unit variance.
/// Returns points and their planted labels.
template <std::size_t D>
std::pair<std::vector<std::array<double, D>>, std::vector<std::size_t>> planted_blobs(
    std::size_t k, std::size_t n, double separation, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::array<double, D>> centers(k);
  // Centers e_i * s / sqrt(2) are pairwise exactly `separation` apart for i < D;
  // further centers are placed along the negative axes.
  for (std::size_t c = 0; c < k; ++c) {
    centers[c].fill(0.0);
    const double s = separation / std::sqrt(2.0);
    if (c < D) {
      centers[c][c] = s;
    } else {
      centers[c][c % D] = -s * static_cast<double>(1 + c / D);
    }
  }
  std::vector<std::array<double, D>> points;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    std::array<double, D> p = centers[c];
    for (auto& v : p) v += rng.normal();
    points.push_back(p);
    labels.push_back(c);
  }
  return {points, labels};
}

}  // namespace tracemix::synth
