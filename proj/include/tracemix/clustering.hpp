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

// Grouping of anonymous jobs in metric space: z-normalization, seeded
// k-means (k-means++ initialization, Lloyd iterations) and selection of k by
// the Bayesian Information Criterion over an exhaustive sweep k = 1..k_max.
//
// Everything is deterministic given the seed. Points are put in a canonical
// (lexicographic) order before seeding, so the result does not depend on the
// order in which jobs were supplied.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <future>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tracemix/error.hpp"
#include "tracemix/random.hpp"
#include "tracemix/trace_model.hpp"

namespace tracemix {

template <std::size_t D>
using PointT = std::array<double, D>;

using Point = PointT<kMetricDims>;

template <std::size_t D>
double squared_distance(const PointT<D>& a, const PointT<D>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Normalization

struct Normalization {
  Point mean{};
  Point std{};  // population standard deviation

  Point apply(const Point& raw) const {
    Point z{};
    for (std::size_t d = 0; d < kMetricDims; ++d) {
      z[d] = std[d] > 0.0 ? (raw[d] - mean[d]) / std[d] : 0.0;
    }
    return z;
  }

  Point invert(const Point& z) const {
    Point raw{};
    for (std::size_t d = 0; d < kMetricDims; ++d) raw[d] = z[d] * std[d] + mean[d];
    return raw;
  }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

/// Population mean and standard deviation per dimension (two-pass).
template <std::size_t D>
std::pair<PointT<D>, PointT<D>> population_moments(std::span<const PointT<D>> points) {
  PointT<D> mean{}, sd{};
  if (points.empty()) return {mean, sd};
  const double n = static_cast<double>(points.size());
  for (const auto& p : points) {
    for (std::size_t d = 0; d < D; ++d) mean[d] += p[d];
  }
  for (auto& m : mean) m /= n;
  for (const auto& p : points) {
    for (std::size_t d = 0; d < D; ++d) sd[d] += (p[d] - mean[d]) * (p[d] - mean[d]);
  }
  for (auto& s : sd) s = std::sqrt(s / n);
  return {mean, sd};
}

struct NormalizedPoints {
  std::vector<Point> points;
  Normalization normalization;
};

/// Z-scores every dimension; constant dimensions map to zero.
inline NormalizedPoints z_normalize(std::span<const AnonymousJob> jobs) {
  if (jobs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize an empty job set");
  }
  std::vector<Point> raw;
  raw.reserve(jobs.size());
  for (const auto& j : jobs) raw.push_back(j.metrics.as_array());
  auto [mean, sd] = population_moments<kMetricDims>(raw);
  NormalizedPoints out;
  out.normalization = {mean, sd};
  out.points.reserve(raw.size());
  for (const auto& p : raw) out.points.push_back(out.normalization.apply(p));
  return out;
}

// ---------------------------------------------------------------------------
// k-means

template <std::size_t D>
struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<PointT<D>> centroids;
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Within-cluster SSE after every centroid update; non-increasing.
  std::vector<double> sse_history;
};

template <std::size_t D>
std::size_t count_distinct(std::span<const PointT<D>> points) {
  std::vector<PointT<D>> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) -
                                  sorted.begin());
}

template <std::size_t D>
double within_cluster_sse(std::span<const PointT<D>> points,
                          std::span<const std::size_t> assignment,
                          std::span<const PointT<D>> centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    s += squared_distance(points[i], centroids[assignment[i]]);
  }
  return s;
}

namespace detail {

template <std::size_t D>
std::vector<PointT<D>> kmeanspp_seed(std::span<const PointT<D>> points,
                                     std::size_t k, Rng& rng) {
  std::vector<PointT<D>> centers;
  centers.reserve(k);
  centers.push_back(points[rng.index(points.size())]);
  std::vector<double> dist(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    dist[i] = squared_distance(points[i], centers[0]);
  }
  while (centers.size() < k) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    std::size_t pick = points.size() - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        run += dist[i];
        if (run > target && dist[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave `pick` on a zero-weight point; take the last
      // positive-weight one instead.
      while (dist[pick] == 0.0 && pick > 0) --pick;
    }
    centers.push_back(points[pick]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      dist[i] = std::min(dist[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

// Returns true if any assignment changed. A point only moves when another
// centroid is strictly closer; ties go to the lowest index on first assignment.
template <std::size_t D>
bool assign_points(std::span<const PointT<D>> points,
                   std::span<const PointT<D>> centroids,
                   std::vector<std::size_t>& assignment, bool initial) {
  bool changed = false;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = initial ? 0 : assignment[i];
    double best_d = squared_distance(points[i], centroids[best]);
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      const double d = squared_distance(points[i], centroids[c]);
      if (d < best_d) {
        best = c;
        best_d = d;
      }
    }
    if (initial || best != assignment[i]) {
      changed = changed || !initial;
      assignment[i] = best;
    }
  }
  return changed;
}

// Recomputes centroids as member means. Empty clusters take the point
// farthest from its own centroid (from a cluster with more than one member).
template <std::size_t D>
void update_centroids(std::span<const PointT<D>> points,
                      std::vector<std::size_t>& assignment,
                      std::vector<PointT<D>>& centroids) {
  const std::size_t k = centroids.size();
  auto recompute = [&] {
    std::vector<PointT<D>> sum(k, PointT<D>{});
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      auto& s = sum[assignment[i]];
      for (std::size_t d = 0; d < D; ++d) s[d] += points[i][d];
      ++count[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) continue;
      for (std::size_t d = 0; d < D; ++d) {
        centroids[c][d] = sum[c][d] / static_cast<double>(count[c]);
      }
    }
    return count;
  };
  auto count = recompute();
  bool repaired = false;
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] != 0) continue;
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (count[assignment[i]] < 2) continue;
      const double d = squared_distance(points[i], centroids[assignment[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far == points.size()) continue;
    --count[assignment[far]];
    assignment[far] = c;
    count[c] = 1;
    centroids[c] = points[far];
    repaired = true;
  }
  if (repaired) recompute();
}

}  // namespace detail

/// Lloyd's algorithm from a k-means++ seeding driven by `seed`. Stops when no
/// assignment changes or after `max_iters` reassignment rounds. Throws
/// KTooLarge when k exceeds the number of distinct points.
template <std::size_t D>
KMeansResult<D> kmeans(std::span<const PointT<D>> points, std::size_t k,
                       std::uint64_t seed, std::size_t max_iters = 100) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "no points");
  const std::size_t distinct = count_distinct<D>(points);
  if (k > distinct) {
    throw Error(ErrorCode::kKTooLarge, "k = " + std::to_string(k) + " exceeds " +
                                           std::to_string(distinct) +
                                           " distinct points");
  }
  Rng rng(seed);
  KMeansResult<D> r;
  r.centroids = detail::kmeanspp_seed<D>(points, k, rng);
  r.assignment.assign(points.size(), 0);
  detail::assign_points<D>(points, r.centroids, r.assignment, true);
  while (true) {
    detail::update_centroids<D>(points, r.assignment, r.centroids);
    r.sse_history.push_back(within_cluster_sse<D>(points, r.assignment, r.centroids));
    if (r.iterations >= max_iters) break;
    ++r.iterations;
    if (!detail::assign_points<D>(points, r.centroids, r.assignment, false)) {
      r.converged = true;
      break;
    }
  }
  r.sse = r.sse_history.back();
  return r;
}

// ---------------------------------------------------------------------------
// BIC

struct BicBreakdown {
  double log_likelihood = 0.0;
  double penalty = 0.0;
  double score = 0.0;  // log_likelihood - penalty; higher is better
};

/// (p/2) ln R with p = K(d+1)+1 free parameters.
inline double bic_penalty(std::size_t k, std::size_t n_points, std::size_t dims) {
  const double p = static_cast<double>(k * (dims + 1) + 1);
  return 0.5 * p * std::log(static_cast<double>(n_points));
}

/// BIC of a hard clustering read as a spherical Gaussian mixture with one
/// shared variance sigma^2 = SSE / (R - K):
///
///   l = sum_c R_c ln(R_c / R) - (R d / 2) ln(2 pi sigma^2) - (R - K) / 2
///
/// Requires K < R; throws DegenerateVariance when SSE is zero.
template <std::size_t D>
BicBreakdown bic_breakdown(std::span<const PointT<D>> points,
                           std::span<const std::size_t> assignment,
                           std::span<const PointT<D>> centroids) {
  const std::size_t n = points.size();
  const std::size_t k = centroids.size();
  if (k >= n) {
    throw Error(ErrorCode::kInvalidArgument,
                "BIC needs fewer clusters than points (K = " + std::to_string(k) +
                    ", R = " + std::to_string(n) + ")");
  }
  const double sse = within_cluster_sse<D>(points, assignment, centroids);
  if (!(sse > 0.0)) {
    throw Error(ErrorCode::kDegenerateVariance,
                "every point coincides with its centroid");
  }
  const double R = static_cast<double>(n);
  const double K = static_cast<double>(k);
  const double variance = sse / (R - K);
  std::vector<std::size_t> sizes(k, 0);
  for (auto a : assignment) ++sizes[a];
  double ll = 0.0;
  for (auto rc : sizes) {
    if (rc > 0) {
      const double r = static_cast<double>(rc);
      ll += r * std::log(r / R);
    }
  }
  ll -= 0.5 * R * static_cast<double>(D) * std::log(2.0 * std::numbers::pi * variance);
  ll -= 0.5 * (R - K);
  BicBreakdown b;
  b.log_likelihood = ll;
  b.penalty = bic_penalty(k, n, D);
  b.score = ll - b.penalty;
  return b;
}

template <std::size_t D>
double bic_score(std::span<const PointT<D>> points,
                 std::span<const std::size_t> assignment,
                 std::span<const PointT<D>> centroids) {
  return bic_breakdown<D>(points, assignment, centroids).score;
}

// ---------------------------------------------------------------------------
// Model selection

struct SelectOptions {
  std::size_t k_max = 0;  // 0 selects default_k_max(n)
  std::uint64_t seed = 0;
  std::size_t restarts = 8;
  std::size_t max_iters = 100;
  bool parallel = false;
};

/// min(20, floor(sqrt(n))), at least 1.
inline std::size_t default_k_max(std::size_t n) {
  const auto root = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  return std::max<std::size_t>(1, std::min<std::size_t>(20, root));
}

struct KScore {
  std::size_t k = 0;
  double sse = 0.0;
  std::optional<double> bic;  // absent when the fit has zero variance or K >= R
};

template <std::size_t D>
struct KSelection {
  std::size_t k = 1;
  std::vector<std::size_t> assignment;  // in caller's point order
  std::vector<PointT<D>> centroids;
  double sse = 0.0;
  std::optional<double> bic;
  std::vector<KScore> sweep;
};

inline std::uint64_t restart_seed(std::uint64_t seed, std::size_t k,
                                  std::size_t restart) {
  return mix_seed(mix_seed(seed, k), restart);
}

/// Best-of-`restarts` k-means for one k. The lowest SSE wins; ties go to the
/// lowest restart index, so parallel and sequential runs agree.
template <std::size_t D>
KMeansResult<D> best_kmeans(std::span<const PointT<D>> points, std::size_t k,
                            const SelectOptions& opts) {
  const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);
  std::vector<KMeansResult<D>> runs(restarts);
  auto run = [&](std::size_t r) {
    return kmeans<D>(points, k, restart_seed(opts.seed, k, r), opts.max_iters);
  };
  if (opts.parallel) {
    std::vector<std::future<KMeansResult<D>>> futures;
    for (std::size_t r = 0; r < restarts; ++r) {
      futures.push_back(std::async(std::launch::async, run, r));
    }
    for (std::size_t r = 0; r < restarts; ++r) runs[r] = futures[r].get();
  } else {
    for (std::size_t r = 0; r < restarts; ++r) runs[r] = run(r);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].sse < runs[best].sse) best = r;
  }
  return std::move(runs[best]);
}

/// Sweeps k = 1..k_max (capped at the number of distinct points), keeps the
/// best restart per k and returns the BIC-maximizing clustering (ties favour
/// smaller k). If no k has a defined BIC (a single point, or all points
/// equal) the k = 1 clustering is returned without a score.
///
/// Cluster labels are canonical: numbered in order of each cluster's first
/// member in lexicographic point order.
template <std::size_t D>
KSelection<D> select_k(std::span<const PointT<D>> points, const SelectOptions& opts) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "no points");
  const std::size_t n = points.size();
  const std::size_t k_max = opts.k_max == 0 ? default_k_max(n) : opts.k_max;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return points[a] < points[b];
  });
  std::vector<PointT<D>> canonical;
  canonical.reserve(n);
  for (auto i : order) canonical.push_back(points[i]);

  const std::size_t k_cap = std::min(k_max, count_distinct<D>(canonical));
  KSelection<D> sel;
  std::optional<KMeansResult<D>> chosen;
  for (std::size_t k = 1; k <= k_cap; ++k) {
    auto fit = best_kmeans<D>(canonical, k, opts);
    KScore score{k, fit.sse, std::nullopt};
    if (k < n && fit.sse > 0.0) {
      score.bic = bic_score<D>(canonical, fit.assignment, fit.centroids);
    }
    sel.sweep.push_back(score);
    const bool better = score.bic && (!sel.bic || *score.bic > *sel.bic);
    if (!chosen || better) {
      chosen = std::move(fit);
      sel.k = k;
      sel.bic = score.bic;
    }
  }

  // Canonical relabeling by first appearance.
  const std::size_t k = chosen->centroids.size();
  std::vector<std::size_t> relabel(k, k);
  std::size_t next = 0;
  for (auto a : chosen->assignment) {
    if (relabel[a] == k) relabel[a] = next++;
  }
  sel.centroids.assign(k, PointT<D>{});
  for (std::size_t c = 0; c < k; ++c) {
    if (relabel[c] < k) sel.centroids[relabel[c]] = chosen->centroids[c];
  }
  sel.k = next;
  sel.centroids.resize(next);
  sel.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sel.assignment[order[i]] = relabel[chosen->assignment[i]];
  }
  sel.sse = chosen->sse;
  return sel;
}

// ---------------------------------------------------------------------------
// Job clusters

struct Cluster {
  std::size_t cluster_id = 0;
  std::vector<JobId> member_job_ids;
  std::vector<MetricVector> member_metrics;  // aligned with member_job_ids
  MetricVector centroid;                     // raw-space mean
  Point mean{};
  Point std{};  // population

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct ClusteringResult {
  std::size_t k = 0;
  std::vector<Cluster> clusters;
  std::optional<double> bic;
  Normalization normalization;
  std::uint64_t seed = 0;
  std::size_t k_max = 0;
  std::size_t restarts = 0;
  std::vector<KScore> sweep;

  friend bool operator==(const ClusteringResult& a, const ClusteringResult& b) {
    return a.k == b.k && a.clusters == b.clusters && a.bic == b.bic &&
           a.normalization == b.normalization && a.seed == b.seed &&
           a.k_max == b.k_max && a.restarts == b.restarts;
  }
};

/// Builds a cluster from raw member vectors.
inline Cluster make_cluster(std::size_t id, std::vector<JobId> ids,
                            std::vector<MetricVector> metrics) {
  if (metrics.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster must have members");
  }
  Cluster c;
  c.cluster_id = id;
  c.member_job_ids = std::move(ids);
  c.member_metrics = std::move(metrics);
  std::vector<Point> raw;
  raw.reserve(c.member_metrics.size());
  for (const auto& m : c.member_metrics) raw.push_back(m.as_array());
  std::tie(c.mean, c.std) = population_moments<kMetricDims>(raw);
  c.centroid = MetricVector::from_array(c.mean);
  return c;
}

/// Z-normalizes the jobs, selects k by BIC and returns the raw-space clusters.
inline ClusteringResult cluster_jobs(std::span<const AnonymousJob> jobs,
                                     const SelectOptions& opts) {
  auto normalized = z_normalize(jobs);
  auto sel = select_k<kMetricDims>(normalized.points, opts);
  ClusteringResult result;
  result.k = sel.k;
  result.bic = sel.bic;
  result.normalization = normalized.normalization;
  result.seed = opts.seed;
  result.k_max = opts.k_max == 0 ? default_k_max(jobs.size()) : opts.k_max;
  result.restarts = opts.restarts;
  result.sweep = sel.sweep;
  std::vector<std::vector<JobId>> ids(sel.k);
  std::vector<std::vector<MetricVector>> metrics(sel.k);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    ids[sel.assignment[i]].push_back(jobs[i].job_id);
    metrics[sel.assignment[i]].push_back(jobs[i].metrics);
  }
  for (std::size_t c = 0; c < sel.k; ++c) {
    result.clusters.push_back(make_cluster(c, std::move(ids[c]), std::move(metrics[c])));
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline constexpr std::string_view kClustersSchema = "tracemix.clusters/1";

inline void to_json(nlohmann::json& j, const Cluster& c) {
  j = {{"cluster_id", c.cluster_id},
       {"member_job_ids", c.member_job_ids},
       {"member_metrics", c.member_metrics},
       {"centroid", c.centroid},
       {"mean", c.mean},
       {"std", c.std}};
}

inline void from_json(const nlohmann::json& j, Cluster& c) {
  c = make_cluster(j.at("cluster_id").get<std::size_t>(),
                   j.at("member_job_ids").get<std::vector<JobId>>(),
                   j.at("member_metrics").get<std::vector<MetricVector>>());
  if (c.member_job_ids.size() != c.member_metrics.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cluster member lists differ in length");
  }
}

inline void to_json(nlohmann::json& j, const KScore& s) {
  j = {{"k", s.k}, {"sse", s.sse}, {"bic", nullptr}};
  if (s.bic) j["bic"] = *s.bic;
}

inline void from_json(const nlohmann::json& j, KScore& s) {
  s.k = j.at("k").get<std::size_t>();
  s.sse = j.at("sse").get<double>();
  s.bic.reset();
  if (!j.at("bic").is_null()) s.bic = j.at("bic").get<double>();
}

inline void to_json(nlohmann::json& j, const ClusteringResult& r) {
  j = {{"schema", kClustersSchema},
       {"seed", r.seed},
       {"k", r.k},
       {"k_max", r.k_max},
       {"restarts", r.restarts},
       {"bic", nullptr},
       {"normalization",
        {{"mean", r.normalization.mean}, {"std", r.normalization.std}}},
       {"sweep", r.sweep},
       {"clusters", r.clusters}};
  if (r.bic) j["bic"] = *r.bic;
}

inline void from_json(const nlohmann::json& j, ClusteringResult& r) {
  if (j.value("schema", std::string()) != kClustersSchema) {
    throw Error(ErrorCode::kInvalidArgument, "not a clusters document");
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.k = j.at("k").get<std::size_t>();
  r.k_max = j.at("k_max").get<std::size_t>();
  r.restarts = j.at("restarts").get<std::size_t>();
  r.bic.reset();
  if (!j.at("bic").is_null()) r.bic = j.at("bic").get<double>();
  r.normalization.mean = j.at("normalization").at("mean").get<Point>();
  r.normalization.std = j.at("normalization").at("std").get<Point>();
  r.sweep = j.at("sweep").get<std::vector<KScore>>();
  r.clusters = j.at("clusters").get<std::vector<Cluster>>();
  if (r.clusters.size() != r.k) {
    throw Error(ErrorCode::kInvalidArgument, "k does not match cluster count");
  }
}

}  // namespace tracemix
