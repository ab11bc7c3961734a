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

// Profile catalog of actual workloads and the per-metric regression models
// that predict a workload's characteristics from its input size.
//
// One model is fitted per workload type. Inside a model every metric is an
// independent ordinary-least-squares line `metric = intercept + slope * size`
// (size in MB). Workload type is categorical, so it selects the model rather
// than entering the regression as a feature.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tracemix/csv.hpp"
#include "tracemix/error.hpp"
#include "tracemix/trace_model.hpp"

namespace tracemix {

inline const std::vector<std::string> kProfileColumns = {
    "workload", "input_size_mb", "exec_time_s", "cpu_usage",
    "mem_gb", "cpi", "mai"};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double residual_variance = 0.0;  // SSR / (n - 2); 0 when n == 2
  double r_squared = 1.0;          // 1 for a constant response

  double operator()(double x) const { return intercept + slope * x; }

  friend bool operator==(const LinearFit&, const LinearFit&) = default;
};

struct RegressionModel {
  WorkloadType workload;
  std::array<LinearFit, kMetricDims> metrics{};
  std::size_t sample_count = 0;
  std::vector<double> training_sizes;  // distinct, ascending

  friend bool operator==(const RegressionModel&, const RegressionModel&) = default;
};

inline std::vector<ProfileSample> load_profiles(const csv::Document& doc) {
  if (csv::expect_header(doc.header, kProfileColumns) != 0) {
    throw Error(ErrorCode::kMissingHeader,
                "unexpected profile columns: '" + csv::join(doc.header) + "'");
  }
  std::vector<ProfileSample> samples;
  samples.reserve(doc.rows.size());
  for (const auto& [line, row] : doc.rows) {
    if (row.size() != kProfileColumns.size()) {
      throw malformed_row(line, "expected " +
                                    std::to_string(kProfileColumns.size()) +
                                    " columns, got " + std::to_string(row.size()));
    }
    ProfileSample s;
    s.workload = {row[0], WorkloadKind::kAnalysis};
    if (s.workload.name.empty()) throw malformed_row(line, "empty workload name");
    s.input_size_mb = csv::parse_double(row[1], line, "input_size_mb");
    if (s.input_size_mb <= 0.0) throw malformed_row(line, "input_size_mb must be > 0");
    std::array<double, kMetricDims> m{};
    for (std::size_t d = 0; d < kMetricDims; ++d) {
      m[d] = csv::parse_double(row[2 + d], line, kProfileColumns[2 + d]);
      if (m[d] < 0.0) throw malformed_row(line, "negative " + kProfileColumns[2 + d]);
    }
    s.metrics = MetricVector::from_array(m);
    samples.push_back(std::move(s));
  }
  return samples;
}

inline std::vector<ProfileSample> load_profiles(const std::string& path) {
  return load_profiles(csv::parse_file(path));
}

inline std::string format_profiles(const std::vector<ProfileSample>& samples) {
  std::ostringstream out;
  out.precision(17);
  out << csv::join(kProfileColumns) << '\n';
  for (const auto& s : samples) {
    out << csv::quote(s.workload.name) << ',' << s.input_size_mb;
    for (double v : s.metrics.as_array()) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

/// Samples grouped by workload name, keyed in name order; within a group the
/// original sample order is kept.
inline std::map<std::string, std::vector<ProfileSample>> group_by_workload(
    const std::vector<ProfileSample>& samples) {
  std::map<std::string, std::vector<ProfileSample>> groups;
  for (const auto& s : samples) groups[s.workload.name].push_back(s);
  return groups;
}

namespace detail {

// Least squares on centered data. Sums are accumulated in sorted order so
// the result does not depend on how the samples were ordered.
inline LinearFit fit_line(std::vector<std::pair<double, double>> xy) {
  std::sort(xy.begin(), xy.end());
  const double n = static_cast<double>(xy.size());
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (auto [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (auto [x, y] : xy) {
    const double r = y - fit(x);
    ssr += r * r;
  }
  fit.residual_variance = xy.size() > 2 ? ssr / (n - 2.0) : 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  return fit;
}

}  // namespace detail

/// Fits one model from the samples of a single workload type.
/// Throws InsufficientSamples for fewer than two samples and DegenerateDesign
/// when every sample has the same input size.
inline RegressionModel fit_regression(const std::vector<ProfileSample>& samples) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::kInsufficientSamples,
                "need at least 2 samples, got " + std::to_string(samples.size()));
  }
  const auto& workload = samples.front().workload;
  std::set<double> sizes;
  for (const auto& s : samples) {
    if (s.workload.name != workload.name) {
      throw Error(ErrorCode::kInvalidArgument,
                  "samples mix workloads '" + workload.name + "' and '" +
                      s.workload.name + "'");
    }
    if (!(s.input_size_mb > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "input size must be positive");
    }
    sizes.insert(s.input_size_mb);
  }
  if (sizes.size() < 2) {
    throw Error(ErrorCode::kDegenerateDesign,
                "all samples of '" + workload.name + "' share one input size");
  }
  RegressionModel model;
  model.workload = workload;
  model.sample_count = samples.size();
  model.training_sizes.assign(sizes.begin(), sizes.end());
  for (std::size_t d = 0; d < kMetricDims; ++d) {
    std::vector<std::pair<double, double>> xy;
    xy.reserve(samples.size());
    for (const auto& s : samples) xy.emplace_back(s.input_size_mb, s.metrics[d]);
    model.metrics[d] = detail::fit_line(std::move(xy));
  }
  return model;
}

/// One model per workload in the catalog, in name order.
inline std::vector<RegressionModel> fit_catalog(
    const std::vector<ProfileSample>& samples) {
  std::vector<RegressionModel> models;
  for (const auto& [name, group] : group_by_workload(samples)) {
    models.push_back(fit_regression(group));
  }
  return models;
}

/// Affine prediction per metric, clamped at zero.
inline MetricVector predict_metrics(const RegressionModel& model,
                                    double input_size_mb) {
  if (!(input_size_mb > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "input size must be positive");
  }
  std::array<double, kMetricDims> out{};
  for (std::size_t d = 0; d < kMetricDims; ++d) {
    out[d] = std::max(0.0, model.metrics[d](input_size_mb));
  }
  return MetricVector::from_array(out);
}

/// Union of every model's training sizes, ascending.
inline std::vector<double> default_size_grid(
    const std::vector<RegressionModel>& models) {
  std::set<double> sizes;
  for (const auto& m : models) sizes.insert(m.training_sizes.begin(), m.training_sizes.end());
  return {sizes.begin(), sizes.end()};
}

inline void to_json(nlohmann::json& j, const RegressionModel& m) {
  nlohmann::json metrics = nlohmann::json::object();
  for (std::size_t d = 0; d < kMetricDims; ++d) {
    const auto& f = m.metrics[d];
    metrics[MetricVector::kNames[d]] = {{"intercept", f.intercept},
                                        {"slope", f.slope},
                                        {"residual_variance", f.residual_variance},
                                        {"r_squared", f.r_squared}};
  }
  j = {{"workload", m.workload},
       {"sample_count", m.sample_count},
       {"training_sizes", m.training_sizes},
       {"metrics", std::move(metrics)}};
}

inline void from_json(const nlohmann::json& j, RegressionModel& m) {
  m.workload = j.at("workload").get<WorkloadType>();
  m.sample_count = j.at("sample_count").get<std::size_t>();
  m.training_sizes = j.at("training_sizes").get<std::vector<double>>();
  const auto& metrics = j.at("metrics");
  for (std::size_t d = 0; d < kMetricDims; ++d) {
    const auto& f = metrics.at(MetricVector::kNames[d]);
    m.metrics[d] = {f.at("intercept").get<double>(), f.at("slope").get<double>(),
                    f.at("residual_variance").get<double>(),
                    f.at("r_squared").get<double>()};
  }
  if (m.sample_count < 2) {
    throw Error(ErrorCode::kInvalidArgument, "model sample_count must be >= 2");
  }
}

inline constexpr std::string_view kModelsSchema = "tracemix.models/1";

inline nlohmann::json models_to_json(const std::vector<RegressionModel>& models) {
  return {{"schema", kModelsSchema}, {"models", models}};
}

inline std::vector<RegressionModel> models_from_json(const nlohmann::json& j) {
  if (j.value("schema", std::string()) != kModelsSchema) {
    throw Error(ErrorCode::kInvalidArgument, "not a models document");
  }
  return j.at("models").get<std::vector<RegressionModel>>();
}

}  // namespace tracemix
