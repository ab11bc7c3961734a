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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/oracles.hpp"
#include "tracemix/profiling.hpp"
#include "tracemix/synthetic.hpp"

namespace tracemix {
namespace {

std::vector<ProfileSample> exact_line(const std::string& name, std::size_t n) {
  std::vector<ProfileSample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double size = 10.0 * (i + 1);
    out.push_back({{name, WorkloadKind::kAnalysis},
                   size,
                   {2.0 + 0.5 * size, 3.0, 0.25 + 0.01 * size, 1.2 - 0.001 * size, 0.02}});
  }
  return out;
}

TEST(LoadProfiles, TwentySortRows) {
  std::string text = "workload,input_size_mb,exec_time_s,cpu_usage,mem_gb,cpi,mai\n";
  for (int i = 1; i <= 20; ++i) {
    text += "sort," + std::to_string(i * 100) + ",1,1,1,1,0.1\n";
  }
  EXPECT_EQ(load_profiles(csv::parse_string(text)).size(), 20u);
}

TEST(LoadProfiles, EmptyData) {
  EXPECT_TRUE(
      load_profiles(csv::parse_string("workload,input_size_mb,exec_time_s,cpu_usage,mem_gb,cpi,mai\n"))
          .empty());
}

TEST(LoadProfiles, GroupsTwoWorkloads) {
  const auto samples = synth::make_profiles(synth::default_workloads(),
                                            synth::linear_sizes(100, 1000, 7), 0.0, 1);
  const auto groups = group_by_workload(load_profiles(csv::parse_string(format_profiles(samples))));
  ASSERT_EQ(groups.size(), 3u);
  for (const auto& [name, g] : groups) EXPECT_EQ(g.size(), 7u) << name;
}

TEST(LoadProfiles, RejectsBadRows) {
  EXPECT_THROW(load_profiles(csv::parse_string(
                   "workload,input_size_mb,exec_time_s,cpu_usage,mem_gb,cpi,mai\nsort,0,1,1,1,1,1\n")),
               Error);
  EXPECT_THROW(load_profiles(csv::parse_string(
                   "workload,input_size_mb,exec_time_s,cpu_usage,mem_gb,cpi,mai\nsort,1,1,-1,1,1,1\n")),
               Error);
  // Repeated measurements at one size are fine.
  EXPECT_EQ(load_profiles(csv::parse_string("workload,input_size_mb,exec_time_s,cpu_usage,mem_gb,cpi,mai\n"
                                            "sort,1,1,1,1,1,1\nsort,1,2,1,1,1,1\n"))
                .size(),
            2u);
}

TEST(FitRegression, ExactLineRecoversCoefficients) {
  const auto model = fit_regression(exact_line("sort", 12));
  EXPECT_NEAR(model.metrics[0].intercept, 2.0, 1e-9);
  EXPECT_NEAR(model.metrics[0].slope, 0.5, 1e-9);
  EXPECT_NEAR(model.metrics[2].intercept, 0.25, 1e-9);
  EXPECT_NEAR(model.metrics[2].slope, 0.01, 1e-9);
  EXPECT_NEAR(model.metrics[3].slope, -0.001, 1e-12);
  EXPECT_EQ(model.sample_count, 12u);
  EXPECT_EQ(model.training_sizes.size(), 12u);
}

TEST(FitRegression, ConstantMetricHasZeroSlope) {
  const auto model = fit_regression(exact_line("sort", 5));
  EXPECT_NEAR(model.metrics[1].slope, 0.0, 1e-12);
  EXPECT_NEAR(model.metrics[1].intercept, 3.0, 1e-12);
  EXPECT_EQ(model.metrics[1].r_squared, 1.0);
}

TEST(FitRegression, NoisyLineWithinThreeStandardErrors) {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> noise(0.0, 1.5);
  std::vector<ProfileSample> samples;
  std::vector<double> xs, ys;
  for (int i = 0; i < 40; ++i) {
    const double size = 25.0 * (i + 1);
    const double y = 7.0 + 0.3 * size + noise(gen);
    samples.push_back({{"wc", WorkloadKind::kAnalysis}, size, {y, 1, 1, 1, 1}});
    xs.push_back(size);
    ys.push_back(y);
  }
  const auto model = fit_regression(samples);
  const auto [a, b] = testing::normal_equations(xs, ys);
  EXPECT_NEAR(model.metrics[0].intercept, static_cast<double>(a), 1e-8);
  EXPECT_NEAR(model.metrics[0].slope, static_cast<double>(b), 1e-11);

  // Standard errors from the known sigma.
  double mx = 0;
  for (double x : xs) mx += x;
  mx /= xs.size();
  double sxx = 0;
  for (double x : xs) sxx += (x - mx) * (x - mx);
  const double se_slope = 1.5 / std::sqrt(sxx);
  const double se_icpt = 1.5 * std::sqrt(1.0 / xs.size() + mx * mx / sxx);
  EXPECT_LT(std::abs(model.metrics[0].slope - 0.3), 3 * se_slope);
  EXPECT_LT(std::abs(model.metrics[0].intercept - 7.0), 3 * se_icpt);
  EXPECT_GT(model.metrics[0].residual_variance, 0.0);
}

TEST(FitRegression, Errors) {
  auto one = exact_line("sort", 1);
  try {
    fit_regression(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSamples);
  }
  std::vector<ProfileSample> same{one[0], one[0], one[0]};
  try {
    fit_regression(same);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateDesign);
  }
}

TEST(FitRegression, InvariantToSampleOrder) {
  auto samples = synth::make_profiles({synth::default_workloads()[1]},
                                      synth::linear_sizes(100, 2000, 20), 0.05, 5);
  const auto reference = fit_regression(samples);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(samples.begin(), samples.end(), gen);
    EXPECT_EQ(fit_regression(samples), reference);
  }
}

TEST(PredictMetrics, AffineArithmetic) {
  const auto model = fit_regression(exact_line("sort", 4));
  EXPECT_NEAR(predict_metrics(model, 10.0).exec_time_s, 7.0, 1e-9);
}

TEST(PredictMetrics, ExactFitReproducesTraining) {
  const auto samples = exact_line("sort", 6);
  const auto model = fit_regression(samples);
  for (const auto& s : samples) {
    const auto p = predict_metrics(model, s.input_size_mb).as_array();
    const auto m = s.metrics.as_array();
    for (std::size_t d = 0; d < kMetricDims; ++d) EXPECT_NEAR(p[d], m[d], 1e-9);
  }
}

TEST(PredictMetrics, NegativePredictionClampsToZero) {
  std::vector<ProfileSample> samples{
      {{"w", WorkloadKind::kAnalysis}, 10.0, {0.0, 1, 1, 1, 1}},
      {{"w", WorkloadKind::kAnalysis}, 20.0, {5.0, 1, 1, 1, 1}}};
  const auto model = fit_regression(samples);
  ASSERT_LT(model.metrics[0].intercept, 0.0);  // -5 + 0.5 * size
  EXPECT_EQ(predict_metrics(model, 0.5).exec_time_s, 0.0);
  EXPECT_THROW(predict_metrics(model, 0.0), Error);
}

TEST(PredictMetrics, MonotoneForNonNegativeSlopes) {
  const auto model = fit_regression(
      synth::make_profiles({synth::default_workloads()[0]}, synth::linear_sizes(100, 2000, 20), 0.0, 1));
  for (const auto& f : model.metrics) ASSERT_GE(f.slope, 0.0);
  auto prev = predict_metrics(model, 1.0).as_array();
  for (double s = 2.0; s < 5000; s *= 1.3) {
    const auto cur = predict_metrics(model, s).as_array();
    for (std::size_t d = 0; d < kMetricDims; ++d) EXPECT_GE(cur[d], prev[d]);
    prev = cur;
  }
}

TEST(Models, JsonRoundTrip) {
  const auto models = fit_catalog(synth::make_profiles(synth::default_workloads(),
                                                       synth::linear_sizes(100, 2000, 20), 0.02, 3));
  ASSERT_EQ(models.size(), 3u);
  const auto text = models_to_json(models).dump();
  EXPECT_EQ(models_from_json(nlohmann::json::parse(text)), models);
  EXPECT_EQ(default_size_grid(models).size(), 20u);
}

}  // namespace
}  // namespace tracemix
