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

#include <map>
#include <set>

#include "tracemix/replay.hpp"

namespace tracemix {
namespace {

ReplayScript script_with(std::size_t tenants, std::size_t per_tenant, TimestampMs gap_ms) {
  ReplayScript s;
  for (std::size_t i = 0; i < per_tenant; ++i) {
    for (std::size_t t = 0; t < tenants; ++t) {
      const TimestampMs ts = static_cast<TimestampMs>(i) * gap_ms + static_cast<TimestampMs>(t % 7);
      if (t % 2) {
        s.events.push_back({ts, "s" + std::to_string(t), AnalysisJobPayload{"sort", 100.0 + t}});
      } else {
        s.events.push_back({ts, "s" + std::to_string(t), ServiceRequestPayload{"q" + std::to_string(i)}});
      }
    }
  }
  std::stable_sort(s.events.begin(), s.events.end(),
                   [](const ReplayEvent& a, const ReplayEvent& b) { return a.ts_ms < b.ts_ms; });
  return s;
}

TEST(ExtractTenants, OneSchedulePerSubmitter) {
  const auto script = script_with(2261, 2, 1000);
  const auto schedules = extract_tenants(script);
  ASSERT_EQ(schedules.size(), 2261u);
  EXPECT_EQ(count_events(schedules), script.events.size());
  std::set<std::string> ids;
  for (const auto& s : schedules) {
    ids.insert(s.tenant_id);
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      EXPECT_EQ(s.events[i].tenant_id, s.tenant_id);
      if (i) {
        EXPECT_LE(s.events[i - 1].ts_ms, s.events[i].ts_ms);
      }
    }
  }
  EXPECT_EQ(ids.size(), 2261u);
}

TEST(ExtractTenants, EmptyScript) {
  EXPECT_TRUE(extract_tenants(ReplayScript{}).empty());
}

TEST(ScaleTenants, DoublingClonesEveryTenantExactly) {
  const auto base = extract_tenants(script_with(100, 5, 500));
  const auto scaled = scale_tenants(base, 2.0, 1);
  ASSERT_EQ(scaled.size(), 200u);
  std::map<std::string, int> clones_of;
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(scaled[i], base[i]);
  for (std::size_t i = 100; i < 200; ++i) {
    const auto& c = scaled[i];
    const auto src_id = c.tenant_id.substr(0, c.tenant_id.find('#'));
    ++clones_of[src_id];
    const auto src = std::find_if(base.begin(), base.end(),
                                  [&](const TenantSchedule& s) { return s.tenant_id == src_id; });
    ASSERT_NE(src, base.end());
    ASSERT_EQ(c.events.size(), src->events.size());
    for (std::size_t e = 0; e < c.events.size(); ++e) {
      EXPECT_EQ(c.events[e].ts_ms, src->events[e].ts_ms);
      EXPECT_EQ(c.events[e].payload, src->events[e].payload);
      EXPECT_EQ(c.events[e].tenant_id, c.tenant_id);
    }
  }
  EXPECT_EQ(clones_of.size(), 100u);
  for (const auto& [id, n] : clones_of) EXPECT_EQ(n, 1) << id;
}

TEST(ScaleTenants, HalvingKeepsOriginalsUntouched) {
  const auto base = extract_tenants(script_with(100, 4, 300));
  ScalePlan plan{0.5, 9, 0};
  const auto scaled = scale_tenants(base, plan);
  ASSERT_EQ(scaled.size(), 50u);
  EXPECT_EQ(plan.resulting_tenants, 50u);
  std::size_t last = 0;
  for (const auto& s : scaled) {
    const auto it = std::find(base.begin(), base.end(), s);
    ASSERT_NE(it, base.end());
    const auto pos = static_cast<std::size_t>(it - base.begin());
    EXPECT_TRUE(&s == &scaled.front() || pos > last);
    last = pos;
  }
}

TEST(ScaleTenants, FractionalFactorsAndRounding) {
  const auto base = extract_tenants(script_with(10, 3, 100));
  EXPECT_EQ(scale_tenants(base, 1.5, 3).size(), 15u);
  EXPECT_EQ(scale_tenants(base, 1.0, 3), base);
  EXPECT_EQ(scale_tenants(base, 0.25, 3).size(), 3u);  // 2.5 rounds up
  EXPECT_EQ(scale_tenants(base, 0.05, 3).size(), 1u);  // 0.5 rounds up
  EXPECT_EQ(scale_tenants(base, 1.5, 3), scale_tenants(base, 1.5, 3));
  try {
    scale_tenants(base, 0.01, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyResult);
  }
  EXPECT_THROW(scale_tenants(base, -1.0), Error);
  EXPECT_THROW(scale_tenants(base, 0.0), Error);
  const auto grown = scale_tenants(base, 1.5, 3);
  std::set<std::string> ids;
  for (const auto& s : grown) ids.insert(s.tenant_id);
  EXPECT_EQ(ids.size(), grown.size());
}

TEST(LatenessPercentile, NearestRank) {
  std::vector<DispatchRecord> recs;
  for (int i = 1; i <= 100; ++i) recs.push_back({0.0, static_cast<double>(i), 0, "t", "k", true, ""});
  EXPECT_EQ(lateness_percentile(recs, 0.5), 50.0);
  EXPECT_EQ(lateness_percentile(recs, 0.99), 99.0);
  EXPECT_EQ(lateness_percentile(recs, 1.0), 100.0);
  EXPECT_EQ(lateness_percentile({}, 0.99), 0.0);
  const auto s = summarize(recs, 50.0);
  EXPECT_EQ(s.max_lateness_ms, 100.0);
  EXPECT_FALSE(s.within_tolerance());
}

TEST(RunReplay, DispatchesEveryEventInTenantOrder) {
  const auto schedules = extract_tenants(script_with(20, 10, 200));
  MockExecutor mock;
  ReplayOptions opts;
  opts.compression = 20.0;
  const auto report = run_replay(schedules, mock, opts);
  EXPECT_EQ(report.summary.count, 200u);
  EXPECT_EQ(report.summary.failures, 0u);
  const auto inv = mock.invocations();
  ASSERT_EQ(inv.size(), 200u);
  std::map<std::string, std::vector<ReplayEvent>> seen;
  for (const auto& i : inv) seen[i.event.tenant_id].push_back(i.event);
  for (const auto& s : schedules) EXPECT_EQ(seen[s.tenant_id], s.events);
  for (std::size_t i = 1; i < report.records.size(); ++i) {
    EXPECT_LE(report.records[i - 1].scheduled_ms, report.records[i].scheduled_ms);
  }
  for (const auto& r : report.records) EXPECT_GE(r.lateness_ms(), 0.0);
}

TEST(RunReplay, FailuresAndExceptionsAreRecorded) {
  const auto schedules = extract_tenants(script_with(4, 5, 10));
  MockExecutor mock({}, [](const ReplayEvent& e) { return e.is_service(); });
  const auto report = run_replay(schedules, mock);
  EXPECT_EQ(report.summary.count, 20u);
  EXPECT_EQ(report.summary.failures, 10u);

  struct Throwing : Executor {
    Outcome execute(const ReplayEvent&) override { throw std::runtime_error("boom"); }
    std::string name() const override { return "throwing"; }
  } throwing;
  const auto r2 = run_replay(schedules, throwing);
  EXPECT_EQ(r2.summary.failures, 20u);
  EXPECT_EQ(r2.records[0].detail, "boom");
  EXPECT_THROW(run_replay(schedules, throwing, {0.0, 0, 50}), Error);
}

TEST(RunReplay, SlowExecutorDoesNotDelayLaterEvents) {
  // One tenant, events every 20 wall ms, each taking 200 ms.
  TenantSchedule s{"solo", {}};
  for (int i = 0; i < 10; ++i) s.events.push_back({i * 20LL, "solo", ServiceRequestPayload{"x"}});
  MockExecutor slow(std::chrono::milliseconds(200));
  const auto report = run_replay({s}, slow);
  EXPECT_LT(report.summary.max_lateness_ms, 50.0);
  EXPECT_LT(report.summary.wall_ms, 1000.0);
}

TEST(RunReplay, ReportCsv) {
  const auto schedules = extract_tenants(script_with(2, 2, 10));
  MockExecutor mock;
  const auto text = format_replay_report(run_replay(schedules, mock));
  EXPECT_EQ(text.rfind("scheduled_ts_ms,actual_ts_ms,tenant,kind,outcome\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_NE(text.find(",ok\n"), std::string::npos);
}

}  // namespace
}  // namespace tracemix
