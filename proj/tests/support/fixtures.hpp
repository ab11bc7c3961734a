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

#pragma once

#include <sstream>
#include <string>

#include "support/oracles.hpp"
#include "tracemix/tracemix.hpp"

namespace tracemix::testing {

/// A small 24-hour fixture set on disk: three catalog workloads at two sizes
/// each plus one job type with no profiled counterpart.
struct FixtureFiles {
  std::string jobs, queries, profiles, machines, empty_profiles;
  std::vector<AnonymousJob> job_rows;
  std::vector<ServiceRequest> request_rows;
};

inline FixtureFiles write_fixtures(const TempDir& dir, std::size_t per_group = 30,
                                   std::size_t queries = 3000, std::uint64_t seed = 11) {
  const auto workloads = synth::default_workloads();
  std::vector<synth::JobGroup> groups;
  for (const auto& w : workloads) {
    for (double s : {200.0, 1000.0}) groups.push_back({w.at(s), per_group, 0.02});
  }
  groups.push_back({MetricVector{250.0, 30.0, 15.0, 6.0, 0.25}, 6, 0.02});
  const TimestampMs day = 24 * kMsPerHour;

  FixtureFiles f;
  f.job_rows = synth::make_jobs(groups, 25, day, seed);
  f.request_rows = synth::make_queries(queries, 60, day, seed + 1);
  f.jobs = dir.write("jobs.csv", format_job_trace(f.job_rows));
  f.queries = dir.write("queries.csv", format_query_log(f.request_rows));
  f.profiles = dir.write(
      "profiles.csv",
      format_profiles(synth::make_profiles(workloads, synth::linear_sizes(100, 2000, 20), 0.02,
                                           seed + 2)));
  f.empty_profiles = dir.write("empty_profiles.csv", format_profiles({}));
  std::ostringstream m;
  m << "class_id,cores,mem_gb,count\n";
  for (const auto& mc : synth::default_machines()) {
    m << mc.class_id << ',' << mc.cores << ',' << mc.mem_gb << ',' << mc.count << '\n';
  }
  f.machines = dir.write("machines.csv", m.str());
  return f;
}

}  // namespace tracemix::testing
