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

// Writes a synthetic 24-hour fixture set (jobs.csv, queries.csv,
// profiles.csv, machines.csv) into a directory.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tracemix/tracemix.hpp"

int main(int argc, char** argv) {
  using namespace tracemix;
  CLI::App app{"Generate synthetic trace fixtures"};
  std::string dir = "fixtures";
  std::uint64_t seed = 0;
  std::size_t jobs_per_group = 60, queries = 20000, users = 300, submitters = 40;
  app.add_option("dir", dir, "Output directory");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--jobs-per-group", jobs_per_group, "Jobs per latent job type");
  app.add_option("--queries", queries, "Number of service requests");
  app.add_option("--users", users, "Distinct end users");
  app.add_option("--submitters", submitters, "Distinct job submitters");
  CLI11_PARSE(app, argc, argv);

  const auto workloads = synth::default_workloads();
  const auto sizes = synth::linear_sizes(100.0, 2000.0, 20);
  std::vector<synth::JobGroup> groups;
  for (const auto& w : workloads) {
    for (double s : {200.0, 1000.0}) groups.push_back({w.at(s), jobs_per_group, 0.02});
  }
  // A small, far-away job type with no profiled counterpart.
  groups.push_back({MetricVector{250.0, 30.0, 15.0, 6.0, 0.25}, 6, 0.02});

  const TimestampMs day = 24 * kMsPerHour;
  std::filesystem::create_directories(dir);
  std::ofstream(std::filesystem::path(dir) / "jobs.csv")
      << format_job_trace(synth::make_jobs(groups, submitters, day, seed));
  std::ofstream(std::filesystem::path(dir) / "queries.csv")
      << format_query_log(synth::make_queries(queries, users, day, seed + 1));
  std::ofstream(std::filesystem::path(dir) / "profiles.csv")
      << format_profiles(synth::make_profiles(workloads, sizes, 0.02, seed + 2));
  std::ofstream machines(std::filesystem::path(dir) / "machines.csv");
  machines << "class_id,cores,mem_gb,count\n";
  for (const auto& m : synth::default_machines()) {
    machines << m.class_id << ',' << m.cores << ',' << m.mem_gb << ',' << m.count << '\n';
  }
  std::cout << "wrote fixtures to " << dir << " (seed " << seed << ")\n";
  return 0;
}
