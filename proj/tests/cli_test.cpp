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
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"

namespace tracemix {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t lines_in(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { files_ = testing::write_fixtures(dir_); }

  // Runs the CLI with `args`; stderr goes to err.txt in the temp dir.
  int run(const std::string& args) {
    const std::string cmd =
        std::string(TRACEMIX_CLI) + " " + args + " 2> " + dir_.file("err.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string err() const { return slurp(dir_.file("err.txt")); }
  std::string path(const std::string& name) const { return dir_.file(name); }

  testing::TempDir dir_{"cli"};
  testing::FixtureFiles files_;
};

TEST_F(CliTest, FullPipeline) {
  ASSERT_EQ(run("stats --jobs " + files_.jobs + " --queries " + files_.queries + " --out " +
                path("stats.csv")),
            0)
      << err();
  const auto stats = slurp(path("stats.csv"));
  EXPECT_EQ(lines_in(stats), 25u);
  EXPECT_EQ(stats.rfind("hour_index,requests_per_sec,users_per_sec,job_count,avg_cpu,avg_mem_gb\n", 0),
            0u);

  ASSERT_EQ(run("fit --profiles " + files_.profiles + " --out " + path("models.json")), 0) << err();
  ASSERT_EQ(run("cluster --jobs " + files_.jobs + " --seed 4 --out " + path("clusters.json")), 0)
      << err();
  ASSERT_EQ(run("match --clusters " + path("clusters.json") + " --models " + path("models.json") +
                " --out " + path("matches.json")),
            0)
      << err();
  ASSERT_EQ(run("script --jobs " + files_.jobs + " --queries " + files_.queries + " --clusters " +
                path("clusters.json") + " --matches " + path("matches.json") + " --out " +
                path("script.ndjson")),
            0)
      << err();
  const auto script = parse_replay_script(slurp(path("script.ndjson")));
  EXPECT_EQ(script.coverage.total_jobs, files_.job_rows.size());
  EXPECT_EQ(script.coverage.matched_jobs + script.coverage.dropped_jobs, files_.job_rows.size());
  EXPECT_EQ(script.events.size(), script.coverage.matched_jobs + files_.request_rows.size());

  ASSERT_EQ(run("replay --script " + path("script.ndjson") +
                " --compression 432000 --scale-factor 2 --seed 5 --out " + path("report.csv")),
            0)
      << err();
  const auto report = slurp(path("report.csv"));
  EXPECT_EQ(report.rfind("# seed=5 scale_factor=2 compression=432000 tenants=", 0), 0u);
  EXPECT_EQ(lines_in(report), 2 * script.events.size() + 2);
  const auto summary = nlohmann::json::parse(err());
  EXPECT_EQ(summary["count"], 2 * script.events.size());
  EXPECT_EQ(summary["failures"], 0);
}

TEST_F(CliTest, StatsWindowIsOneRow) {
  ASSERT_EQ(run("stats --queries " + files_.queries + " --window 43200000:46800000 --out " +
                path("noon.csv")),
            0)
      << err();
  EXPECT_EQ(lines_in(slurp(path("noon.csv"))), 2u);
}

TEST_F(CliTest, ClusteringIsDeterministic) {
  ASSERT_EQ(run("cluster --jobs " + files_.jobs + " --seed 9 --out " + path("a.json")), 0);
  ASSERT_EQ(run("cluster --jobs " + files_.jobs + " --seed 9 --out " + path("b.json")), 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
}

TEST_F(CliTest, MalformedInputExitsOne) {
  const auto bad = dir_.write(
      "bad.csv",
      "job_id,submit_ts_ms,tenant_id,exec_time_s,cpu_usage,mem_gb,cpi,mai\n"
      "a,0,t,1,1,1,1,1\nb,1,t,1,1,1,-2,1\n");
  EXPECT_EQ(run("cluster --jobs " + bad), 1);
  EXPECT_NE(err().find("\"code\":\"MalformedRow\""), std::string::npos) << err();
  EXPECT_NE(err().find("line 3"), std::string::npos) << err();
  EXPECT_EQ(run("fit --profiles " + path("nope.csv")), 1);
  EXPECT_NE(err().find("IoError"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("fit"), 2);
  EXPECT_EQ(run("replay --script x --executor telnet"), 2);
  EXPECT_EQ(run("match --clusters x"), 2);
}

}  // namespace
}  // namespace tracemix
