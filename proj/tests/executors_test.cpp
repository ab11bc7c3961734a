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

#include <fstream>
#include <mutex>

#include "support/oracles.hpp"
#include "tracemix/executors.hpp"

namespace tracemix {
namespace {

const ReplayEvent kJob{1500, "u7", AnalysisJobPayload{"sort", 200.0}};
const ReplayEvent kReq{42, "q1", ServiceRequestPayload{"movie times & more"}};

ErrorCode template_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kNotFound;
}

TEST(ExpandTemplate, Placeholders) {
  EXPECT_EQ(expand_template("{kind}:{workload}:{size}:{tenant}:{ts}", kJob),
            "analysis_job:sort:200:u7:1500");
  EXPECT_EQ(expand_template("{kind} {query}", kReq), "service_request movie times & more");
  EXPECT_EQ(expand_template("{size}", ReplayEvent{0, "t", AnalysisJobPayload{"w", 12.5}}), "12.5");
}

TEST(ExpandTemplate, Errors) {
  EXPECT_EQ(template_code([] { expand_template("{nope}", kJob); }), ErrorCode::kTemplateError);
  EXPECT_EQ(template_code([] { expand_template("{query}", kJob); }), ErrorCode::kTemplateError);
  EXPECT_EQ(template_code([] { expand_template("{workload}", kReq); }), ErrorCode::kTemplateError);
  EXPECT_EQ(template_code([] { expand_template("{tenant", kJob); }), ErrorCode::kTemplateError);
  EXPECT_EQ(template_code([] { expand_template("x}", kJob); }), ErrorCode::kTemplateError);
}

TEST(ExpandCommand, ArgvSplitBeforeSubstitution) {
  EXPECT_EQ(expand_command("run-{workload} --size {size} --as {tenant}", kJob),
            (std::vector<std::string>{"run-sort", "--size", "200", "--as", "u7"}));
  EXPECT_EQ(expand_command("  search   {query} ", kReq),
            (std::vector<std::string>{"search", "movie times & more"}));
  EXPECT_EQ(template_code([] { expand_command("   ", kJob); }), ErrorCode::kTemplateError);
}

TEST(UrlEncode, UnreservedPassThrough) {
  EXPECT_EQ(url_encode("foo"), "foo");
  EXPECT_EQ(url_encode("a b&c=d/é"), "a%20b%26c%3Dd%2F%C3%A9");
  EXPECT_EQ(url_encode("A-z_0.9~"), "A-z_0.9~");
}

TEST(ParseHttpUrl, Parts) {
  const auto t = parse_http_url("http://localhost:8080/search?q=foo");
  EXPECT_EQ(t.host, "localhost");
  EXPECT_EQ(t.port, 8080);
  EXPECT_EQ(t.path, "/search?q=foo");
  EXPECT_EQ(parse_http_url("http://example").path, "/");
  EXPECT_EQ(parse_http_url("http://example").port, 80);
  EXPECT_THROW(parse_http_url("https://x/"), Error);
  EXPECT_THROW(parse_http_url("http://x:0/"), Error);
  EXPECT_THROW(parse_http_url("http://:80/"), Error);
}

TEST(ShellExecutor, RunsCommandsAndReportsStatus) {
  testing::TempDir dir("shell");
  ShellExecutor touch("touch " + dir.file("{tenant}-{workload}"));
  EXPECT_TRUE(touch.execute(kJob).ok);
  EXPECT_TRUE(std::filesystem::exists(dir.file("u7-sort")));

  ShellExecutor by_workload(std::map<std::string, std::string>{{"sort", "true"}, {"*", "false"}});
  EXPECT_TRUE(by_workload.execute(kJob).ok);
  const auto failed = by_workload.execute(kReq);
  EXPECT_FALSE(failed.ok);
  EXPECT_EQ(failed.detail, "exit status 1");

  ShellExecutor missing("/nonexistent/binary {tenant}");
  EXPECT_FALSE(missing.execute(kJob).ok);
  ShellExecutor none(std::map<std::string, std::string>{{"grep", "true"}});
  EXPECT_THROW(none.execute(kJob), Error);
}

TEST(HttpExecutor, IssuesEncodedGet) {
  httplib::Server server;
  std::mutex mu;
  std::vector<std::string> queries;
  server.Get("/search", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(mu);
    queries.push_back(req.get_param_value("q"));
    res.set_content("ok", "text/plain");
  });
  server.Get("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpExecutor search(base + "/search?q={query}");
  EXPECT_EQ(search.target_for(ReplayEvent{0, "q", ServiceRequestPayload{"foo"}}).path,
            "/search?q=foo");
  EXPECT_TRUE(search.execute(ReplayEvent{0, "q", ServiceRequestPayload{"foo"}}).ok);
  EXPECT_TRUE(search.execute(kReq).ok);
  EXPECT_FALSE(HttpExecutor(base + "/fail").execute(kReq).ok);
  server.stop();
  t.join();
  EXPECT_EQ(queries, (std::vector<std::string>{"foo", "movie times & more"}));

  HttpExecutor down(base + "/search", std::chrono::milliseconds(300));
  EXPECT_FALSE(down.execute(kReq).ok);
}

TEST(MakeExecutor, ByName) {
  EXPECT_EQ(make_executor("mock", "")->name(), "mock");
  EXPECT_EQ(make_executor("shell", "true")->name(), "shell");
  EXPECT_EQ(make_executor("http", "http://x/")->name(), "http");
  EXPECT_THROW(make_executor("shell", ""), Error);
  EXPECT_THROW(make_executor("carrier-pigeon", "x"), Error);
}

}  // namespace
}  // namespace tracemix
