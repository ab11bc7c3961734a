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

// Pluggable executors that carry out one replay event each: an in-memory
// recorder, a process launcher driven by per-workload command templates, and
// an HTTP GET issuer driven by a URL template.
//
// Templates use brace placeholders: {workload} {size} {tenant} {ts} {query}
// {kind}. An unknown placeholder, an unbalanced brace, or a placeholder that
// does not apply to the event (e.g. {query} on an analysis job) is a template
// error and fails that one event.

#pragma once

#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <charconv>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>

#include "tracemix/combiner.hpp"
#include "tracemix/error.hpp"

extern char** environ;

namespace tracemix {

struct Outcome {
  bool ok = true;
  std::string detail;

  static Outcome success(std::string detail = {}) { return {true, std::move(detail)}; }
  static Outcome failure(std::string detail) { return {false, std::move(detail)}; }
};

class Executor {
 public:
  virtual ~Executor() = default;
  /// Runs one event. May be called concurrently from many threads. Throwing
  /// is allowed; the replay records it as a failed event.
  virtual Outcome execute(const ReplayEvent& event) = 0;
  virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// Template expansion

inline std::string format_size(double mb) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), mb);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(mb);
}

/// Percent-encodes everything except RFC 3986 unreserved characters.
inline std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

inline std::string placeholder_value(const ReplayEvent& e, std::string_view key) {
  const auto* job = std::get_if<AnalysisJobPayload>(&e.payload);
  const auto* req = std::get_if<ServiceRequestPayload>(&e.payload);
  if (key == "tenant") return e.tenant_id;
  if (key == "ts") return std::to_string(e.ts_ms);
  if (key == "kind") return std::string(e.kind());
  if (key == "workload" && job) return job->workload;
  if (key == "size" && job) return format_size(job->input_size_mb);
  if (key == "query" && req) return req->query;
  if (key == "workload" || key == "size" || key == "query") {
    throw Error(ErrorCode::kTemplateError,
                "placeholder {" + std::string(key) + "} does not apply to " +
                    std::string(e.kind()) + " events");
  }
  throw Error(ErrorCode::kTemplateError, "unknown placeholder {" + std::string(key) + "}");
}

/// Replaces every {placeholder} in `tmpl`, passing each value through
/// `encode`.
inline std::string expand_template(
    std::string_view tmpl, const ReplayEvent& e,
    const std::function<std::string(std::string_view)>& encode = {}) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c == '}') throw Error(ErrorCode::kTemplateError, "unbalanced '}' in template");
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    const auto close = tmpl.find('}', i + 1);
    if (close == std::string_view::npos) {
      throw Error(ErrorCode::kTemplateError, "unterminated '{' in template");
    }
    const auto key = tmpl.substr(i + 1, close - i - 1);
    if (key.find('{') != std::string_view::npos) {
      throw Error(ErrorCode::kTemplateError, "nested '{' in template");
    }
    const auto value = placeholder_value(e, key);
    out += encode ? encode(value) : value;
    i = close + 1;
  }
  return out;
}

/// Splits a command template on whitespace, then expands each word, so a
/// substituted value with spaces stays a single argument.
inline std::vector<std::string> expand_command(std::string_view tmpl,
                                               const ReplayEvent& e) {
  std::vector<std::string> argv;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    while (i < tmpl.size() && std::isspace(static_cast<unsigned char>(tmpl[i]))) ++i;
    const auto start = i;
    while (i < tmpl.size() && !std::isspace(static_cast<unsigned char>(tmpl[i]))) ++i;
    if (i > start) argv.push_back(expand_template(tmpl.substr(start, i - start), e));
  }
  if (argv.empty()) throw Error(ErrorCode::kTemplateError, "empty command template");
  return argv;
}

// ---------------------------------------------------------------------------
// Mock

/// Records every invocation. Optionally sleeps a fixed time per call (to
/// emulate slow systems) and fails events selected by a predicate.
class MockExecutor : public Executor {
 public:
  struct Invocation {
    ReplayEvent event;
    std::chrono::steady_clock::time_point at;
  };

  explicit MockExecutor(std::chrono::microseconds latency = {},
                        std::function<bool(const ReplayEvent&)> fail_if = {})
      : latency_(latency), fail_if_(std::move(fail_if)) {}

  Outcome execute(const ReplayEvent& event) override {
    const auto now = std::chrono::steady_clock::now();
    {
      std::lock_guard lock(mu_);
      invocations_.push_back({event, now});
    }
    if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
    if (fail_if_ && fail_if_(event)) return Outcome::failure("mock failure");
    return Outcome::success();
  }

  std::string name() const override { return "mock"; }

  std::vector<Invocation> invocations() const {
    std::lock_guard lock(mu_);
    return invocations_;
  }

 private:
  std::chrono::microseconds latency_;
  std::function<bool(const ReplayEvent&)> fail_if_;
  mutable std::mutex mu_;
  std::vector<Invocation> invocations_;
};

// ---------------------------------------------------------------------------
// Shell

/// Launches one process per event. Templates are looked up by workload name
/// for analysis jobs and by "service_request" for requests, falling back to
/// "*". A non-zero exit status is a failure.
class ShellExecutor : public Executor {
 public:
  explicit ShellExecutor(std::map<std::string, std::string> templates)
      : templates_(std::move(templates)) {}

  /// A single template for every event.
  explicit ShellExecutor(std::string tmpl) : templates_{{"*", std::move(tmpl)}} {}

  std::vector<std::string> command_for(const ReplayEvent& e) const {
    std::string key = "service_request";
    if (const auto* job = std::get_if<AnalysisJobPayload>(&e.payload)) key = job->workload;
    auto it = templates_.find(key);
    if (it == templates_.end()) it = templates_.find("*");
    if (it == templates_.end()) {
      throw Error(ErrorCode::kTemplateError, "no command template for '" + key + "'");
    }
    return expand_command(it->second, e);
  }

  Outcome execute(const ReplayEvent& event) override {
    const auto args = command_for(event);
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
      return Outcome::failure("spawn '" + args[0] + "' failed: " + std::strerror(rc));
    }
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
      if (errno != EINTR) return Outcome::failure("waitpid failed");
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) return Outcome::success();
    if (WIFEXITED(status)) {
      return Outcome::failure("exit status " + std::to_string(WEXITSTATUS(status)));
    }
    return Outcome::failure("terminated by signal");
  }

  std::string name() const override { return "shell"; }

 private:
  std::map<std::string, std::string> templates_;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpTarget {
  std::string host;
  int port = 80;
  std::string path;  // includes the query string
};

/// Splits an expanded `http://host[:port]/path?query` URL.
inline HttpTarget parse_http_url(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme) {
    throw Error(ErrorCode::kTemplateError, "only http:// URLs are supported");
  }
  url.remove_prefix(kScheme.size());
  const auto slash = url.find('/');
  const auto authority = url.substr(0, slash);
  HttpTarget t;
  t.path = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    t.host = std::string(authority);
  } else {
    t.host = std::string(authority.substr(0, colon));
    const auto port = authority.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), t.port);
    if (ec != std::errc() || ptr != port.data() + port.size() || t.port <= 0 ||
        t.port > 65535) {
      throw Error(ErrorCode::kTemplateError, "bad port in URL");
    }
  }
  if (t.host.empty()) throw Error(ErrorCode::kTemplateError, "URL has no host");
  return t;
}

/// Issues GET requests built from a URL template; substituted values are
/// percent-encoded. A transport error or status >= 400 is a failure.
class HttpExecutor : public Executor {
 public:
  explicit HttpExecutor(std::string url_template,
                        std::chrono::milliseconds timeout = std::chrono::seconds(10))
      : template_(std::move(url_template)), timeout_(timeout) {}

  HttpTarget target_for(const ReplayEvent& e) const {
    return parse_http_url(expand_template(template_, e, url_encode));
  }

  Outcome execute(const ReplayEvent& event) override {
    const auto t = target_for(event);
    httplib::Client client(t.host, t.port);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Get(t.path);
    if (!res) return Outcome::failure("http error: " + httplib::to_string(res.error()));
    if (res->status >= 400) return Outcome::failure("http status " + std::to_string(res->status));
    return Outcome::success(std::to_string(res->status));
  }

  std::string name() const override { return "http"; }

 private:
  std::string template_;
  std::chrono::milliseconds timeout_;
};

/// Builds an executor by name: "mock", "shell" (template required) or
/// "http" (template required).
inline std::unique_ptr<Executor> make_executor(const std::string& kind,
                                               const std::string& tmpl) {
  if (kind == "mock") return std::make_unique<MockExecutor>();
  if (kind == "shell" || kind == "http") {
    if (tmpl.empty()) {
      throw Error(ErrorCode::kInvalidArgument, kind + " executor requires a template");
    }
    if (kind == "shell") return std::make_unique<ShellExecutor>(tmpl);
    return std::make_unique<HttpExecutor>(tmpl);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown executor '" + kind + "'");
}

}  // namespace tracemix
