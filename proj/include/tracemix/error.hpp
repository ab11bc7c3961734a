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

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tracemix {

enum class ErrorCode {
  kIoError,
  kMissingHeader,
  kMalformedRow,
  kInsufficientSamples,
  kDegenerateDesign,
  kKTooLarge,
  kDegenerateVariance,
  kEmptyResult,
  kInvalidArgument,
  kTemplateError,
  kNotFound,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMissingHeader: return "MissingHeader";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kDegenerateDesign: return "DegenerateDesign";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kDegenerateVariance: return "DegenerateVariance";
    case ErrorCode::kEmptyResult: return "EmptyResult";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kTemplateError: return "TemplateError";
    case ErrorCode::kNotFound: return "NotFound";
  }
  return "Unknown";
}

// All library failures surface as this exception. `line` is set for
// MalformedRow (1-based, counting the header as line 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message,
        std::optional<std::size_t> line = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(std::move(message)),
        line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> line_;
};

inline Error malformed_row(std::size_t line, std::string reason) {
  return Error(ErrorCode::kMalformedRow,
               "line " + std::to_string(line) + ": " + reason, line);
}

}  // namespace tracemix
