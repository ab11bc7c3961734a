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

// Minimal strict CSV support for the trace, profile and report formats.
// Fields may be double-quoted ("" escapes a quote); records never span lines.

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tracemix/error.hpp"

namespace tracemix::csv {

using Row = std::vector<std::string>;

/// Splits one CSV record. Throws MalformedRow on an unterminated quote or
/// stray characters after a closing quote.
inline Row split_record(std::string_view line, std::size_t line_no) {
  Row fields;
  std::string cur;
  std::size_t i = 0;
  bool field_start = true;
  while (true) {
    if (i == line.size()) {
      fields.push_back(std::move(cur));
      break;
    }
    char c = line[i];
    if (field_start && c == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cur.push_back('"');
            i += 2;
            continue;
          }
          closed = true;
          ++i;
          break;
        }
        cur.push_back(line[i++]);
      }
      if (!closed) throw malformed_row(line_no, "unterminated quoted field");
      if (i < line.size() && line[i] != ',') {
        throw malformed_row(line_no, "unexpected character after quoted field");
      }
      field_start = false;
      continue;
    }
    if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
      field_start = true;
      ++i;
      if (i == line.size()) {
        fields.emplace_back();
        break;
      }
      continue;
    }
    cur.push_back(c);
    field_start = false;
    ++i;
  }
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string join(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.push_back(',');
    out += quote(row[i]);
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line_no,
                           std::string_view column) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() ||
      !std::isfinite(v)) {
    throw malformed_row(line_no, "column '" + std::string(column) +
                                     "' is not a finite number: '" +
                                     std::string(s) + "'");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view s, std::size_t line_no,
                              std::string_view column) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw malformed_row(line_no, "column '" + std::string(column) +
                                     "' is not an integer: '" + std::string(s) +
                                     "'");
  }
  return v;
}

/// A parsed CSV document: header plus data rows, each with its 1-based line.
struct Document {
  Row header;
  std::vector<std::pair<std::size_t, Row>> rows;
};

inline Document parse(std::istream& in) {
  Document doc;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.empty()) throw Error(ErrorCode::kMissingHeader, "empty header line");
      doc.header = split_record(line, line_no);
      have_header = true;
      continue;
    }
    // A lone trailing blank line is tolerated; interior blank lines are not.
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw malformed_row(line_no, "blank line");
    }
    doc.rows.emplace_back(line_no, split_record(line, line_no));
  }
  if (!have_header) throw Error(ErrorCode::kMissingHeader, "file has no header");
  return doc;
}

inline Document parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return parse(in);
}

inline Document parse_string(const std::string& text) {
  std::istringstream in(text);
  return parse(in);
}

/// Checks that `header` starts with `required` (in order). Returns the number
/// of extra trailing columns.
inline std::size_t expect_header(const Row& header,
                                 const std::vector<std::string>& required) {
  if (header.size() < required.size()) {
    throw Error(ErrorCode::kMissingHeader, "expected header '" + join(required) +
                                               "', got '" + join(header) + "'");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (header[i] != required[i]) {
      throw Error(ErrorCode::kMissingHeader,
                  "expected column '" + required[i] + "' at position " +
                      std::to_string(i + 1) + ", got '" + header[i] + "'");
    }
  }
  return header.size() - required.size();
}

}  // namespace tracemix::csv
