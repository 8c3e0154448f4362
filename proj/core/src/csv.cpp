// Copyright 2026 The pubfeat-dp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pubfeat/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace pubfeat::csv {

std::string format_double(double v) {
  // Try increasing precision until the value round-trips exactly.
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string> split_fields(std::string_view row) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    const size_t comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      out.emplace_back(row.substr(start));
      return out;
    }
    out.emplace_back(row.substr(start, comma - start));
    start = comma + 1;
  }
}

namespace {

bool read_line(std::ifstream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

}  // namespace

Reader::Reader(const std::string& path, std::string_view expected_header)
    : path_(path), in_(path) {
  if (!in_) throw std::runtime_error(path + ": cannot open for reading");
  std::string header;
  if (!read_line(in_, header)) {
    throw std::runtime_error(path + ":1: missing header row");
  }
  if (header != expected_header) {
    throw std::runtime_error(path + ":1: expected header '" +
                             std::string(expected_header) + "', got '" +
                             header + "'");
  }
  field_count_ = split_fields(expected_header).size();
}

bool Reader::next() {
  std::string row;
  if (!read_line(in_, row)) return false;
  ++line_;
  fields_ = split_fields(row);
  if (fields_.size() != field_count_) {
    fail("expected " + std::to_string(field_count_) + " fields, got " +
         std::to_string(fields_.size()));
  }
  return true;
}

int64_t Reader::int_field(size_t idx) const {
  const std::string& s = fields_.at(idx);
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end == s.c_str() || *end != '\0') {
    fail("field " + std::to_string(idx + 1) + " is not an integer: '" + s +
         "'");
  }
  return v;
}

double Reader::double_field(size_t idx) const {
  const std::string& s = fields_.at(idx);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end == s.c_str() || *end != '\0') {
    fail("field " + std::to_string(idx + 1) + " is not a number: '" + s +
         "'");
  }
  return v;
}

void Reader::fail(const std::string& reason) const {
  throw std::runtime_error(path_ + ":" + std::to_string(line_) + ": " +
                           reason);
}

Writer::Writer(const std::string& path, std::string_view header)
    : out_(path) {
  if (!out_) throw std::runtime_error(path + ": cannot open for writing");
  out_ << header << '\n';
}

void Writer::begin_row() { first_in_row_ = true; }

void Writer::field(int64_t v) {
  if (!first_in_row_) out_ << ',';
  first_in_row_ = false;
  out_ << v;
}

void Writer::field(double v) {
  if (!first_in_row_) out_ << ',';
  first_in_row_ = false;
  out_ << format_double(v);
}

void Writer::field(std::string_view v) {
  if (!first_in_row_) out_ << ',';
  first_in_row_ = false;
  out_ << v;
}

void Writer::end_row() { out_ << '\n'; }

}  // namespace pubfeat::csv
