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

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace pubfeat::csv {

// Shortest exact decimal form; round-trips bit-for-bit through strtod.
std::string format_double(double v);

// Strict reader for the project's numeric CSV formats: exact header match,
// fixed field count, no quoting. Errors carry "<path>:<line>: <reason>".
class Reader {
 public:
  Reader(const std::string& path, std::string_view expected_header);

  // Advances to the next data row; false at end of file.
  bool next();
  size_t line() const { return line_; }
  const std::vector<std::string>& fields() const { return fields_; }

  int64_t int_field(size_t idx) const;
  double double_field(size_t idx) const;

  [[noreturn]] void fail(const std::string& reason) const;

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> fields_;
  size_t field_count_;
  size_t line_ = 1;
};

class Writer {
 public:
  Writer(const std::string& path, std::string_view header);

  void begin_row();
  void field(int64_t v);
  void field(double v);
  void field(std::string_view v);
  void end_row();

 private:
  std::ofstream out_;
  bool first_in_row_ = true;
};

std::vector<std::string> split_fields(std::string_view row);

}  // namespace pubfeat::csv
