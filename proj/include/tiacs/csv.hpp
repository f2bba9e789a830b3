// Copyright 2026 The tiacs Authors
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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace tiacs::csv {

// Minimal comma-separated reader for the project's own formats: no quoting,
// header row required, blank lines skipped, trailing '\r' tolerated.
class Reader {
 public:
  Reader(const std::filesystem::path& path, std::vector<std::string> expected_header);

  /// False at end of file. Throws ParseError on a wrong field count.
  bool next();

  std::size_t line() const noexcept { return line_; }
  std::size_t size() const noexcept { return fields_.size(); }
  std::string_view operator[](std::size_t i) const { return fields_[i]; }

  double as_double(std::size_t i) const;
  std::int64_t as_int(std::size_t i) const;

  /// Raises a ParseError pointing at the current line.
  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string file_;
  std::ifstream in_;
  std::string buffer_;
  std::vector<std::string_view> fields_;
  std::size_t columns_ = 0;
  std::size_t line_ = 0;
};

std::vector<std::string_view> split(std::string_view line, char sep = ',');

/// Opens a file for writing and throws on failure.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace tiacs::csv
