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

#include "tiacs/csv.hpp"

#include <charconv>
#include <cmath>

#include "tiacs/common.hpp"

namespace tiacs::csv {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ',';
    out += p;
  }
  return out;
}

}  // namespace

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  for (;;) {
    const auto pos = line.find(sep, begin);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

Reader::Reader(const std::filesystem::path& path, std::vector<std::string> expected_header)
    : file_(path.string()), in_(path), columns_(expected_header.size()) {
  if (!in_) throw Error("cannot open " + file_);
  if (!std::getline(in_, buffer_)) throw ParseError(file_, 1, "missing header");
  line_ = 1;
  if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
  if (!buffer_.empty() && static_cast<unsigned char>(buffer_[0]) == 0xEF) buffer_.erase(0, 3);  // BOM
  if (buffer_ != join(expected_header)) {
    throw ParseError(file_, 1, "unexpected header '" + buffer_ + "', expected '" + join(expected_header) + "'");
  }
}

bool Reader::next() {
  while (std::getline(in_, buffer_)) {
    ++line_;
    if (!buffer_.empty() && buffer_.back() == '\r') buffer_.pop_back();
    if (buffer_.empty()) continue;
    fields_ = split(buffer_);
    if (fields_.size() != columns_) {
      fail("expected " + std::to_string(columns_) + " fields, found " + std::to_string(fields_.size()));
    }
    return true;
  }
  return false;
}

double Reader::as_double(std::size_t i) const {
  const auto text = fields_.at(i);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    fail("field " + std::to_string(i + 1) + ": not a number '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t Reader::as_int(std::size_t i) const {
  const auto text = fields_.at(i);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    fail("field " + std::to_string(i + 1) + ": not an integer '" + std::string(text) + "'");
  }
  return value;
}

void Reader::fail(const std::string& what) const { throw ParseError(file_, line_, what); }

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace tiacs::csv
