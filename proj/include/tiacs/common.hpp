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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tiacs {

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;

struct LonLat {
  double lon = 0.0;
  double lat = 0.0;

  friend bool operator==(const LonLat&, const LonLat&) = default;
};

using Date = std::chrono::year_month_day;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the file and 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input is well-formed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

enum class PortType : std::uint8_t { L2, DCFC };

std::string_view to_string(PortType type);
PortType parse_port_type(std::string_view text);

enum class StayKind : std::uint8_t { Home, Work, Other };

std::string_view to_string(StayKind kind);
StayKind parse_stay_kind(std::string_view text);

/// Parses YYYY-MM-DD; throws ValidationError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Reads a whole file; throws Error if it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of a file's content.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace tiacs
