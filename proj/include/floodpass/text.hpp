// Copyright 2026 The floodpass Authors
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

// Line-oriented text helpers shared by every on-disk format.

#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodpass/error.hpp"

namespace floodpass::text {

/// Reads logical lines, stripping a trailing CR and skipping blank lines and
/// `#` comment lines. Tracks the physical line number of the last line read.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::optional<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return line;
    }
    return std::nullopt;
  }

  std::string expect(std::string_view what) {
    auto line = next();
    if (!line) throw Error(ErrorKind::MalformedHeader, "unexpected end of input, expected " + std::string(what), line_no_ + 1);
    return *line;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline bool is_token(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') return false;
  }
  return true;
}

/// Parses a finite or non-finite real; returns nullopt on syntax errors.
inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

inline double parse_finite(std::string_view s, std::size_t line) {
  const auto v = parse_real(s);
  if (!v) throw Error(ErrorKind::MalformedLine, "not a number: '" + std::string(s) + "'", line);
  if (!std::isfinite(*v)) throw Error(ErrorKind::NonFiniteValue, "non-finite value '" + std::string(s) + "'", line);
  return *v;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

template <typename Int>
Int parse_int_or_throw(std::string_view s, std::size_t line, ErrorKind kind = ErrorKind::MalformedLine) {
  const auto v = parse_int<Int>(s);
  if (!v) throw Error(kind, "not an integer: '" + std::string(s) + "'", line);
  return *v;
}

/// Renders a real at 9 significant digits (`%.9g`), the shared numeric
/// rendering of every text format.
inline std::string format_real(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

/// Shortest representation that reparses to the identical double.
inline std::string format_exact(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string join_reals(std::span<const double> values, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_real(values[i]);
  }
  return out;
}

template <typename Range>
std::string join(const Range& items, char sep = ',') {
  std::string out;
  bool first = true;
  for (const auto& item : items) {
    if (!first) out += sep;
    out += item;
    first = false;
  }
  return out;
}

inline std::vector<double> parse_real_list(std::string_view csv, std::size_t line) {
  std::vector<double> out;
  if (csv.empty()) return out;
  for (auto cell : split(csv, ',')) out.push_back(parse_finite(cell, line));
  return out;
}

/// Splits `line` on tabs and checks the field count.
inline std::vector<std::string_view> fields(std::string_view line, std::size_t expected, std::size_t line_no) {
  auto parts = split(line, '\t');
  if (parts.size() != expected) {
    throw Error(ErrorKind::MalformedLine,
                "expected " + std::to_string(expected) + " tab-separated fields, got " + std::to_string(parts.size()),
                line_no);
  }
  return parts;
}

/// Checks a `<MAGIC><TAB><version>` header line.
inline void expect_magic(LineReader& reader, std::string_view magic, std::string_view version = "1") {
  const std::string line = reader.expect(std::string(magic) + " header");
  const auto parts = split(line, '\t');
  if (parts.size() != 2 || parts[0] != magic || parts[1] != version) {
    throw Error(ErrorKind::MalformedHeader,
                "expected '" + std::string(magic) + "\\t" + std::string(version) + "', got '" + line + "'",
                reader.line_no());
  }
}

/// Reads a `<key><TAB><value>` header line.
inline std::string expect_keyed(LineReader& reader, std::string_view key) {
  const std::string line = reader.expect(std::string(key) + " line");
  const auto parts = split(line, '\t');
  if (parts.size() != 2 || parts[0] != key) {
    throw Error(ErrorKind::MalformedHeader, "expected '" + std::string(key) + "\\t<value>', got '" + line + "'",
                reader.line_no());
  }
  return std::string(parts[1]);
}

}  // namespace floodpass::text
