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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace floodpass {

enum class ErrorKind {
  MalformedHeader,
  MalformedLine,
  DimMismatch,
  DuplicateId,
  NonFiniteValue,
  InvalidLabel,
  InvalidProbability,
  EmptyIntersection,
  NotAligned,
  IdMismatch,
  ClassMismatch,
  ViewMismatch,
  SingleClassData,
  TooFewSamples,
  Stage2SingleClass,
  MissingPassabilityLabels,
  UnsupportedFormat,
  TruncatedPixelData,
  EndpointOutOfBounds,
  InvalidBins,
  LengthMismatch,
  EmptyCounts,
  UnknownLabel,
  InvalidArgument,
  Io,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::InvalidLabel: return "InvalidLabel";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::EmptyIntersection: return "EmptyIntersection";
    case ErrorKind::NotAligned: return "NotAligned";
    case ErrorKind::IdMismatch: return "IdMismatch";
    case ErrorKind::ClassMismatch: return "ClassMismatch";
    case ErrorKind::ViewMismatch: return "ViewMismatch";
    case ErrorKind::SingleClassData: return "SingleClassData";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::Stage2SingleClass: return "Stage2SingleClass";
    case ErrorKind::MissingPassabilityLabels: return "MissingPassabilityLabels";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::TruncatedPixelData: return "TruncatedPixelData";
    case ErrorKind::EndpointOutOfBounds: return "EndpointOutOfBounds";
    case ErrorKind::InvalidBins: return "InvalidBins";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyCounts: return "EmptyCounts";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Data error raised by parsers and algorithms. `line` is 1-based and 0 when
/// the error is not tied to an input line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(kind, message, line)),
        kind_(kind),
        line_(line),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  static std::string format(ErrorKind kind, const std::string& message, std::size_t line) {
    std::string out(to_string(kind));
    if (line != 0) out += " at line " + std::to_string(line);
    out += ": " + message;
    return out;
  }

  ErrorKind kind_;
  std::size_t line_;
  std::string detail_;
};

/// Non-fatal conditions collected during a run (degenerate splits,
/// calibration fallbacks, zero-denominator metrics, ...).
struct Diagnostics {
  std::vector<std::string> warnings;

  void warn(std::string message) { warnings.push_back(std::move(message)); }
  bool empty() const noexcept { return warnings.empty(); }
};

inline void warn(Diagnostics* diag, std::string message) {
  if (diag != nullptr) diag->warn(std::move(message));
}

}  // namespace floodpass
