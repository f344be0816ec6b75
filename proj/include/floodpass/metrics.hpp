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

// Confusion counts, accuracy, F1, the cascade mean F1 and report rendering.
//
// Zero-denominator conventions: precision is 0 when nothing was predicted
// positive, recall is 0 when no truth is positive, and F1 is 0 when both are
// 0. Every use of a convention is reported as a flag.

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/text.hpp"
#include "json.hpp"

namespace floodpass {

struct ConfusionCounts {
  std::map<std::pair<std::string, std::string>, std::size_t> cells;  // (truth, prediction) -> count
  std::set<std::string> labels;  // observed plus declared label space
  std::size_t total = 0;

  std::size_t at(const std::string& truth, const std::string& pred) const {
    const auto it = cells.find({truth, pred});
    return it == cells.end() ? 0 : it->second;
  }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Tallies aligned prediction/truth pairs. `declared` extends the label space
/// with labels that may not occur in either list.
inline ConfusionCounts confusion(std::span<const std::string> pred, std::span<const std::string> truth,
                                 std::span<const std::string> declared = {}) {
  if (pred.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "got " + std::to_string(pred.size()) + " predictions for " + std::to_string(truth.size()) + " truths");
  }
  ConfusionCounts c;
  c.labels.insert(declared.begin(), declared.end());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ++c.cells[{truth[i], pred[i]}];
    c.labels.insert(truth[i]);
    c.labels.insert(pred[i]);
  }
  c.total = pred.size();
  return c;
}

struct BinaryTally {
  std::size_t tp = 0, fp = 0, fn = 0;
};

inline BinaryTally tally(const ConfusionCounts& c, const std::string& positive) {
  BinaryTally t;
  for (const auto& [key, n] : c.cells) {
    const bool truth_pos = key.first == positive;
    const bool pred_pos = key.second == positive;
    if (truth_pos && pred_pos) t.tp += n;
    else if (pred_pos) t.fp += n;
    else if (truth_pos) t.fn += n;
  }
  return t;
}

/// F1 = 2tp / (2tp + fp + fn), which equals 2PR/(P+R) whenever P+R > 0.
inline double f1(const ConfusionCounts& c, const std::string& positive, Diagnostics* diag = nullptr) {
  if (c.total == 0) throw Error(ErrorKind::EmptyCounts, "F1 of an empty confusion table");
  if (!c.labels.contains(positive)) throw Error(ErrorKind::UnknownLabel, "label '" + positive + "' is not in the label space");
  const auto t = tally(c, positive);
  if (t.tp + t.fp == 0) warn(diag, "ZeroDenominator: no predictions of '" + positive + "', precision taken as 0");
  if (t.tp + t.fn == 0) warn(diag, "ZeroDenominator: no truths of '" + positive + "', recall taken as 0");
  if (t.tp == 0) return 0.0;
  return 2.0 * static_cast<double>(t.tp) / static_cast<double>(2 * t.tp + t.fp + t.fn);
}

inline const std::vector<std::string>& cascade_labels() {
  static const std::vector<std::string> labels{std::string(kNoEvidence), std::string(kNonPassable), std::string(kPassable)};
  return labels;
}

/// (F1(passable) + F1(non_passable)) / 2, each one-vs-rest over the 3-way
/// outcomes, so a no_evidence prediction on a passable truth is a false
/// negative for passable.
inline double mean_f1(std::span<const std::string> pred, std::span<const std::string> truth, Diagnostics* diag = nullptr) {
  const auto& allowed = cascade_labels();
  for (auto list : {pred, truth}) {
    for (const auto& l : list) {
      if (std::find(allowed.begin(), allowed.end(), l) == allowed.end()) {
        throw Error(ErrorKind::UnknownLabel, "'" + l + "' is not a cascade outcome");
      }
    }
  }
  const auto c = confusion(pred, truth, allowed);
  return (f1(c, std::string(kPassable), diag) + f1(c, std::string(kNonPassable), diag)) / 2.0;
}

inline double accuracy(const ConfusionCounts& c) {
  if (c.total == 0) throw Error(ErrorKind::EmptyCounts, "accuracy of an empty confusion table");
  std::size_t correct = 0;
  for (const auto& [key, n] : c.cells) {
    if (key.first == key.second) correct += n;
  }
  return static_cast<double>(correct) / static_cast<double>(c.total);
}

/// Recall of every truth label. Labels without truth samples are omitted and
/// reported.
inline std::map<std::string, double> per_class_accuracy(const ConfusionCounts& c, Diagnostics* diag = nullptr) {
  if (c.total == 0) throw Error(ErrorKind::EmptyCounts, "per-class accuracy of an empty confusion table");
  std::map<std::string, std::size_t> totals, correct;
  for (const auto& [key, n] : c.cells) {
    totals[key.first] += n;
    if (key.first == key.second) correct[key.first] += n;
  }
  std::map<std::string, double> out;
  for (const auto& label : c.labels) {
    const auto it = totals.find(label);
    if (it == totals.end()) {
      warn(diag, "NoTruthSamples: per-class accuracy of '" + label + "' omitted");
      continue;
    }
    out[label] = static_cast<double>(correct[label]) / static_cast<double>(it->second);
  }
  return out;
}

struct EvalReport {
  std::size_t samples = 0;
  double overall_accuracy = 0.0;
  std::map<std::string, double> per_class_accuracy;
  std::map<std::string, double> f1_per_class;
  std::optional<double> mean_f1;  // cascade evaluations only
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> flags;

  void set_meta(const std::string& key, const std::string& value) {
    for (auto& [k, v] : metadata) {
      if (k == key) {
        v = value;
        return;
      }
    }
    metadata.emplace_back(key, value);
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Builds a report over aligned predictions and truths. `cascade` adds the
/// mean F1 and requires every label to be a cascade outcome.
inline EvalReport evaluate(std::span<const std::string> pred, std::span<const std::string> truth,
                           std::span<const std::string> declared = {}, bool cascade = false) {
  Diagnostics diag;
  const auto c = confusion(pred, truth, declared);
  EvalReport r;
  r.samples = c.total;
  r.overall_accuracy = accuracy(c);
  r.per_class_accuracy = per_class_accuracy(c, &diag);
  for (const auto& label : c.labels) r.f1_per_class[label] = f1(c, label, &diag);
  if (cascade) {
    r.mean_f1 = mean_f1(pred, truth, nullptr);
    r.set_meta("mean_f1_reading", "one-vs-rest over no_evidence/passable/non_passable");
  }
  r.flags = std::move(diag.warnings);
  return r;
}

/// Percentage with two decimals: 0.8881 -> "88.81".
inline std::string format_percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", rate * 100.0);
  return buf;
}

// ---------------------------------------------------------------------------
// REPORT v1 text and JSON

inline std::string render_report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "REPORT\t1\n";
  out << "samples\t" << r.samples << '\n';
  out << "overall_accuracy\t" << format_percent(r.overall_accuracy) << '\n';
  if (r.mean_f1) out << "mean_f1\t" << format_percent(*r.mean_f1) << '\n';
  out << "class\taccuracy\tf1\n";
  std::set<std::string> labels;
  for (const auto& [l, v] : r.per_class_accuracy) labels.insert(l);
  for (const auto& [l, v] : r.f1_per_class) labels.insert(l);
  for (const auto& l : labels) {
    const auto acc = r.per_class_accuracy.find(l);
    const auto f = r.f1_per_class.find(l);
    out << l << '\t' << (acc == r.per_class_accuracy.end() ? "-" : format_percent(acc->second)) << '\t'
        << (f == r.f1_per_class.end() ? "-" : format_percent(f->second)) << '\n';
  }
  for (const auto& [k, v] : r.metadata) out << "meta\t" << k << '\t' << v << '\n';
  for (const auto& f : r.flags) out << "flag\t" << f << '\n';
  return out.str();
}

inline nlohmann::ordered_json report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["format"] = "REPORT";
  j["version"] = 1;
  j["samples"] = r.samples;
  j["overall_accuracy"] = r.overall_accuracy;
  j["per_class_accuracy"] = nlohmann::ordered_json::object();
  for (const auto& [l, v] : r.per_class_accuracy) j["per_class_accuracy"][l] = v;
  j["f1_per_class"] = nlohmann::ordered_json::object();
  for (const auto& [l, v] : r.f1_per_class) j["f1_per_class"][l] = v;
  if (r.mean_f1) j["mean_f1"] = *r.mean_f1;
  j["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metadata) j["metadata"][k] = v;
  j["flags"] = r.flags;
  return j;
}

inline std::string render_report_json(const EvalReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline EvalReport parse_report_json(const std::string& s) {
  try {
    const auto j = nlohmann::ordered_json::parse(s);
    if (j.at("format") != "REPORT" || j.at("version") != 1) throw Error(ErrorKind::MalformedHeader, "not a REPORT v1 document");
    EvalReport r;
    r.samples = j.at("samples").get<std::size_t>();
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    for (const auto& [k, v] : j.at("per_class_accuracy").items()) r.per_class_accuracy[k] = v.get<double>();
    for (const auto& [k, v] : j.at("f1_per_class").items()) r.f1_per_class[k] = v.get<double>();
    if (j.contains("mean_f1")) r.mean_f1 = j.at("mean_f1").get<double>();
    for (const auto& [k, v] : j.at("metadata").items()) r.metadata.emplace_back(k, v.get<std::string>());
    r.flags = j.at("flags").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedLine, std::string("report JSON: ") + e.what());
  }
}

enum class ReportFormat { Text, Json };

inline std::string render_report(const EvalReport& r, ReportFormat format) {
  return format == ReportFormat::Json ? render_report_json(r) : render_report_text(r);
}

}  // namespace floodpass
