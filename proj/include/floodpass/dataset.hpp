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

// Feature, label, score and patch-spec containers and their text formats.
//
//   FVEC v1     FVEC\t1 / view\t<name> / dim\t<D> / <id>\t<v1>,...,<vD>
//   LABELS v1   LABELS\t1 / <id>\t<label>
//   SCORE v1    SCORE\t1 / classes\t<c1>,...,<cK> / <id>\t<p1>,...,<pK>
//   PATCHES v1  PATCHES\t1 / <image_id>\t<x1>\t<y1>\t<x2>\t<y2>\t<label-or-?>
//
// Parsers accept LF or CRLF and skip blank lines and lines starting with '#'.
// Writers emit LF and render reals at 9 significant digits.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "floodpass/error.hpp"
#include "floodpass/random.hpp"
#include "floodpass/text.hpp"

namespace floodpass {

/// Per-view sample-by-dimension matrix; row i belongs to ids[i].
struct FeatureMatrix {
  std::string view_name;
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<double> values;  // row-major, ids.size() * dim

  std::size_t rows() const noexcept { return ids.size(); }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {values.data() + i * dim, dim}; }

  /// Throws if any invariant is violated.
  void validate() const {
    if (dim == 0) throw Error(ErrorKind::DimMismatch, "dim must be positive");
    if (values.size() != ids.size() * dim) throw Error(ErrorKind::DimMismatch, "value count does not match ids * dim");
    std::unordered_set<std::string> seen;
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "duplicate id '" + id + "'");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "non-finite feature value");
    }
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

using LabelTable = std::map<std::string, std::string>;

/// Views sharing one id sequence, with the label of every id.
struct MultiViewDataset {
  std::vector<FeatureMatrix> views;
  std::vector<std::string> labels;  // aligned with ids()

  const std::vector<std::string>& ids() const { return views.front().ids; }
  std::size_t size() const { return views.empty() ? 0 : views.front().rows(); }

  LabelTable label_table() const {
    LabelTable out;
    for (std::size_t i = 0; i < size(); ++i) out.emplace(ids()[i], labels[i]);
    return out;
  }
};

/// Per-sample class-probability rows.
struct ScoreMatrix {
  std::vector<std::string> ids;
  std::vector<std::string> classes;
  std::vector<double> probs;  // row-major, ids.size() * classes.size()

  std::size_t rows() const noexcept { return ids.size(); }
  std::size_t cols() const noexcept { return classes.size(); }
  std::span<const double> row(std::size_t i) const { return {probs.data() + i * cols(), cols()}; }
  std::span<double> row(std::size_t i) { return {probs.data() + i * cols(), cols()}; }

  std::size_t class_index(std::string_view name) const {
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) throw Error(ErrorKind::UnknownLabel, "class '" + std::string(name) + "' not in score matrix");
    return static_cast<std::size_t>(it - classes.begin());
  }

  /// Index of the row maximum; ties resolve to the earliest column.
  std::size_t argmax(std::size_t i) const {
    const auto r = row(i);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  void validate(double sum_tolerance = 1e-9) const {
    std::set<std::string> unique(classes.begin(), classes.end());
    if (unique.size() != classes.size()) throw Error(ErrorKind::ClassMismatch, "duplicate class names");
    if (probs.size() != ids.size() * classes.size()) throw Error(ErrorKind::DimMismatch, "probability count mismatch");
    for (std::size_t i = 0; i < rows(); ++i) {
      double sum = 0.0;
      for (double p : row(i)) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::InvalidProbability, "probability outside [0,1] for '" + ids[i] + "'");
        sum += p;
      }
      if (std::abs(sum - 1.0) > sum_tolerance) throw Error(ErrorKind::InvalidProbability, "row '" + ids[i] + "' does not sum to 1");
    }
  }

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;
};

struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::string_view kPassable = "passable";
inline constexpr std::string_view kNonPassable = "non_passable";
inline constexpr std::string_view kEvidence = "evidence";
inline constexpr std::string_view kNoEvidence = "no_evidence";

struct PatchSpec {
  std::string image_id;
  Point p1;
  Point p2;
  std::optional<std::string> label;  // passable | non_passable

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

// ---------------------------------------------------------------------------
// FVEC

inline FeatureMatrix parse_fvec(std::istream& in) {
  text::LineReader reader(in);
  text::expect_magic(reader, "FVEC");
  FeatureMatrix m;
  m.view_name = text::expect_keyed(reader, "view");
  if (!text::is_token(m.view_name)) throw Error(ErrorKind::MalformedHeader, "view name must be a non-empty token", reader.line_no());
  const std::string dim_text = text::expect_keyed(reader, "dim");
  const auto dim = text::parse_int<std::size_t>(dim_text);
  if (!dim || *dim == 0) throw Error(ErrorKind::MalformedHeader, "dim must be a positive integer", reader.line_no());
  m.dim = *dim;

  std::unordered_set<std::string> seen;
  while (auto line = reader.next()) {
    const std::size_t n = reader.line_no();
    const auto parts = text::fields(*line, 2, n);
    std::string id(parts[0]);
    if (!text::is_token(id)) throw Error(ErrorKind::MalformedLine, "sample id must be a non-empty token", n);
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "duplicate id '" + id + "'", n);
    const auto cells = text::split(parts[1], ',');
    if (cells.size() != m.dim) {
      throw Error(ErrorKind::DimMismatch,
                  "expected " + std::to_string(m.dim) + " values, got " + std::to_string(cells.size()), n);
    }
    for (auto cell : cells) m.values.push_back(text::parse_finite(cell, n));
    m.ids.push_back(std::move(id));
  }
  return m;
}

inline void write_fvec(std::ostream& out, const FeatureMatrix& m) {
  out << "FVEC\t1\nview\t" << m.view_name << "\ndim\t" << m.dim << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) out << m.ids[i] << '\t' << text::join_reals(m.row(i)) << '\n';
}

// ---------------------------------------------------------------------------
// LABELS

inline LabelTable parse_labels(std::istream& in) {
  text::LineReader reader(in);
  text::expect_magic(reader, "LABELS");
  LabelTable table;
  while (auto line = reader.next()) {
    const std::size_t n = reader.line_no();
    const auto parts = text::fields(*line, 2, n);
    if (!text::is_token(parts[0])) throw Error(ErrorKind::MalformedLine, "sample id must be a non-empty token", n);
    if (!text::is_token(parts[1])) throw Error(ErrorKind::InvalidLabel, "label must be a non-empty token", n);
    if (!table.emplace(std::string(parts[0]), std::string(parts[1])).second) {
      throw Error(ErrorKind::DuplicateId, "duplicate id '" + std::string(parts[0]) + "'", n);
    }
  }
  return table;
}

inline void write_labels(std::ostream& out, const LabelTable& labels) {
  out << "LABELS\t1\n";
  for (const auto& [id, label] : labels) out << id << '\t' << label << '\n';
}

// ---------------------------------------------------------------------------
// SCORE

/// Rows must sum to 1 within `kScoreFileTolerance`, the precision of 9-digit
/// rendering; accepted rows are renormalized so the in-memory 1e-9 invariant
/// holds.
inline constexpr double kScoreFileTolerance = 1e-6;

inline ScoreMatrix parse_scores(std::istream& in) {
  text::LineReader reader(in);
  text::expect_magic(reader, "SCORE");
  ScoreMatrix m;
  const std::string classes = text::expect_keyed(reader, "classes");
  std::set<std::string> unique;
  for (auto c : text::split(classes, ',')) {
    if (!text::is_token(c)) throw Error(ErrorKind::MalformedHeader, "class names must be non-empty tokens", reader.line_no());
    if (!unique.emplace(c).second) throw Error(ErrorKind::MalformedHeader, "duplicate class '" + std::string(c) + "'", reader.line_no());
    m.classes.emplace_back(c);
  }
  std::unordered_set<std::string> seen;
  while (auto line = reader.next()) {
    const std::size_t n = reader.line_no();
    const auto parts = text::fields(*line, 2, n);
    std::string id(parts[0]);
    if (!text::is_token(id)) throw Error(ErrorKind::MalformedLine, "sample id must be a non-empty token", n);
    if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "duplicate id '" + id + "'", n);
    auto row = text::parse_real_list(parts[1], n);
    if (row.size() != m.classes.size()) {
      throw Error(ErrorKind::DimMismatch,
                  "expected " + std::to_string(m.classes.size()) + " probabilities, got " + std::to_string(row.size()), n);
    }
    double sum = 0.0;
    for (double p : row) {
      if (p < 0.0 || p > 1.0) throw Error(ErrorKind::InvalidProbability, "probability outside [0,1]", n);
      sum += p;
    }
    if (std::abs(sum - 1.0) > kScoreFileTolerance) throw Error(ErrorKind::InvalidProbability, "row does not sum to 1", n);
    for (double& p : row) p /= sum;
    m.probs.insert(m.probs.end(), row.begin(), row.end());
    m.ids.push_back(std::move(id));
  }
  return m;
}

inline void write_scores(std::ostream& out, const ScoreMatrix& m) {
  out << "SCORE\t1\nclasses\t" << text::join(m.classes) << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) out << m.ids[i] << '\t' << text::join_reals(m.row(i)) << '\n';
}

// ---------------------------------------------------------------------------
// PATCHES

inline std::vector<PatchSpec> parse_patches(std::istream& in) {
  text::LineReader reader(in);
  text::expect_magic(reader, "PATCHES");
  std::vector<PatchSpec> specs;
  while (auto line = reader.next()) {
    const std::size_t n = reader.line_no();
    const auto parts = text::fields(*line, 6, n);
    PatchSpec spec;
    if (!text::is_token(parts[0])) throw Error(ErrorKind::MalformedLine, "image id must be a non-empty token", n);
    spec.image_id = std::string(parts[0]);
    std::int64_t coords[4];
    for (int k = 0; k < 4; ++k) {
      coords[k] = text::parse_int_or_throw<std::int64_t>(parts[1 + k], n);
      if (coords[k] < 0) throw Error(ErrorKind::MalformedLine, "coordinates must be non-negative", n);
    }
    spec.p1 = {coords[0], coords[1]};
    spec.p2 = {coords[2], coords[3]};
    if (parts[5] != "?") {
      if (parts[5] != kPassable && parts[5] != kNonPassable) {
        throw Error(ErrorKind::InvalidLabel, "patch label must be passable, non_passable or ?", n);
      }
      spec.label = std::string(parts[5]);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

inline void write_patches(std::ostream& out, std::span<const PatchSpec> specs) {
  out << "PATCHES\t1\n";
  for (const auto& s : specs) {
    out << s.image_id << '\t' << s.p1.x << '\t' << s.p1.y << '\t' << s.p2.x << '\t' << s.p2.y << '\t'
        << (s.label ? *s.label : std::string("?")) << '\n';
  }
}

/// Stable sample id for each patch: the image id for its first occurrence,
/// `<image_id>#<k>` for the k-th (k >= 2).
inline std::vector<std::string> patch_ids(std::span<const PatchSpec> specs) {
  std::map<std::string, std::size_t> occurrences;
  std::vector<std::string> ids;
  ids.reserve(specs.size());
  for (const auto& s : specs) {
    const std::size_t k = ++occurrences[s.image_id];
    ids.push_back(k == 1 ? s.image_id : s.image_id + "#" + std::to_string(k));
  }
  return ids;
}

// String conveniences, mostly for tests.
template <typename Parser>
auto parse_string(const std::string& s, Parser parser) {
  std::istringstream in(s);
  return parser(in);
}

template <typename T, typename Writer>
std::string to_string_with(const T& value, Writer writer) {
  std::ostringstream out;
  writer(out, value);
  return out.str();
}

// ---------------------------------------------------------------------------
// Alignment and splitting

inline MultiViewDataset subset(const MultiViewDataset& d, std::span<const std::size_t> rows) {
  MultiViewDataset out;
  for (const auto& v : d.views) {
    FeatureMatrix s{v.view_name, {}, v.dim, {}};
    s.ids.reserve(rows.size());
    s.values.reserve(rows.size() * v.dim);
    for (std::size_t r : rows) {
      s.ids.push_back(v.ids[r]);
      const auto src = v.row(r);
      s.values.insert(s.values.end(), src.begin(), src.end());
    }
    out.views.push_back(std::move(s));
  }
  for (std::size_t r : rows) out.labels.push_back(d.labels[r]);
  return out;
}

inline FeatureMatrix subset_rows(const FeatureMatrix& v, std::span<const std::size_t> rows) {
  FeatureMatrix s{v.view_name, {}, v.dim, {}};
  for (std::size_t r : rows) {
    s.ids.push_back(v.ids[r]);
    const auto src = v.row(r);
    s.values.insert(s.values.end(), src.begin(), src.end());
  }
  return s;
}

struct AlignResult {
  MultiViewDataset dataset;
  std::vector<std::size_t> dropped_per_view;  // ids of view k not retained
  std::size_t dropped_labels = 0;             // labeled ids not retained
};

/// Restricts every view to the ids present in all views and in `labels`,
/// sorted lexicographically.
inline AlignResult align_views(std::span<const FeatureMatrix> views, const LabelTable& labels) {
  if (views.empty()) throw Error(ErrorKind::InvalidArgument, "align_views needs at least one view");
  std::vector<std::string> common;
  for (const auto& [id, label] : labels) common.push_back(id);  // already sorted
  for (const auto& v : views) {
    std::vector<std::string> sorted = v.ids;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::string> next;
    std::set_intersection(common.begin(), common.end(), sorted.begin(), sorted.end(), std::back_inserter(next));
    common = std::move(next);
  }
  if (common.empty()) throw Error(ErrorKind::EmptyIntersection, "no labeled id is present in every view");

  AlignResult result;
  for (const auto& v : views) {
    std::map<std::string_view, std::size_t> index;
    for (std::size_t i = 0; i < v.rows(); ++i) index.emplace(v.ids[i], i);
    std::vector<std::size_t> rows;
    rows.reserve(common.size());
    for (const auto& id : common) rows.push_back(index.at(id));
    result.dataset.views.push_back(subset_rows(v, rows));
    result.dropped_per_view.push_back(v.rows() - common.size());
  }
  for (const auto& id : common) result.dataset.labels.push_back(labels.at(id));
  result.dropped_labels = labels.size() - common.size();
  return result;
}

struct SplitResult {
  MultiViewDataset train;
  MultiViewDataset test;
  std::vector<std::string> warnings;
};

/// Number of training samples a label with `count` samples receives.
inline std::size_t stratified_train_count(std::size_t count, double train_fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(count) * train_fraction + 0.5));
}

/// Seeded stratified split: each label's samples are shuffled and the first
/// round-half-up(count * fraction) go to train. Row order within each side
/// follows the input order.
inline SplitResult split_dataset(const MultiViewDataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error(ErrorKind::InvalidArgument, "train fraction must lie in (0,1)");
  if (d.size() < 2) throw Error(ErrorKind::TooFewSamples, "split needs at least 2 samples");

  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < d.size(); ++i) by_label[d.labels[i]].push_back(i);

  SplitResult result;
  Rng rng(seed);
  std::vector<char> in_train(d.size(), 0);
  for (auto& [label, rows] : by_label) {
    rng.shuffle(std::span<std::size_t>(rows));
    const std::size_t take = stratified_train_count(rows.size(), train_fraction);
    if (take == 0) result.warnings.push_back("DegenerateSplit: label '" + label + "' receives no training samples");
    if (take == rows.size()) result.warnings.push_back("DegenerateSplit: label '" + label + "' receives no test samples");
    for (std::size_t k = 0; k < take; ++k) in_train[rows[k]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < d.size(); ++i) (in_train[i] ? train_rows : test_rows).push_back(i);
  result.train = subset(d, train_rows);
  result.test = subset(d, test_rows);
  return result;
}

}  // namespace floodpass
