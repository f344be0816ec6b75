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

// Early, late and double fusion over per-view features and scores.
//
//   early   one classifier on the concatenation of (block-normalized) views
//   late    one classifier per view, probability rows averaged
//   double  the early and late score matrices averaged

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/parallel.hpp"
#include "floodpass/svm.hpp"
#include "floodpass/text.hpp"

namespace floodpass {

enum class FusionTag { Early, Late, Double };
enum class LateMode { MeanProba, MajorityVote };

struct FusionStrategy {
  FusionTag tag = FusionTag::Double;
  LateMode late_mode = LateMode::MeanProba;
  bool block_norm = true;

  bool uses_early() const { return tag != FusionTag::Late; }
  bool uses_late() const { return tag != FusionTag::Early; }

  friend bool operator==(const FusionStrategy&, const FusionStrategy&) = default;
};

inline std::string to_string(FusionTag t) {
  switch (t) {
    case FusionTag::Early: return "early";
    case FusionTag::Late: return "late";
    case FusionTag::Double: return "double";
  }
  return "?";
}

inline std::string to_string(LateMode m) { return m == LateMode::MeanProba ? "mean_proba" : "majority_vote"; }

inline FusionTag parse_fusion_tag(std::string_view s) {
  if (s == "early") return FusionTag::Early;
  if (s == "late") return FusionTag::Late;
  if (s == "double") return FusionTag::Double;
  throw Error(ErrorKind::InvalidArgument, "unknown fusion strategy '" + std::string(s) + "'");
}

inline LateMode parse_late_mode(std::string_view s) {
  if (s == "mean_proba" || s == "mean") return LateMode::MeanProba;
  if (s == "majority_vote" || s == "vote") return LateMode::MajorityVote;
  throw Error(ErrorKind::InvalidArgument, "unknown late mode '" + std::string(s) + "'");
}

inline void check_aligned(std::span<const FeatureMatrix> views) {
  if (views.empty()) throw Error(ErrorKind::NotAligned, "no views given");
  for (const auto& v : views) {
    if (v.ids != views.front().ids) throw Error(ErrorKind::NotAligned, "view '" + v.view_name + "' has a different id sequence");
  }
}

/// Concatenates views per sample. With `block_norm`, each view's block is
/// scaled to unit L2 norm first (all-zero blocks stay zero).
inline FeatureMatrix early_fuse(std::span<const FeatureMatrix> views, bool block_norm = true) {
  check_aligned(views);
  FeatureMatrix out;
  out.ids = views.front().ids;
  out.view_name = "early(";
  for (std::size_t k = 0; k < views.size(); ++k) {
    out.view_name += (k ? "+" : "") + views[k].view_name;
    out.dim += views[k].dim;
  }
  out.view_name += ")";
  out.values.reserve(out.rows() * out.dim);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (const auto& v : views) {
      const auto block = v.row(i);
      double scale = 1.0;
      if (block_norm) {
        const double norm = std::sqrt(dot(block, block));
        scale = norm > 0.0 ? 1.0 / norm : 0.0;
      }
      for (double x : block) out.values.push_back(block_norm ? x * scale : x);
    }
  }
  return out;
}

inline void check_compatible(const ScoreMatrix& ref, const ScoreMatrix& other) {
  if (other.classes != ref.classes) throw Error(ErrorKind::ClassMismatch, "score matrices have different class lists");
  if (other.ids != ref.ids) throw Error(ErrorKind::IdMismatch, "score matrices have different id sequences");
}

/// Cell-wise mean of probability rows. Each cell is summed in sorted order,
/// which makes the result exactly invariant to the order of `scores`.
inline ScoreMatrix late_fuse(std::span<const ScoreMatrix> scores) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "late_fuse needs at least one score matrix");
  for (const auto& s : scores) check_compatible(scores.front(), s);
  ScoreMatrix out = scores.front();
  const double count = static_cast<double>(scores.size());
  std::vector<double> cell(scores.size());
  for (std::size_t c = 0; c < out.probs.size(); ++c) {
    for (std::size_t k = 0; k < scores.size(); ++k) cell[k] = scores[k].probs[c];
    std::sort(cell.begin(), cell.end());
    double sum = 0.0;
    for (double v : cell) sum += v;
    out.probs[c] = sum / count;
  }
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    double sum = 0.0;
    for (double p : row) sum += p;
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& p : row) p /= sum;
    }
  }
  return out;
}

inline ScoreMatrix double_fuse(const ScoreMatrix& early, const ScoreMatrix& late) {
  const ScoreMatrix pair[] = {early, late};
  return late_fuse(pair);
}

/// One-hot rows for the class receiving the most per-view argmax votes.
/// Ties go to the lexicographically smallest class and are reported.
inline ScoreMatrix majority_vote(std::span<const ScoreMatrix> scores, Diagnostics* diag = nullptr) {
  if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "majority_vote needs at least one score matrix");
  for (const auto& s : scores) check_compatible(scores.front(), s);
  ScoreMatrix out = scores.front();
  std::fill(out.probs.begin(), out.probs.end(), 0.0);
  std::vector<std::size_t> order(out.cols());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return out.classes[l] < out.classes[r]; });
  for (std::size_t i = 0; i < out.rows(); ++i) {
    std::vector<std::size_t> votes(out.cols(), 0);
    for (const auto& s : scores) ++votes[s.argmax(i)];
    std::size_t best = order.front();
    bool tie = false;
    for (std::size_t c : order) {
      if (votes[c] > votes[best]) {
        best = c;
        tie = false;
      } else if (c != best && votes[c] == votes[best]) {
        tie = true;
      }
    }
    if (tie) warn(diag, "VoteTie: '" + out.ids[i] + "' resolved to '" + out.classes[best] + "'");
    out.row(i)[best] = 1.0;
  }
  return out;
}

struct FusionModel {
  FusionStrategy strategy;
  std::vector<std::string> view_names;
  std::vector<std::size_t> view_dims;
  std::vector<MulticlassModel> per_view;  // late / double
  std::optional<MulticlassModel> early;   // early / double

  const std::vector<std::string>& classes() const { return early ? early->classes : per_view.front().classes; }

  friend bool operator==(const FusionModel&, const FusionModel&) = default;
};

/// Trains the components the strategy needs. Per-view and early models are
/// independent and run on up to `jobs` threads.
inline FusionModel train_fusion(const MultiViewDataset& d, const FusionStrategy& s, const SvmHyperParams& hp,
                                std::size_t jobs = 1, Diagnostics* diag = nullptr) {
  if (d.views.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no views");
  check_aligned(d.views);
  FusionModel m;
  m.strategy = s;
  for (const auto& v : d.views) {
    m.view_names.push_back(v.view_name);
    m.view_dims.push_back(v.dim);
  }
  const std::size_t n_late = s.uses_late() ? d.views.size() : 0;
  const std::size_t n_tasks = n_late + (s.uses_early() ? 1 : 0);
  std::vector<MulticlassModel> trained(n_tasks);
  std::vector<Diagnostics> notes(n_tasks);
  parallel_for(n_tasks, jobs, [&](std::size_t t) {
    if (t < n_late) {
      trained[t] = train_ovr(d.views[t], d.labels, hp, 1, &notes[t]);
    } else {
      trained[t] = train_ovr(early_fuse(d.views, s.block_norm), d.labels, hp, 1, &notes[t]);
    }
  });
  for (std::size_t t = 0; t < n_tasks; ++t) {
    for (auto& w : notes[t].warnings) warn(diag, std::move(w));
  }
  if (s.uses_early()) {
    m.early = std::move(trained.back());
    trained.pop_back();
  }
  m.per_view = std::move(trained);
  return m;
}

inline void check_views(const FusionModel& m, std::span<const FeatureMatrix> views) {
  if (views.size() != m.view_names.size()) {
    throw Error(ErrorKind::ViewMismatch,
                "model expects " + std::to_string(m.view_names.size()) + " views, got " + std::to_string(views.size()));
  }
  for (std::size_t k = 0; k < views.size(); ++k) {
    if (views[k].view_name != m.view_names[k] || views[k].dim != m.view_dims[k]) {
      throw Error(ErrorKind::ViewMismatch, "view " + std::to_string(k) + " is '" + views[k].view_name + "' (dim " +
                                               std::to_string(views[k].dim) + "), model expects '" + m.view_names[k] +
                                               "' (dim " + std::to_string(m.view_dims[k]) + ")");
    }
  }
}

struct FusionScores {
  std::optional<ScoreMatrix> early;
  std::optional<ScoreMatrix> late;
  ScoreMatrix fused;
};

/// Component and fused scores, for callers that need the intermediates.
inline FusionScores predict_fusion_parts(const FusionModel& m, std::span<const FeatureMatrix> views,
                                         Diagnostics* diag = nullptr) {
  check_views(m, views);
  check_aligned(views);
  FusionScores out;
  if (m.early) out.early = predict_proba(*m.early, early_fuse(views, m.strategy.block_norm), diag);
  if (!m.per_view.empty()) {
    std::vector<ScoreMatrix> per_view;
    for (std::size_t k = 0; k < views.size(); ++k) per_view.push_back(predict_proba(m.per_view[k], views[k], diag));
    out.late = m.strategy.late_mode == LateMode::MeanProba ? late_fuse(per_view) : majority_vote(per_view, diag);
  }
  switch (m.strategy.tag) {
    case FusionTag::Early: out.fused = *out.early; break;
    case FusionTag::Late: out.fused = *out.late; break;
    case FusionTag::Double: out.fused = double_fuse(*out.early, *out.late); break;
  }
  return out;
}

inline ScoreMatrix predict_fusion(const FusionModel& m, std::span<const FeatureMatrix> views, Diagnostics* diag = nullptr) {
  return predict_fusion_parts(m, views, diag).fused;
}

// ---------------------------------------------------------------------------
// FUSION v1: header lines followed by one embedded MODEL v1 block per
// component ("component\tearly" or "component\tview:<name>").

inline void write_fusion(std::ostream& out, const FusionModel& m) {
  out << "FUSION\t1\n";
  out << "strategy\t" << to_string(m.strategy.tag) << '\n';
  out << "late_mode\t" << to_string(m.strategy.late_mode) << '\n';
  out << "block_norm\t" << (m.strategy.block_norm ? 1 : 0) << '\n';
  out << "views\t" << text::join(m.view_names) << '\n';
  std::vector<std::string> dims;
  for (auto d : m.view_dims) dims.push_back(std::to_string(d));
  out << "dims\t" << text::join(dims) << '\n';
  if (m.early) {
    out << "component\tearly\n";
    write_model(out, *m.early);
  }
  for (std::size_t k = 0; k < m.per_view.size(); ++k) {
    out << "component\tview:" << m.view_names[k] << '\n';
    write_model(out, m.per_view[k]);
  }
  out << "end\tFUSION\n";
}

inline FusionModel read_fusion(text::LineReader& reader) {
  text::expect_magic(reader, "FUSION");
  FusionModel m;
  try {
    m.strategy.tag = parse_fusion_tag(text::expect_keyed(reader, "strategy"));
    m.strategy.late_mode = parse_late_mode(text::expect_keyed(reader, "late_mode"));
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedHeader, e.detail(), reader.line_no());
  }
  const std::string block_norm = text::expect_keyed(reader, "block_norm");
  if (block_norm != "0" && block_norm != "1") throw Error(ErrorKind::MalformedHeader, "block_norm must be 0 or 1", reader.line_no());
  m.strategy.block_norm = block_norm == "1";
  const std::string views = text::expect_keyed(reader, "views");
  for (auto v : text::split(views, ',')) m.view_names.emplace_back(v);
  const std::string dims = text::expect_keyed(reader, "dims");
  for (auto d : text::split(dims, ',')) {
    m.view_dims.push_back(text::parse_int_or_throw<std::size_t>(d, reader.line_no(), ErrorKind::MalformedHeader));
  }
  if (m.view_names.size() != m.view_dims.size()) throw Error(ErrorKind::MalformedHeader, "views and dims differ in length", reader.line_no());
  if (m.strategy.uses_early()) {
    if (text::expect_keyed(reader, "component") != "early") throw Error(ErrorKind::MalformedLine, "expected early component", reader.line_no());
    m.early = read_model(reader);
  }
  if (m.strategy.uses_late()) {
    for (const auto& name : m.view_names) {
      if (text::expect_keyed(reader, "component") != "view:" + name) {
        throw Error(ErrorKind::MalformedLine, "expected component view:" + name, reader.line_no());
      }
      m.per_view.push_back(read_model(reader));
    }
  }
  if (text::expect_keyed(reader, "end") != "FUSION") throw Error(ErrorKind::MalformedLine, "expected 'end\\tFUSION'", reader.line_no());
  const auto& classes = m.classes();
  if (m.early && m.early->classes != classes) throw Error(ErrorKind::ClassMismatch, "components disagree on classes");
  for (std::size_t k = 0; k < m.per_view.size(); ++k) {
    if (m.per_view[k].classes != classes) throw Error(ErrorKind::ClassMismatch, "components disagree on classes");
    if (m.per_view[k].dim != m.view_dims[k]) throw Error(ErrorKind::DimMismatch, "component dim disagrees with header");
  }
  return m;
}

inline FusionModel parse_fusion(std::istream& in) {
  text::LineReader reader(in);
  return read_fusion(reader);
}

}  // namespace floodpass
