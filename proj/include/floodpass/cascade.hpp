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

// Two-stage evidence -> passability classifier. Stage 2 is only trained on,
// and only evaluated for, samples that stage 1 accepts as evidence.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/fusion.hpp"
#include "floodpass/svm.hpp"
#include "floodpass/text.hpp"

namespace floodpass {

struct CascadeLabel {
  std::string id;
  std::string value;                  // no_evidence | passable | non_passable
  double stage1_proba = 0.0;          // P(evidence)
  std::optional<double> stage2_proba;  // P(passable), iff value != no_evidence

  friend bool operator==(const CascadeLabel&, const CascadeLabel&) = default;
};

struct CascadeModel {
  FusionModel stage1;  // {evidence, no_evidence}
  FusionModel stage2;  // {non_passable, passable}
  double threshold1 = 0.5;
  double threshold2 = 0.5;

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

inline void check_thresholds(double t1, double t2) {
  if (!(t1 > 0.0 && t1 < 1.0) || !(t2 > 0.0 && t2 < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "cascade thresholds must lie in (0,1)");
  }
}

/// Labels a sample from its stage probabilities. Equality with a threshold
/// counts as evidence at stage 1 and as passable at stage 2.
inline std::string cascade_decision(double p_evidence, std::optional<double> p_passable, double t1, double t2) {
  if (p_evidence < t1) return std::string(kNoEvidence);
  if (!p_passable) throw Error(ErrorKind::InvalidArgument, "stage-2 probability required for an evidence-positive sample");
  return std::string(*p_passable >= t2 ? kPassable : kNonPassable);
}

struct CascadeTrainInfo {
  std::size_t stage1_samples = 0;
  std::size_t stage2_samples = 0;
};

/// Stage 1 is trained on every sample of `d` (labels evidence/no_evidence);
/// stage 2 on the evidence-positive samples that carry a passability label.
inline CascadeModel train_cascade(const MultiViewDataset& d, const LabelTable& passability, const FusionStrategy& s,
                                  const SvmHyperParams& hp, double threshold1 = 0.5, double threshold2 = 0.5,
                                  std::size_t jobs = 1, Diagnostics* diag = nullptr, CascadeTrainInfo* info = nullptr) {
  check_thresholds(threshold1, threshold2);
  std::map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& l = d.labels[i];
    if (l != kEvidence && l != kNoEvidence) {
      throw Error(ErrorKind::InvalidLabel, "stage-1 label for '" + d.ids()[i] + "' must be evidence or no_evidence, got '" + l + "'");
    }
    row_of.emplace(d.ids()[i], i);
  }
  std::size_t unmatched = 0;
  for (const auto& [id, label] : passability) {
    if (label != kPassable && label != kNonPassable) {
      throw Error(ErrorKind::InvalidLabel, "passability label for '" + id + "' must be passable or non_passable, got '" + label + "'");
    }
    const auto it = row_of.find(id);
    if (it == row_of.end()) {
      ++unmatched;
      continue;
    }
    if (d.labels[it->second] != kEvidence) {
      throw Error(ErrorKind::MissingPassabilityLabels, "id '" + id + "' has a passability label but is labeled no_evidence");
    }
  }
  if (unmatched) warn(diag, std::to_string(unmatched) + " passability labels have no sample in the dataset; ignored");

  std::vector<std::size_t> stage2_rows;
  std::vector<std::string> stage2_labels;
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] != kEvidence) continue;
    const auto it = passability.find(d.ids()[i]);
    if (it == passability.end()) {
      ++unlabeled;
      continue;
    }
    stage2_rows.push_back(i);
    stage2_labels.push_back(it->second);
  }
  if (unlabeled) warn(diag, std::to_string(unlabeled) + " evidence samples have no passability label; excluded from stage 2");
  MultiViewDataset stage2 = subset(d, stage2_rows);
  stage2.labels = std::move(stage2_labels);
  const bool has_pass = std::find(stage2.labels.begin(), stage2.labels.end(), kPassable) != stage2.labels.end();
  const bool has_non = std::find(stage2.labels.begin(), stage2.labels.end(), kNonPassable) != stage2.labels.end();
  if (!has_pass || !has_non) throw Error(ErrorKind::Stage2SingleClass, "stage-2 training data needs both passable and non_passable samples");

  CascadeModel m;
  m.threshold1 = threshold1;
  m.threshold2 = threshold2;
  m.stage1 = train_fusion(d, s, hp, jobs, diag);
  SvmHyperParams hp2 = hp;
  hp2.seed = derive_seed(hp.seed, 2);
  m.stage2 = train_fusion(stage2, s, hp2, jobs, diag);
  if (info != nullptr) *info = {d.size(), stage2.size()};
  return m;
}

inline std::vector<CascadeLabel> predict_cascade(const CascadeModel& m, std::span<const FeatureMatrix> views,
                                                 Diagnostics* diag = nullptr) {
  check_thresholds(m.threshold1, m.threshold2);
  const ScoreMatrix s1 = predict_fusion(m.stage1, views, diag);
  const std::size_t ev = s1.class_index(kEvidence);

  std::vector<CascadeLabel> out(s1.rows());
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < s1.rows(); ++i) {
    out[i].id = s1.ids[i];
    out[i].stage1_proba = s1.row(i)[ev];
    if (out[i].stage1_proba >= m.threshold1) {
      positives.push_back(i);
    } else {
      out[i].value = std::string(kNoEvidence);
    }
  }
  if (!positives.empty()) {
    std::vector<FeatureMatrix> sub;
    for (const auto& v : views) sub.push_back(subset_rows(v, positives));
    const ScoreMatrix s2 = predict_fusion(m.stage2, sub, diag);
    const std::size_t pass = s2.class_index(kPassable);
    for (std::size_t k = 0; k < positives.size(); ++k) {
      auto& label = out[positives[k]];
      label.stage2_proba = s2.row(k)[pass];
      label.value = cascade_decision(label.stage1_proba, label.stage2_proba, m.threshold1, m.threshold2);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CASCADE v1 and PRED v1

inline void write_cascade(std::ostream& out, const CascadeModel& m) {
  out << "CASCADE\t1\n";
  out << "threshold1\t" << text::format_exact(m.threshold1) << '\n';
  out << "threshold2\t" << text::format_exact(m.threshold2) << '\n';
  out << "stage\t1\n";
  write_fusion(out, m.stage1);
  out << "stage\t2\n";
  write_fusion(out, m.stage2);
  out << "end\tCASCADE\n";
}

inline CascadeModel read_cascade(text::LineReader& reader) {
  text::expect_magic(reader, "CASCADE");
  CascadeModel m;
  m.threshold1 = text::parse_finite(text::expect_keyed(reader, "threshold1"), reader.line_no());
  m.threshold2 = text::parse_finite(text::expect_keyed(reader, "threshold2"), reader.line_no());
  try {
    check_thresholds(m.threshold1, m.threshold2);
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedHeader, e.detail(), reader.line_no());
  }
  if (text::expect_keyed(reader, "stage") != "1") throw Error(ErrorKind::MalformedLine, "expected 'stage\\t1'", reader.line_no());
  m.stage1 = read_fusion(reader);
  if (text::expect_keyed(reader, "stage") != "2") throw Error(ErrorKind::MalformedLine, "expected 'stage\\t2'", reader.line_no());
  m.stage2 = read_fusion(reader);
  if (text::expect_keyed(reader, "end") != "CASCADE") throw Error(ErrorKind::MalformedLine, "expected 'end\\tCASCADE'", reader.line_no());
  if (m.stage1.view_names != m.stage2.view_names || m.stage1.view_dims != m.stage2.view_dims) {
    throw Error(ErrorKind::ViewMismatch, "cascade stages disagree on views");
  }
  return m;
}

inline CascadeModel parse_cascade(std::istream& in) {
  text::LineReader reader(in);
  return read_cascade(reader);
}

inline void write_predictions(std::ostream& out, std::span<const CascadeLabel> labels) {
  out << "PRED\t1\n";
  for (const auto& l : labels) {
    out << l.id << '\t' << l.value << '\t' << text::format_real(l.stage1_proba) << '\t'
        << (l.stage2_proba ? text::format_real(*l.stage2_proba) : std::string("-")) << '\n';
  }
}

inline std::vector<CascadeLabel> parse_predictions(std::istream& in) {
  text::LineReader reader(in);
  text::expect_magic(reader, "PRED");
  std::vector<CascadeLabel> out;
  std::set<std::string> seen;
  while (auto line = reader.next()) {
    const std::size_t n = reader.line_no();
    const auto parts = text::fields(*line, 4, n);
    CascadeLabel l;
    l.id = std::string(parts[0]);
    if (!text::is_token(l.id)) throw Error(ErrorKind::MalformedLine, "sample id must be a non-empty token", n);
    if (!seen.insert(l.id).second) throw Error(ErrorKind::DuplicateId, "duplicate id '" + l.id + "'", n);
    l.value = std::string(parts[1]);
    if (l.value != kNoEvidence && l.value != kPassable && l.value != kNonPassable) {
      throw Error(ErrorKind::InvalidLabel, "unknown cascade label '" + l.value + "'", n);
    }
    l.stage1_proba = text::parse_finite(parts[2], n);
    if (parts[3] != "-") l.stage2_proba = text::parse_finite(parts[3], n);
    if (l.stage2_proba.has_value() == (l.value == kNoEvidence)) {
      throw Error(ErrorKind::MalformedLine, "stage-2 probability must be present exactly for evidence-positive labels", n);
    }
    for (double p : {l.stage1_proba, l.stage2_proba.value_or(0.0)}) {
      if (p < 0.0 || p > 1.0) throw Error(ErrorKind::InvalidProbability, "probability outside [0,1]", n);
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace floodpass
