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

// Linear SVMs trained in the primal, sigmoid calibration of their decision
// values, and the one-vs-rest composition used by every fusion strategy.
//
// Binary objective (bias unregularized):
//
//   F(w, b) = lambda/2 * ||w||^2 + 1/n * sum_i max(0, 1 - y_i (w.x_i + b))
//
// w is trained by Pegasos-style stochastic subgradient steps of size
// 1/(lambda t) with projection onto the ball of radius 1/sqrt(lambda). The
// bias is set to its exact minimizer for the current w at the start of every
// epoch and once more after the last one. Of these epoch-end iterates the
// one with the lowest F is returned.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/parallel.hpp"
#include "floodpass/random.hpp"
#include "floodpass/text.hpp"

namespace floodpass {

struct SvmHyperParams {
  double lambda = 1e-4;
  int epochs = 20;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
    if (epochs < 1) throw Error(ErrorKind::InvalidArgument, "epochs must be >= 1");
  }

  friend bool operator==(const SvmHyperParams&, const SvmHyperParams&) = default;
};

/// Read-only row-major sample block.
struct Samples {
  std::span<const double> values;
  std::size_t dim = 0;

  std::size_t rows() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  std::span<const double> row(std::size_t i) const { return values.subspan(i * dim, dim); }
};

inline Samples samples_of(const FeatureMatrix& m) { return {m.values, m.dim}; }

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Probability of the positive class for decision value f:
/// 1 / (1 + exp(a f + b)). Increasing in f when a < 0.
inline double platt_probability(double a, double b, double f) {
  const double z = a * f + b;
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

struct BinarySvm {
  std::vector<double> w;
  double b = 0.0;
  double platt_a = -1.0;
  double platt_b = 0.0;
  bool degenerate_calibration = false;

  double decision(std::span<const double> x) const { return dot(w, x) + b; }
  double probability(double f) const { return platt_probability(platt_a, platt_b, f); }

  friend bool operator==(const BinarySvm&, const BinarySvm&) = default;
};

inline double svm_objective(std::span<const double> w, double b, Samples X, std::span<const double> y, double lambda) {
  if (w.size() != X.dim || X.rows() != y.size()) throw Error(ErrorKind::DimMismatch, "svm_objective: dimensions disagree");
  const std::size_t n = y.size();
  double hinge = 0.0;
  for (std::size_t i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - y[i] * (dot(w, X.row(i)) + b));
  return 0.5 * lambda * dot(w, w) + (n == 0 ? 0.0 : hinge / static_cast<double>(n));
}

struct Subgradient {
  std::vector<double> w;
  double b = 0.0;
};

/// Subgradient of F; samples with margin exactly 1 contribute nothing.
inline Subgradient svm_subgradient(std::span<const double> w, double b, Samples X, std::span<const double> y, double lambda) {
  const std::size_t n = y.size();
  Subgradient g{std::vector<double>(w.begin(), w.end()), 0.0};
  for (double& v : g.w) v *= lambda;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = X.row(i);
    if (y[i] * (dot(w, x) + b) < 1.0) {
      const double c = -y[i] / static_cast<double>(n);
      for (std::size_t j = 0; j < w.size(); ++j) g.w[j] += c * x[j];
      g.b += c;
    }
  }
  return g;
}

namespace detail {

/// Exact minimizer over b of sum_i max(0, 1 - y_i (s_i + b)), where s_i are
/// the current scores w.x_i. The objective is convex piecewise linear with
/// kinks at y_i - s_i; on a flat optimal segment the midpoint is returned.
inline double optimal_bias(std::span<const double> scores, std::span<const double> y) {
  std::vector<double> kinks;
  kinks.reserve(scores.size());
  std::ptrdiff_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    kinks.push_back(y[i] - scores[i]);
    positives += y[i] > 0.0;
  }
  std::sort(kinks.begin(), kinks.end());
  // Slope (times n) right of b is #{negative kinks <= b} - #{positive kinks > b};
  // passing any kink raises it by one.
  std::ptrdiff_t slope = -positives;
  std::size_t k = 0;
  while (k < kinks.size()) {
    const double at = kinks[k];
    while (k < kinks.size() && kinks[k] == at) {
      ++slope;
      ++k;
    }
    if (slope > 0) return at;
    if (slope == 0) return k < kinks.size() ? 0.5 * (at + kinks[k]) : at;
  }
  return kinks.empty() ? 0.0 : kinks.back();
}

/// Pegasos on the rows `rows` of X with labels y (indexed like X).
inline BinarySvm pegasos(Samples X, std::span<const double> y, std::span<const std::size_t> rows, const SvmHyperParams& hp) {
  hp.validate();
  const std::size_t n = rows.size();
  const std::size_t dim = X.dim;
  bool has_pos = false, has_neg = false;
  for (std::size_t r : rows) (y[r] > 0.0 ? has_pos : has_neg) = true;
  if (n == 0 || !has_pos || !has_neg) throw Error(ErrorKind::SingleClassData, "binary SVM needs both +1 and -1 labels");

  // w = scale * v keeps the per-step shrink O(1).
  std::vector<double> v(dim, 0.0);
  double scale = 1.0;
  double v_norm2 = 0.0;
  double b = 0.0;
  const double radius2 = 1.0 / hp.lambda;

  std::vector<double> scores(n), ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[rows[k]];
  // Epoch-end iterates (bias refit) are scored; the best one is returned.
  // The first candidate has w = 0, so the result never scores above 1.
  std::vector<double> best_w(dim, 0.0);
  double best_b = 0.0;
  double best_f = INFINITY;
  auto refit_bias = [&] {
    for (std::size_t k = 0; k < n; ++k) scores[k] = scale * dot(v, X.row(rows[k]));
    b = optimal_bias(scores, ys);
    double hinge = 0.0;
    for (std::size_t k = 0; k < n; ++k) hinge += std::max(0.0, 1.0 - ys[k] * (scores[k] + b));
    const double f = 0.5 * hp.lambda * scale * scale * dot(v, v) + hinge / static_cast<double>(n);
    if (f < best_f) {
      best_f = f;
      for (std::size_t j = 0; j < dim; ++j) best_w[j] = scale * v[j];
      best_b = b;
    }
  };

  Rng rng(hp.seed);
  std::vector<std::size_t> order(n);
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    refit_bias();
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t k : order) {
      ++t;
      const auto x = X.row(rows[k]);
      const double yk = ys[k];
      const double vx = dot(v, x);
      const double margin = yk * (scale * vx + b);
      const double eta = 1.0 / (hp.lambda * static_cast<double>(t));
      const double shrink = 1.0 - 1.0 / static_cast<double>(t);
      if (shrink == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        scale = 1.0;
        v_norm2 = 0.0;
      } else {
        scale *= shrink;
      }
      if (margin < 1.0) {
        const double c = eta * yk / scale;
        const double vx_now = (shrink == 0.0) ? 0.0 : vx;
        v_norm2 += 2.0 * c * vx_now + c * c * dot(x, x);
        for (std::size_t j = 0; j < dim; ++j) v[j] += c * x[j];
      }
      const double w_norm2 = scale * scale * std::max(v_norm2, 0.0);
      if (w_norm2 > radius2) scale *= std::sqrt(radius2 / w_norm2);
      if (scale < 1e-100 || scale > 1e100) {
        for (double& vj : v) vj *= scale;
        v_norm2 *= scale * scale;
        scale = 1.0;
      }
    }
  }
  refit_bias();

  BinarySvm svm;
  svm.w = std::move(best_w);
  svm.b = best_b;
  return svm;
}

}  // namespace detail

/// Trains an uncalibrated binary SVM (platt_a/platt_b keep their defaults).
inline BinarySvm train_binary_svm(Samples X, std::span<const double> y, const SvmHyperParams& hp) {
  if (X.rows() != y.size()) throw Error(ErrorKind::DimMismatch, "train_binary_svm: row/label count mismatch");
  if (y.empty()) throw Error(ErrorKind::TooFewSamples, "train_binary_svm: no samples");
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return detail::pegasos(X, y, rows, hp);
}

struct PlattFit {
  double a = -1.0;
  double b = 0.0;
  bool degenerate = false;
};

/// Negative log-likelihood minimized by fit_platt; exposed for verification.
inline double platt_nll(double a, double b, std::span<const double> f, std::span<const double> y) {
  double pos = 0.0, neg = 0.0;
  for (double v : y) (v > 0.0 ? pos : neg) += 1.0;
  const double hi = (pos + 1.0) / (pos + 2.0);
  const double lo = 1.0 / (neg + 2.0);
  double nll = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double t = y[i] > 0.0 ? hi : lo;
    const double z = a * f[i] + b;
    nll += z >= 0.0 ? t * z + std::log1p(std::exp(-z)) : (t - 1.0) * z + std::log1p(std::exp(z));
  }
  return nll;
}

/// Sigmoid calibration by Newton's method with backtracking on the
/// prior-corrected targets (N+ + 1)/(N+ + 2) and 1/(N- + 2). A fit with
/// a >= 0 (flat or inverted) falls back to a = -1, b = 0 and is flagged.
inline PlattFit fit_platt(std::span<const double> f, std::span<const double> y) {
  if (f.size() != y.size()) throw Error(ErrorKind::LengthMismatch, "fit_platt: decision/label count mismatch");
  double pos = 0.0, neg = 0.0;
  for (double v : y) (v > 0.0 ? pos : neg) += 1.0;
  if (pos == 0.0 || neg == 0.0) throw Error(ErrorKind::SingleClassData, "fit_platt needs both +1 and -1 labels");

  const PlattFit fallback{-1.0, 0.0, true};
  const auto [lo_f, hi_f] = std::minmax_element(f.begin(), f.end());
  if (*hi_f - *lo_f <= 1e-12 * std::max(1.0, std::abs(*hi_f))) return fallback;

  const double hi = (pos + 1.0) / (pos + 2.0);
  const double lo = 1.0 / (neg + 2.0);
  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  constexpr double kEps = 1e-10;

  double a = 0.0;
  double b = std::log((neg + 1.0) / (pos + 1.0));
  double fval = platt_nll(a, b, f, y);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = a * f[i] + b;
      double p, q;
      if (z >= 0.0) {
        const double e = std::exp(-z);
        p = e / (1.0 + e);
        q = 1.0 / (1.0 + e);
      } else {
        const double e = std::exp(z);
        p = 1.0 / (1.0 + e);
        q = e / (1.0 + e);
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = (y[i] > 0.0 ? hi : lo) - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da;
      const double nb = b + step * db;
      const double nf = platt_nll(na, nb, f, y);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step *= 0.5;
    }
    if (step < kMinStep) break;
  }
  if (!(a < 0.0) || !std::isfinite(a) || !std::isfinite(b)) return fallback;
  return {a, b, false};
}

/// One-vs-rest model over standardized features.
struct MulticlassModel {
  std::vector<std::string> classes;  // sorted
  std::size_t dim = 0;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<BinarySvm> svms;  // one per class
  SvmHyperParams hp;

  std::vector<std::string> flags() const {
    std::vector<std::string> out{"standardized"};
    for (std::size_t k = 0; k < classes.size(); ++k) {
      if (svms[k].degenerate_calibration) out.push_back("degenerate_calibration:" + classes[k]);
    }
    return out;
  }

  friend bool operator==(const MulticlassModel&, const MulticlassModel&) = default;
};

inline constexpr std::size_t kCalibrationFolds = 5;

namespace detail {

struct Standardizer {
  std::vector<double> mean, scale;

  static Standardizer fit(Samples X) {
    const std::size_t n = X.rows();
    Standardizer s{std::vector<double>(X.dim, 0.0), std::vector<double>(X.dim, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = X.row(i);
      for (std::size_t j = 0; j < X.dim; ++j) s.mean[j] += r[j];
    }
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = X.row(i);
      for (std::size_t j = 0; j < X.dim; ++j) {
        const double d = r[j] - s.mean[j];
        s.scale[j] += d * d;
      }
    }
    for (double& v : s.scale) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-12);
    return s;
  }

  void apply(std::span<const double> in, std::span<double> out) const {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
  }
};

}  // namespace detail

/// Trains one calibrated binary SVM per class (that class +1, the rest -1).
/// Samples are put in canonical id order first, so the model does not depend
/// on input row order. Calibration uses out-of-fold decision values from a
/// stratified 5-fold split; each SVM is then refit on all samples.
inline MulticlassModel train_ovr(const FeatureMatrix& X, std::span<const std::string> labels, const SvmHyperParams& hp,
                                 std::size_t jobs = 1, Diagnostics* diag = nullptr) {
  hp.validate();
  if (labels.size() != X.rows()) throw Error(ErrorKind::LengthMismatch, "train_ovr: label count does not match rows");
  if (X.dim == 0) throw Error(ErrorKind::DimMismatch, "train_ovr: dim must be positive");

  std::vector<std::size_t> perm(X.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t l, std::size_t r) { return X.ids[l] < X.ids[r]; });
  const std::size_t n = perm.size();

  std::map<std::string, std::size_t> counts;
  for (const auto& l : labels) ++counts[l];
  if (counts.size() < 2) throw Error(ErrorKind::SingleClassData, "train_ovr needs at least 2 distinct labels");
  for (const auto& [label, count] : counts) {
    if (count < 2) throw Error(ErrorKind::TooFewSamples, "label '" + label + "' has fewer than 2 samples");
  }

  MulticlassModel model;
  for (const auto& [label, count] : counts) model.classes.push_back(label);
  model.dim = X.dim;
  model.hp = hp;

  std::vector<double> raw(n * X.dim);
  std::vector<std::string_view> sorted_labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto src = X.row(perm[i]);
    std::copy(src.begin(), src.end(), raw.begin() + static_cast<std::ptrdiff_t>(i * X.dim));
    sorted_labels[i] = labels[perm[i]];
  }
  const auto stdz = detail::Standardizer::fit({raw, X.dim});
  model.mean = stdz.mean;
  model.scale = stdz.scale;
  std::vector<double> Z(n * X.dim);
  for (std::size_t i = 0; i < n; ++i) {
    stdz.apply(std::span<const double>(raw).subspan(i * X.dim, X.dim), std::span<double>(Z).subspan(i * X.dim, X.dim));
  }
  const Samples data{Z, X.dim};

  // Stratified fold assignment, continuing the round-robin across labels.
  std::vector<std::size_t> fold(n);
  {
    Rng rng(derive_seed(hp.seed, 0xF01D));
    std::size_t next = 0;
    for (const auto& cls : model.classes) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (sorted_labels[i] == cls) members.push_back(i);
      }
      rng.shuffle(std::span<std::size_t>(members));
      for (std::size_t i : members) fold[i] = next++ % kCalibrationFolds;
    }
  }

  model.svms.resize(model.classes.size());
  std::vector<std::string> notes(model.classes.size());
  parallel_for(model.classes.size(), jobs, [&](std::size_t k) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = sorted_labels[i] == model.classes[k] ? 1.0 : -1.0;

    std::vector<double> oof(n, 0.0);
    for (std::size_t f = 0; f < kCalibrationFolds; ++f) {
      std::vector<std::size_t> train_rows, held_rows;
      for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? held_rows : train_rows).push_back(i);
      if (held_rows.empty()) continue;
      SvmHyperParams fold_hp = hp;
      fold_hp.seed = derive_seed(hp.seed, 16 * k + f + 1);
      const BinarySvm svm = detail::pegasos(data, y, train_rows, fold_hp);
      for (std::size_t i : held_rows) oof[i] = svm.decision(data.row(i));
    }
    SvmHyperParams full_hp = hp;
    full_hp.seed = derive_seed(hp.seed, 16 * k);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    BinarySvm svm = detail::pegasos(data, y, all, full_hp);
    const PlattFit cal = fit_platt(oof, y);
    svm.platt_a = cal.a;
    svm.platt_b = cal.b;
    svm.degenerate_calibration = cal.degenerate;
    if (cal.degenerate) notes[k] = "DegenerateCalibration: class '" + model.classes[k] + "' fell back to a=-1, b=0";
    model.svms[k] = std::move(svm);
  });
  for (auto& note : notes) {
    if (!note.empty()) warn(diag, std::move(note));
  }
  return model;
}

inline MulticlassModel train_ovr(const FeatureMatrix& X, const LabelTable& labels, const SvmHyperParams& hp,
                                 std::size_t jobs = 1, Diagnostics* diag = nullptr) {
  std::vector<std::string> aligned;
  aligned.reserve(X.rows());
  for (const auto& id : X.ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorKind::InvalidLabel, "no label for id '" + id + "'");
    aligned.push_back(it->second);
  }
  return train_ovr(X, aligned, hp, jobs, diag);
}

/// Calibrated per-class probabilities, normalized to sum 1 per row. A row
/// whose probabilities all underflow to 0 becomes uniform and is flagged.
inline ScoreMatrix predict_proba(const MulticlassModel& m, const FeatureMatrix& X, Diagnostics* diag = nullptr) {
  if (X.dim != m.dim) {
    throw Error(ErrorKind::DimMismatch, "model expects dim " + std::to_string(m.dim) + ", got " + std::to_string(X.dim));
  }
  const std::size_t K = m.classes.size();
  ScoreMatrix out{X.ids, m.classes, std::vector<double>(X.rows() * K)};
  const detail::Standardizer stdz{m.mean, m.scale};
  std::vector<double> z(m.dim);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    stdz.apply(X.row(i), z);
    auto row = out.row(i);
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      row[k] = m.svms[k].probability(m.svms[k].decision(z));
      sum += row[k];
    }
    if (sum > 0.0) {
      for (double& p : row) p /= sum;
    } else {
      std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(K));
      warn(diag, "UniformRow: all class probabilities underflowed for '" + X.ids[i] + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MODEL v1

inline void write_model(std::ostream& out, const MulticlassModel& m) {
  out << "MODEL\t1\n";
  out << "classes\t" << text::join(m.classes) << '\n';
  out << "dim\t" << m.dim << '\n';
  out << "lambda\t" << text::format_real(m.hp.lambda) << '\n';
  out << "epochs\t" << m.hp.epochs << '\n';
  out << "seed\t" << m.hp.seed << '\n';
  out << "flags\t" << text::join(m.flags()) << '\n';
  out << "mean\t" << text::join_reals(m.mean) << '\n';
  out << "scale\t" << text::join_reals(m.scale) << '\n';
  for (std::size_t k = 0; k < m.classes.size(); ++k) {
    const auto& s = m.svms[k];
    out << "class\t" << m.classes[k] << '\n';
    out << "w\t" << text::join_reals(s.w) << '\n';
    out << "b\t" << text::format_real(s.b) << '\n';
    out << "platt\t" << text::format_real(s.platt_a) << ',' << text::format_real(s.platt_b) << '\n';
  }
  out << "end\tMODEL\n";
}

/// Reads a MODEL v1 block from `reader` (shared with container formats).
inline MulticlassModel read_model(text::LineReader& reader) {
  text::expect_magic(reader, "MODEL");
  MulticlassModel m;
  const std::string classes = text::expect_keyed(reader, "classes");
  for (auto c : text::split(classes, ',')) {
    if (!text::is_token(c)) throw Error(ErrorKind::MalformedHeader, "bad class name", reader.line_no());
    m.classes.emplace_back(c);
  }
  if (m.classes.size() < 2 || !std::is_sorted(m.classes.begin(), m.classes.end()) ||
      std::adjacent_find(m.classes.begin(), m.classes.end()) != m.classes.end()) {
    throw Error(ErrorKind::MalformedHeader, "classes must be >= 2 unique sorted tokens", reader.line_no());
  }
  const auto dim = text::parse_int<std::size_t>(text::expect_keyed(reader, "dim"));
  if (!dim || *dim == 0) throw Error(ErrorKind::MalformedHeader, "dim must be a positive integer", reader.line_no());
  m.dim = *dim;
  m.hp.lambda = text::parse_finite(text::expect_keyed(reader, "lambda"), reader.line_no());
  m.hp.epochs = text::parse_int_or_throw<int>(text::expect_keyed(reader, "epochs"), reader.line_no(), ErrorKind::MalformedHeader);
  m.hp.seed = text::parse_int_or_throw<std::uint64_t>(text::expect_keyed(reader, "seed"), reader.line_no(), ErrorKind::MalformedHeader);
  const std::string flags = text::expect_keyed(reader, "flags");
  std::set<std::string> degenerate;
  for (auto f : text::split(flags, ',')) {
    constexpr std::string_view prefix = "degenerate_calibration:";
    if (f.starts_with(prefix)) degenerate.emplace(f.substr(prefix.size()));
  }
  auto vec = [&](std::string_view key) {
    auto v = text::parse_real_list(text::expect_keyed(reader, key), reader.line_no());
    if (v.size() != m.dim) throw Error(ErrorKind::DimMismatch, std::string(key) + " has wrong length", reader.line_no());
    return v;
  };
  m.mean = vec("mean");
  m.scale = vec("scale");
  for (double s : m.scale) {
    if (!(s > 0.0)) throw Error(ErrorKind::MalformedLine, "scale entries must be positive", reader.line_no());
  }
  for (const auto& cls : m.classes) {
    if (text::expect_keyed(reader, "class") != cls) throw Error(ErrorKind::MalformedLine, "expected class '" + cls + "'", reader.line_no());
    BinarySvm s;
    s.w = vec("w");
    s.b = text::parse_finite(text::expect_keyed(reader, "b"), reader.line_no());
    const auto platt = text::parse_real_list(text::expect_keyed(reader, "platt"), reader.line_no());
    if (platt.size() != 2) throw Error(ErrorKind::MalformedLine, "platt needs two values", reader.line_no());
    s.platt_a = platt[0];
    s.platt_b = platt[1];
    s.degenerate_calibration = degenerate.contains(cls);
    m.svms.push_back(std::move(s));
  }
  if (text::expect_keyed(reader, "end") != "MODEL") throw Error(ErrorKind::MalformedLine, "expected 'end\\tMODEL'", reader.line_no());
  return m;
}

inline MulticlassModel parse_model(std::istream& in) {
  text::LineReader reader(in);
  return read_model(reader);
}

}  // namespace floodpass
