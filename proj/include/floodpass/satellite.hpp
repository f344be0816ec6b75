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

// Road-patch passability from satellite imagery: crop around the road
// endpoints, augment training patches, featurize with RGB histograms (or take
// externally produced scores), classify with the non-passable tie-break, and
// evaluate under the all-train or half-train protocol.

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/image.hpp"
#include "floodpass/metrics.hpp"
#include "floodpass/parallel.hpp"
#include "floodpass/svm.hpp"

namespace floodpass {

/// Higher probability wins; an exact tie is non_passable.
inline std::string classify_patch(double p_passable, double p_non_passable) {
  if (!(p_passable >= 0.0 && p_non_passable >= 0.0) || std::abs(p_passable + p_non_passable - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidProbability, "patch probabilities must be non-negative and sum to 1");
  }
  return std::string(p_passable > p_non_passable ? kPassable : kNonPassable);
}

enum class Protocol { AllTrain, HalfTrain };

inline std::string to_string(Protocol p) { return p == Protocol::AllTrain ? "all_train" : "half_train"; }

inline Protocol parse_protocol(std::string_view s) {
  if (s == "all-train" || s == "all_train") return Protocol::AllTrain;
  if (s == "half-train" || s == "half_train") return Protocol::HalfTrain;
  throw Error(ErrorKind::InvalidArgument, "unknown protocol '" + std::string(s) + "'");
}

using ImageLoader = std::function<ImageBuffer(const std::string& image_id)>;

struct FdsiConfig {
  Protocol protocol = Protocol::AllTrain;
  std::size_t margin = 25;
  std::size_t bins = 16;
  bool normalize_histogram = true;
  AugmentPolicy augment;
  SvmHyperParams hp;
  std::uint64_t seed = 0;  // split seed
  std::size_t jobs = 1;
};

struct FdsiRun {
  EvalReport report;
  ScoreMatrix scores;  // evaluation patches, classes {non_passable, passable}
  std::vector<std::string> predicted;
  std::size_t train_patches = 0;
  std::size_t train_samples = 0;  // after augmentation
};

/// Per-patch augmentation stream, keyed by patch id so that results do not
/// depend on processing order.
inline AugmentPolicy policy_for(const AugmentPolicy& base, const std::string& patch_id) {
  AugmentPolicy p = base;
  p.seed = derive_seed(base.seed, hash_id(patch_id));
  return p;
}

namespace detail {

struct PatchSet {
  std::vector<std::string> ids;
  std::vector<const PatchSpec*> specs;
};

inline std::map<std::string, ImageBuffer> load_images(const std::vector<const PatchSpec*>& specs, const ImageLoader& loader) {
  std::map<std::string, ImageBuffer> images;
  for (const auto* s : specs) {
    if (!images.contains(s->image_id)) images.emplace(s->image_id, loader(s->image_id));
  }
  return images;
}

}  // namespace detail

/// Histogram features of the (unaugmented) patches, one row per id.
inline FeatureMatrix featurize_patches(const std::vector<std::string>& ids, const std::vector<const PatchSpec*>& specs,
                                       const ImageLoader& loader, std::size_t margin, std::size_t bins, bool normalize,
                                       std::size_t jobs = 1) {
  const auto images = detail::load_images(specs, loader);
  FeatureMatrix m{"rgb_hist" + std::to_string(bins), ids, 3 * bins, std::vector<double>(ids.size() * 3 * bins)};
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    const auto patch = extract_patch(images.at(specs[i]->image_id), *specs[i], margin);
    const auto h = rgb_histogram(patch, bins, normalize);
    std::copy(h.begin(), h.end(), m.row(i).begin());
  });
  return m;
}

/// Runs one FDSI protocol.
///
/// all_train: trains on every labeled patch of `train_specs` and evaluates on
/// `test_specs` (or on the training patches when none are given).
/// half_train: stratified 50/50 split of the labeled training patches; trains
/// on one half and evaluates on the other.
///
/// With `external_scores`, no classifier is trained; evaluation patches are
/// looked up by patch id in the score matrix.
inline FdsiRun run_protocol(std::span<const PatchSpec> train_specs, std::optional<std::span<const PatchSpec>> test_specs,
                            const ImageLoader& loader, const FdsiConfig& cfg, const ScoreMatrix* external_scores = nullptr) {
  cfg.hp.validate();
  cfg.augment.validate();
  Diagnostics diag;
  const auto all_ids = patch_ids(train_specs);
  detail::PatchSet labeled;
  for (std::size_t i = 0; i < train_specs.size(); ++i) {
    if (train_specs[i].label) {
      labeled.ids.push_back(all_ids[i]);
      labeled.specs.push_back(&train_specs[i]);
    } else {
      diag.warn("unlabeled training patch '" + all_ids[i] + "' skipped");
    }
  }
  if (labeled.ids.empty()) throw Error(ErrorKind::TooFewSamples, "no labeled training patches");

  detail::PatchSet train, eval;
  if (cfg.protocol == Protocol::HalfTrain) {
    if (test_specs) diag.warn("half_train ignores the separate test list");
    MultiViewDataset index;
    index.views.push_back({"patches", labeled.ids, 1, std::vector<double>(labeled.ids.size(), 0.0)});
    for (const auto* s : labeled.specs) index.labels.push_back(*s->label);
    std::map<std::string, std::size_t> counts;
    for (const auto& l : index.labels) ++counts[l];
    for (const auto& [label, count] : counts) {
      if (count < 2) throw Error(ErrorKind::TooFewSamples, "half_train needs at least 2 patches of '" + label + "'");
    }
    const auto split = split_dataset(index, 0.5, cfg.seed);
    for (const auto& w : split.warnings) diag.warn(w);
    std::map<std::string, const PatchSpec*> by_id;
    for (std::size_t i = 0; i < labeled.ids.size(); ++i) by_id.emplace(labeled.ids[i], labeled.specs[i]);
    for (const auto& id : split.train.ids()) {
      train.ids.push_back(id);
      train.specs.push_back(by_id.at(id));
    }
    for (const auto& id : split.test.ids()) {
      eval.ids.push_back(id);
      eval.specs.push_back(by_id.at(id));
    }
  } else {
    train = labeled;
    if (test_specs) {
      const auto test_ids = patch_ids(*test_specs);
      for (std::size_t i = 0; i < test_specs->size(); ++i) {
        eval.ids.push_back(test_ids[i]);
        eval.specs.push_back(&(*test_specs)[i]);
      }
    } else {
      eval = labeled;
    }
  }

  FdsiRun run;
  run.train_patches = train.ids.size();
  const std::vector<std::string> classes{std::string(kNonPassable), std::string(kPassable)};
  if (external_scores != nullptr) {
    const std::size_t pass = external_scores->class_index(kPassable);
    const std::size_t non = external_scores->class_index(kNonPassable);
    std::map<std::string_view, std::size_t> row_of;
    for (std::size_t i = 0; i < external_scores->rows(); ++i) row_of.emplace(external_scores->ids[i], i);
    run.scores = {eval.ids, classes, {}};
    for (const auto& id : eval.ids) {
      const auto it = row_of.find(id);
      if (it == row_of.end()) throw Error(ErrorKind::IdMismatch, "no external score for patch '" + id + "'");
      const auto r = external_scores->row(it->second);
      const double total = r[pass] + r[non];
      if (!(total > 0.0)) throw Error(ErrorKind::InvalidProbability, "zero passability mass for patch '" + id + "'");
      run.scores.probs.push_back(r[non] / total);
      run.scores.probs.push_back(r[pass] / total);
    }
  } else {
    const std::size_t mult = cfg.augment.multiplier();
    const auto images = detail::load_images(train.specs, loader);
    const std::size_t dim = 3 * cfg.bins;
    FeatureMatrix X{"rgb_hist" + std::to_string(cfg.bins), std::vector<std::string>(train.ids.size() * mult), dim,
                    std::vector<double>(train.ids.size() * mult * dim)};
    std::vector<std::string> labels(X.ids.size());
    parallel_for(train.ids.size(), cfg.jobs, [&](std::size_t i) {
      const auto patch = extract_patch(images.at(train.specs[i]->image_id), *train.specs[i], cfg.margin);
      const auto variants = augment(patch, policy_for(cfg.augment, train.ids[i]));
      for (std::size_t k = 0; k < variants.size(); ++k) {
        const std::size_t r = i * mult + k;
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "~%04zu", k);
        X.ids[r] = train.ids[i] + suffix;
        labels[r] = *train.specs[i]->label;
        const auto h = rgb_histogram(variants[k], cfg.bins, cfg.normalize_histogram);
        std::copy(h.begin(), h.end(), X.row(r).begin());
      }
    });
    run.train_samples = X.rows();
    const auto model = train_ovr(X, labels, cfg.hp, cfg.jobs, &diag);
    const auto features = featurize_patches(eval.ids, eval.specs, loader, cfg.margin, cfg.bins, cfg.normalize_histogram, cfg.jobs);
    run.scores = predict_proba(model, features, &diag);
  }

  const std::size_t pass = run.scores.class_index(kPassable);
  const std::size_t non = run.scores.class_index(kNonPassable);
  std::vector<std::string> pred, truth;
  for (std::size_t i = 0; i < run.scores.rows(); ++i) {
    run.predicted.push_back(classify_patch(run.scores.row(i)[pass], run.scores.row(i)[non]));
    if (eval.specs[i]->label) {
      pred.push_back(run.predicted.back());
      truth.push_back(*eval.specs[i]->label);
    }
  }
  if (truth.empty()) throw Error(ErrorKind::TooFewSamples, "no labeled evaluation patches");
  run.report = evaluate(pred, truth, classes);

  auto& r = run.report;
  r.set_meta("protocol", to_string(cfg.protocol));
  r.set_meta("featurizer", external_scores ? "external_scores" : "rgb_histogram");
  r.set_meta("headline", "f1_per_class.non_passable");
  r.set_meta("split_seed", std::to_string(cfg.seed));
  r.set_meta("margin", std::to_string(cfg.margin));
  r.set_meta("bins", std::to_string(cfg.bins));
  r.set_meta("normalize_histogram", cfg.normalize_histogram ? "1" : "0");
  std::string flips;
  if (cfg.augment.flip_horizontal) flips += "horizontal";
  if (cfg.augment.flip_vertical) flips += std::string(flips.empty() ? "" : ",") + "vertical";
  if (cfg.augment.flip_both) flips += std::string(flips.empty() ? "" : ",") + "both";
  r.set_meta("flips", flips.empty() ? "none" : flips);
  r.set_meta("brightness_samples", std::to_string(cfg.augment.brightness_samples));
  r.set_meta("brightness_range", text::format_real(cfg.augment.brightness_lo) + "," + text::format_real(cfg.augment.brightness_hi));
  r.set_meta("augment_seed", std::to_string(cfg.augment.seed));
  r.set_meta("lambda", text::format_real(cfg.hp.lambda));
  r.set_meta("epochs", std::to_string(cfg.hp.epochs));
  r.set_meta("svm_seed", std::to_string(cfg.hp.seed));
  r.set_meta("augmented_train_only", "1");
  r.set_meta("train_patches", std::to_string(run.train_patches));
  r.set_meta("train_samples", std::to_string(run.train_samples));
  r.set_meta("eval_patches", std::to_string(run.scores.rows()));
  r.set_meta("labeled_eval_patches", std::to_string(truth.size()));
  for (auto& w : diag.warnings) r.flags.push_back(std::move(w));
  return run;
}

}  // namespace floodpass
