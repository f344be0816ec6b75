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

#include <gtest/gtest.h>

#include <numeric>

#include "floodpass/synthetic.hpp"
#include "oracles.hpp"

using namespace floodpass;

namespace {

synthetic::BlobFixture blobs(std::size_t n, std::uint64_t seed, double separation = 6.0) {
  synthetic::BlobOptions opt;
  opt.samples = n;
  opt.seed = seed;
  opt.separation = separation;
  return synthetic::make_blobs(opt);
}

FusionStrategy strategy(FusionTag tag) {
  FusionStrategy s;
  s.tag = tag;
  return s;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(CascadeDecision, Examples) {
  EXPECT_EQ(cascade_decision(0.2, std::nullopt, 0.5, 0.5), "no_evidence");
  EXPECT_EQ(cascade_decision(0.9, 0.9, 0.5, 0.5), "passable");
  EXPECT_EQ(cascade_decision(0.9, 0.1, 0.5, 0.5), "non_passable");
  EXPECT_EQ(cascade_decision(0.5, 0.5, 0.5, 0.5), "passable");
  EXPECT_EQ(cascade_decision(0.3, 0.7, 0.3, 0.7), "passable");
  EXPECT_THROW(cascade_decision(0.9, std::nullopt, 0.5, 0.5), Error);
}

TEST(CascadeDecision, ThresholdsMustBeOpenUnitInterval) {
  for (double t : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    EXPECT_THROW(check_thresholds(t, 0.5), Error);
    EXPECT_THROW(check_thresholds(0.5, t), Error);
  }
  EXPECT_NO_THROW(check_thresholds(0.01, 0.99));
}

TEST(TrainCascade, StageTwoUsesEvidencePositivesOnly) {
  const auto fx = blobs(200, 1);
  CascadeTrainInfo info;
  const auto m = train_cascade(fx.evidence, fx.passability, strategy(FusionTag::Late), {}, 0.5, 0.5, 1, nullptr, &info);
  const auto evidence = static_cast<std::size_t>(std::count(fx.evidence.labels.begin(), fx.evidence.labels.end(), "evidence"));
  EXPECT_EQ(info.stage1_samples, 200u);
  EXPECT_EQ(info.stage2_samples, evidence);
  EXPECT_EQ(info.stage2_samples, fx.passability.size());
  EXPECT_EQ(m.stage1.per_view[0].classes, (std::vector<std::string>{"evidence", "no_evidence"}));
  EXPECT_EQ(m.stage2.per_view[0].classes, (std::vector<std::string>{"non_passable", "passable"}));
}

TEST(TrainCascade, UnlabeledEvidenceIsExcludedWithWarning) {
  auto fx = blobs(200, 2);
  const std::size_t before = fx.passability.size();
  fx.passability.erase(fx.passability.begin());
  fx.passability.emplace("not_in_dataset", "passable");
  CascadeTrainInfo info;
  Diagnostics diag;
  train_cascade(fx.evidence, fx.passability, strategy(FusionTag::Early), {}, 0.5, 0.5, 1, &diag, &info);
  EXPECT_EQ(info.stage2_samples, before - 1);
  ASSERT_EQ(diag.warnings.size(), 2u);
  EXPECT_NE(diag.warnings[0].find("1 passability labels have no sample"), std::string::npos);
  EXPECT_NE(diag.warnings[1].find("1 evidence samples have no passability label"), std::string::npos);
}

TEST(TrainCascade, Errors) {
  auto fx = blobs(120, 3);
  std::string negative_id;
  for (std::size_t i = 0; i < fx.evidence.size(); ++i) {
    if (fx.evidence.labels[i] == "no_evidence") negative_id = fx.evidence.ids()[i];
  }
  auto bad = fx.passability;
  bad.emplace(negative_id, "passable");
  try {
    train_cascade(fx.evidence, bad, {}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingPassabilityLabels);
    EXPECT_NE(std::string(e.what()).find(negative_id), std::string::npos);
  }
  LabelTable single;
  for (const auto& [id, label] : fx.passability) single.emplace(id, "passable");
  EXPECT_EQ(kind_of([&] { train_cascade(fx.evidence, single, {}, {}); }), ErrorKind::Stage2SingleClass);
  auto wrong = fx.passability;
  wrong.begin()->second = "maybe";
  EXPECT_EQ(kind_of([&] { train_cascade(fx.evidence, wrong, {}, {}); }), ErrorKind::InvalidLabel);
  EXPECT_EQ(kind_of([&] { train_cascade(fx.evidence, fx.passability, {}, {}, 0.0); }), ErrorKind::InvalidArgument);
}

TEST(PredictCascade, EqualsCompositionOracle) {
  for (auto tag : {FusionTag::Early, FusionTag::Late, FusionTag::Double}) {
    const auto fx = blobs(500, 4, 2.5);
    const auto m = train_cascade(fx.evidence, fx.passability, strategy(tag), {});
    const auto got = predict_cascade(m, fx.evidence.views);
    EXPECT_EQ(got, oracle::compose_cascade(m, fx.evidence.views)) << to_string(tag);
    for (double t1 : {0.1, 0.3, 0.7, 0.9}) {
      auto shifted = m;
      shifted.threshold1 = t1;
      shifted.threshold2 = 1.0 - t1;
      EXPECT_EQ(predict_cascade(shifted, fx.evidence.views), oracle::compose_cascade(shifted, fx.evidence.views));
    }
  }
}

TEST(PredictCascade, StageTwoPresentExactlyForPositives) {
  const auto fx = blobs(300, 5, 2.5);
  const auto m = train_cascade(fx.evidence, fx.passability, {}, {});
  for (const auto& l : predict_cascade(m, fx.evidence.views)) {
    EXPECT_EQ(l.stage2_proba.has_value(), l.value != "no_evidence");
    EXPECT_EQ(l.stage1_proba >= m.threshold1, l.value != "no_evidence");
  }
}

TEST(PredictCascade, ShortCircuitIgnoresStageTwoModel) {
  const auto fx = blobs(500, 6, 2.5);
  const auto m = train_cascade(fx.evidence, fx.passability, {}, {});
  LabelTable inverted;
  for (const auto& [id, label] : fx.passability) inverted.emplace(id, label == "passable" ? "non_passable" : "passable");
  auto swapped = m;
  swapped.stage2 = train_cascade(fx.evidence, inverted, {}, {}).stage2;
  const auto a = predict_cascade(m, fx.evidence.views);
  const auto b = predict_cascade(swapped, fx.evidence.views);
  std::size_t negatives = 0, flipped = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].value == "no_evidence") {
      ++negatives;
      EXPECT_EQ(a[i], b[i]);
    } else {
      flipped += a[i].value != b[i].value;
    }
  }
  EXPECT_GT(negatives, 0u);
  EXPECT_GT(flipped, 0u);
}

TEST(PredictCascade, RaisingThresholdOneNeverAddsPositives) {
  const auto fx = blobs(500, 7, 2.0);
  auto m = train_cascade(fx.evidence, fx.passability, strategy(FusionTag::Late), {});
  std::vector<bool> negative(fx.evidence.size(), false);
  for (double t1 = 0.05; t1 < 0.96; t1 += 0.05) {
    m.threshold1 = t1;
    const auto out = predict_cascade(m, fx.evidence.views);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const bool neg = out[i].value == "no_evidence";
      if (negative[i]) {
        EXPECT_TRUE(neg) << "t1=" << t1 << " id=" << out[i].id;
      }
      negative[i] = neg;
    }
  }
}

TEST(PredictCascade, ThreeWayAccuracyOnBlobs) {
  const auto fx = blobs(800, 8);
  std::vector<std::size_t> first(400), second(400);
  std::iota(first.begin(), first.end(), 0);
  std::iota(second.begin(), second.end(), 400);
  const auto train = subset(fx.evidence, first);
  const auto test = subset(fx.evidence, second);
  const auto m = train_cascade(train, fx.passability, {}, {});
  std::vector<std::string> pred, truth;
  for (const auto& l : predict_cascade(m, test.views)) {
    pred.push_back(l.value);
    truth.push_back(fx.outcome.at(l.id));
  }
  const auto report = evaluate(pred, truth, cascade_labels(), true);
  EXPECT_GE(report.overall_accuracy, 0.90);
  EXPECT_GE(*report.mean_f1, 0.90);
}

TEST(PredictCascade, RejectsMisorderedViews) {
  const auto fx = blobs(120, 9);
  const auto m = train_cascade(fx.evidence, fx.passability, {}, {});
  auto views = fx.evidence.views;
  std::swap(views[1], views[2]);
  EXPECT_EQ(kind_of([&] { predict_cascade(m, views); }), ErrorKind::ViewMismatch);
}

TEST(CascadeFormat, ModelRoundTrip) {
  const auto fx = blobs(150, 10);
  auto m = train_cascade(fx.evidence, fx.passability, strategy(FusionTag::Late), {}, 0.4, 0.6);
  const auto text = to_string_with(m, write_cascade);
  const auto back = parse_string(text, [](std::istream& in) { return parse_cascade(in); });
  EXPECT_EQ(back.threshold1, 0.4);
  EXPECT_EQ(back.threshold2, 0.6);
  EXPECT_EQ(to_string_with(back, write_cascade), text);
  const auto a = predict_cascade(m, fx.evidence.views);
  const auto b = predict_cascade(back, fx.evidence.views);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].stage1_proba, b[i].stage1_proba, 1e-6);
    if (std::abs(a[i].stage1_proba - 0.4) > 1e-6 && a[i].stage2_proba && std::abs(*a[i].stage2_proba - 0.6) > 1e-6) {
      EXPECT_EQ(a[i].value, b[i].value);
      EXPECT_NEAR(*a[i].stage2_proba, *b[i].stage2_proba, 1e-6);
    }
  }

  std::string broken = text;
  broken.replace(broken.find("threshold1\t"), 14, "threshold1\t1.5");
  EXPECT_THROW(parse_string(broken, [](std::istream& in) { return parse_cascade(in); }), Error);
}

TEST(CascadeFormat, PredictionsRoundTrip) {
  const std::vector<CascadeLabel> labels{{"a", "no_evidence", 0.25, std::nullopt},
                                         {"b", "passable", 0.75, 0.875},
                                         {"c", "non_passable", 1.0, 0.0}};
  const auto text = to_string_with(std::span<const CascadeLabel>(labels), write_predictions);
  EXPECT_EQ(text, "PRED\t1\na\tno_evidence\t0.25\t-\nb\tpassable\t0.75\t0.875\nc\tnon_passable\t1\t0\n");
  EXPECT_EQ(parse_string(text, [](std::istream& in) { return parse_predictions(in); }), labels);

  const auto parse = [](const std::string& s) { return parse_string(s, [](std::istream& in) { return parse_predictions(in); }); };
  EXPECT_EQ(kind_of([&] { parse("PRED\t1\na\tpassable\t0.9\t-\n"); }), ErrorKind::MalformedLine);
  EXPECT_EQ(kind_of([&] { parse("PRED\t1\na\tno_evidence\t0.1\t0.5\n"); }), ErrorKind::MalformedLine);
  EXPECT_EQ(kind_of([&] { parse("PRED\t1\na\tmaybe\t0.1\t-\n"); }), ErrorKind::InvalidLabel);
  EXPECT_EQ(kind_of([&] { parse("PRED\t1\na\tno_evidence\t1.1\t-\n"); }), ErrorKind::InvalidProbability);
  EXPECT_EQ(kind_of([&] { parse("PRED\t1\na\tno_evidence\t0.1\t-\na\tno_evidence\t0.1\t-\n"); }), ErrorKind::DuplicateId);
}
