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

#include "oracles.hpp"

using namespace floodpass;

namespace {

using Labels = std::vector<std::string>;

const Labels kOutcomes{"no_evidence", "passable", "non_passable"};

// Sizes include 0..3 so that empty classes and zero denominators come up.
std::pair<Labels, Labels> random_outcomes(Rng& rng) {
  const std::size_t n = rng.index(4) == 0 ? 1 + rng.index(4) : 1 + rng.index(60);
  const std::size_t k = 1 + rng.index(3);  // number of labels in play
  Labels pred, truth;
  for (std::size_t i = 0; i < n; ++i) {
    pred.push_back(kOutcomes[rng.index(k)]);
    truth.push_back(kOutcomes[rng.index(3)]);
  }
  if (rng.index(2)) std::swap(pred, truth);
  return {pred, truth};
}

Labels rename(const Labels& in) {
  Labels out;
  for (const auto& l : in) out.push_back(l == "passable" ? "non_passable" : l == "non_passable" ? "passable" : l);
  return out;
}

}  // namespace

TEST(Confusion, CountsAndErrors) {
  const Labels p{"a", "a", "b", "c", "a"};
  const auto diag = confusion(p, p);
  EXPECT_EQ(diag.total, 5u);
  EXPECT_EQ(diag.at("a", "a"), 3u);
  EXPECT_EQ(diag.cells.size(), 3u);
  const auto empty = confusion({}, {});
  EXPECT_EQ(empty.total, 0u);
  EXPECT_THROW(f1(empty, "a"), Error);
  EXPECT_THROW(accuracy(empty), Error);
  EXPECT_THROW(per_class_accuracy(empty), Error);
  try {
    confusion(p, Labels{"a"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LengthMismatch);
  }
}

TEST(Confusion, MatchesTallyOracle) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    const auto c = confusion(pred, truth);
    std::size_t sum = 0;
    for (const auto& tl : kOutcomes) {
      for (const auto& pl : kOutcomes) {
        std::size_t n = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) n += truth[i] == tl && pred[i] == pl;
        EXPECT_EQ(c.at(tl, pl), n);
        sum += n;
      }
    }
    EXPECT_EQ(sum, c.total);
  }
}

TEST(F1, Examples) {
  const Labels perfect{"x", "y", "x"};
  EXPECT_EQ(f1(confusion(perfect, perfect), "x"), 1.0);
  // tp=1, fp=1, fn=1
  const Labels pred{"x", "x", "y"}, truth{"x", "y", "x"};
  EXPECT_EQ(f1(confusion(pred, truth), "x"), 0.5);
}

TEST(F1, AbsentPositiveIsZeroAndFlagged) {
  const Labels only_y{"y", "y"};
  const Labels declared{"x", "y"};
  Diagnostics diag;
  EXPECT_EQ(f1(confusion(only_y, only_y, declared), "x", &diag), 0.0);
  ASSERT_EQ(diag.warnings.size(), 2u);
  EXPECT_NE(diag.warnings[0].find("ZeroDenominator"), std::string::npos);
  const auto report = evaluate(only_y, only_y, declared);
  EXPECT_EQ(report.f1_per_class.at("x"), 0.0);
  EXPECT_FALSE(report.flags.empty());
  try {
    f1(confusion(only_y, only_y), "z");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownLabel);
  }
}

TEST(F1, MatchesExactOracleAndSecondFormula) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    const auto c = confusion(pred, truth, kOutcomes);
    for (const auto& pos : kOutcomes) {
      const double got = f1(c, pos);
      EXPECT_EQ(got, oracle::f1(pred, truth, pos));
      const auto tl = oracle::tally(pred, truth, pos);
      const double second = tl.tp == 0 ? 0.0 : static_cast<double>(tl.tp) / (static_cast<double>(tl.tp) + static_cast<double>(tl.fp + tl.fn) / 2.0);
      EXPECT_EQ(got, second);
      EXPECT_GE(got, 0.0);
      EXPECT_LE(got, 1.0);
    }
  }
}

TEST(MeanF1, Examples) {
  EXPECT_EQ(mean_f1(kOutcomes, kOutcomes), 1.0);
  // passable perfect; non_passable tp=1, fp=1, fn=1
  const Labels pred{"passable", "non_passable", "non_passable", "no_evidence"};
  const Labels truth{"passable", "non_passable", "no_evidence", "non_passable"};
  EXPECT_EQ(mean_f1(pred, truth), 0.75);
  // no_evidence on a passable truth is a false negative for passable
  EXPECT_EQ(mean_f1(Labels{"no_evidence", "passable"}, Labels{"passable", "passable"}), (2.0 / 3.0 + 0.0) / 2.0);
  try {
    mean_f1(Labels{"evidence"}, Labels{"passable"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownLabel);
  }
}

TEST(MeanF1, MatchesBruteForceOnRandomSets) {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    EXPECT_EQ(mean_f1(pred, truth), oracle::mean_f1(pred, truth));
  }
}

TEST(MeanF1, InvariantUnderSwappingPassabilityNames) {
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    EXPECT_EQ(mean_f1(pred, truth), mean_f1(rename(pred), rename(truth)));
  }
}

TEST(Accuracy, PerClassIsRecall) {
  const Labels truth{"A", "A", "A", "A", "B"};
  const Labels pred{"A", "A", "A", "B", "B"};
  const auto acc = per_class_accuracy(confusion(pred, truth));
  EXPECT_EQ(acc.at("A"), 0.75);
  EXPECT_EQ(acc.at("B"), 1.0);
  Diagnostics diag;
  const auto omitted = per_class_accuracy(confusion(Labels{"C"}, Labels{"A"}), &diag);
  EXPECT_FALSE(omitted.contains("C"));
  EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(Accuracy, IsCountWeightedMeanOfPerClass) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    const auto c = confusion(pred, truth);
    const auto per = per_class_accuracy(c);
    std::size_t correct = 0;
    for (const auto& [label, rate] : per) {
      const auto total = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), label));
      const auto hits = static_cast<std::size_t>(std::llround(rate * static_cast<double>(total)));
      std::size_t oracle_hits = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) oracle_hits += truth[i] == label && pred[i] == label;
      EXPECT_EQ(hits, oracle_hits);
      correct += hits;
    }
    EXPECT_EQ(accuracy(c), static_cast<double>(correct) / static_cast<double>(pred.size()));
  }
}

TEST(Report, TextLayout) {
  EXPECT_EQ(format_percent(0.8881), "88.81");
  EXPECT_EQ(format_percent(1.0), "100.00");
  EXPECT_EQ(format_percent(0.0), "0.00");
  const Labels pred{"passable", "non_passable", "no_evidence", "passable"};
  const Labels truth{"passable", "non_passable", "no_evidence", "non_passable"};
  auto r = evaluate(pred, truth, cascade_labels(), true);
  r.set_meta("run", "unit");
  const auto text = render_report(r, ReportFormat::Text);
  EXPECT_EQ(text.rfind("REPORT\t1\nsamples\t4\noverall_accuracy\t75.00\nmean_f1\t", 0), 0u) << text;
  EXPECT_NE(text.find("class\taccuracy\tf1\n"), std::string::npos);
  EXPECT_NE(text.find("non_passable\t50.00\t66.67\n"), std::string::npos) << text;
  EXPECT_NE(text.find("meta\trun\tunit\n"), std::string::npos);
}

TEST(Report, JsonOmitsAbsentMeanF1) {
  const Labels l{"a", "b"};
  const auto r = evaluate(l, l);
  EXPECT_FALSE(r.mean_f1.has_value());
  const auto j = report_to_json(r);
  EXPECT_FALSE(j.contains("mean_f1"));
  const auto cascade = evaluate(kOutcomes, kOutcomes, cascade_labels(), true);
  EXPECT_TRUE(report_to_json(cascade).contains("mean_f1"));
}

TEST(Report, JsonRoundTripsRandomReports) {
  Rng rng(6);
  for (int t = 0; t < 200; ++t) {
    const auto [pred, truth] = random_outcomes(rng);
    auto r = evaluate(pred, truth, cascade_labels(), rng.index(2) == 1);
    for (std::size_t k = rng.index(4); k > 0; --k) r.set_meta(oracle::random_token(rng), oracle::random_token(rng));
    r.overall_accuracy = rng.uniform();  // arbitrary doubles must survive
    const auto back = parse_report_json(render_report_json(r));
    EXPECT_EQ(back, r);
  }
  EXPECT_THROW(parse_report_json("{\"format\":\"REPORT\"}"), Error);
  EXPECT_THROW(parse_report_json("not json"), Error);
}
