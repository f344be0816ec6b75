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

#include "floodpass/synthetic.hpp"
#include "oracles.hpp"

using namespace floodpass;

namespace {

struct Fixture {
  synthetic::TextureFixture fx;
  ImageLoader loader;
};

Fixture textures(std::size_t per_class = 100, std::uint64_t seed = 11) {
  synthetic::TextureOptions opt;
  opt.per_class = per_class;
  opt.seed = seed;
  Fixture f{synthetic::make_textures(opt), {}};
  const auto* images = &f.fx.images;
  f.loader = [images](const std::string& id) { return images->at(id); };
  return f;
}

FdsiConfig config(Protocol protocol, std::uint64_t seed = 0) {
  FdsiConfig cfg;
  cfg.protocol = protocol;
  cfg.seed = seed;
  cfg.hp.seed = seed;
  cfg.augment.seed = seed;
  return cfg;
}

}  // namespace

TEST(ClassifyPatch, Examples) {
  EXPECT_EQ(classify_patch(0.7, 0.3), "passable");
  EXPECT_EQ(classify_patch(0.3, 0.7), "non_passable");
  EXPECT_EQ(classify_patch(0.5, 0.5), "non_passable");
  EXPECT_EQ(classify_patch(1.0, 0.0), "passable");
  EXPECT_THROW(classify_patch(0.7, 0.7), Error);
  EXPECT_THROW(classify_patch(-0.1, 1.1), Error);
  EXPECT_THROW(classify_patch(std::nan(""), 0.5), Error);
}

TEST(ClassifyPatch, MatchesComparisonOracle) {
  Rng rng(1);
  std::size_t ties = 0;
  for (int t = 0; t < 10000; ++t) {
    // Coarse grid values make exact ties common.
    const double p = rng.index(3) == 0 ? static_cast<double>(rng.index(9)) / 8.0 : rng.uniform();
    const double q = 1.0 - p;
    ties += p == q;
    const std::string want = p > q ? "passable" : "non_passable";
    ASSERT_EQ(classify_patch(p, q), want) << p;
  }
  EXPECT_GT(ties, 100u);
}

TEST(Protocol, Names) {
  EXPECT_EQ(parse_protocol("half-train"), Protocol::HalfTrain);
  EXPECT_EQ(parse_protocol("all_train"), Protocol::AllTrain);
  EXPECT_EQ(to_string(Protocol::HalfTrain), "half_train");
  EXPECT_THROW(parse_protocol("cross"), Error);
}

TEST(RunProtocol, AllTrainUsesEveryLabeledPatch) {
  auto f = textures(20);
  f.fx.patches[0].label.reset();
  auto cfg = config(Protocol::AllTrain);
  cfg.augment.flip_both = true;
  cfg.augment.brightness_samples = 3;
  const auto run = run_protocol(f.fx.patches, std::nullopt, f.loader, cfg);
  EXPECT_EQ(run.train_patches, 39u);
  EXPECT_EQ(run.train_samples, 39u * 16);
  EXPECT_EQ(run.train_samples, run.train_patches * cfg.augment.multiplier());
  EXPECT_EQ(run.report.samples, 39u);
  EXPECT_NE(std::find_if(run.report.flags.begin(), run.report.flags.end(),
                         [](const std::string& w) { return w.find("unlabeled training patch") != std::string::npos; }),
            run.report.flags.end());
}

TEST(RunProtocol, AllTrainMemorizesSeparableTextures) {
  const auto f = textures(100);
  const auto run = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::AllTrain, 3));
  EXPECT_EQ(run.report.f1_per_class.at("non_passable"), 1.0);
  EXPECT_EQ(run.report.overall_accuracy, 1.0);
}

TEST(RunProtocol, HalfTrainReachesHighF1) {
  const auto f = textures(100);
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto run = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::HalfTrain, seed));
    EXPECT_EQ(run.report.samples, 100u);
    EXPECT_EQ(run.train_patches, 100u);
    EXPECT_GE(run.report.f1_per_class.at("non_passable"), 0.95) << seed;
  }
}

TEST(RunProtocol, DeterministicForFixedSeed) {
  const auto f = textures(30);
  const auto a = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::HalfTrain, 5));
  const auto b = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::HalfTrain, 5));
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.scores, b.scores);
  auto threaded = config(Protocol::HalfTrain, 5);
  threaded.jobs = 4;
  EXPECT_EQ(run_protocol(f.fx.patches, std::nullopt, f.loader, threaded).scores, a.scores);
  const auto c = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::HalfTrain, 6));
  EXPECT_NE(c.scores.ids, a.scores.ids);
}

TEST(RunProtocol, HalfTrainNeedsTwoPerClass) {
  auto f = textures(3);
  for (auto& p : f.fx.patches) p.label = "passable";
  f.fx.patches[0].label = "non_passable";
  try {
    run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::HalfTrain));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewSamples);
  }
}

TEST(RunProtocol, SeparateTestListAndRepeatedImages) {
  auto f = textures(20);
  std::vector<PatchSpec> test(f.fx.patches.begin(), f.fx.patches.begin() + 6);
  test.push_back(test[0]);
  test.back().label.reset();
  const auto run = run_protocol(f.fx.patches, std::span<const PatchSpec>(test), f.loader, config(Protocol::AllTrain));
  EXPECT_EQ(run.scores.rows(), 7u);
  EXPECT_EQ(run.scores.ids.back(), test[0].image_id + "#2");
  EXPECT_EQ(run.report.samples, 6u);
  EXPECT_EQ(run.predicted.size(), 7u);
}

TEST(RunProtocol, ExternalScoresTiesAreNonPassable) {
  const auto f = textures(10);
  const auto ids = patch_ids(f.fx.patches);
  Rng rng(7);
  ScoreMatrix ext{ids, {"non_passable", "other", "passable"}, {}};
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double p = rng.uniform(0.05, 0.45);
    ext.probs.insert(ext.probs.end(), {p, 1.0 - 2 * p, p});
  }
  const auto run = run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::AllTrain), &ext);
  EXPECT_EQ(run.train_samples, 0u);
  ASSERT_EQ(run.predicted.size(), ids.size());
  for (const auto& l : run.predicted) EXPECT_EQ(l, "non_passable");
  EXPECT_EQ(run.report.metadata[1], (std::pair<std::string, std::string>{"featurizer", "external_scores"}));

  ScoreMatrix missing = ext;
  missing.ids[3] = "absent";
  try {
    run_protocol(f.fx.patches, std::nullopt, f.loader, config(Protocol::AllTrain), &missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IdMismatch);
  }
}

TEST(RunProtocol, ReportCarriesConfiguration) {
  const auto f = textures(10);
  auto cfg = config(Protocol::HalfTrain, 4);
  cfg.margin = 7;
  cfg.bins = 8;
  const auto run = run_protocol(f.fx.patches, std::nullopt, f.loader, cfg);
  std::map<std::string, std::string> meta(run.report.metadata.begin(), run.report.metadata.end());
  EXPECT_EQ(meta.at("protocol"), "half_train");
  EXPECT_EQ(meta.at("margin"), "7");
  EXPECT_EQ(meta.at("bins"), "8");
  EXPECT_EQ(meta.at("flips"), "horizontal,vertical");
  EXPECT_EQ(meta.at("headline"), "f1_per_class.non_passable");
  EXPECT_EQ(meta.at("augmented_train_only"), "1");
}

TEST(FeaturizePatches, MatchesCropThenHistogram) {
  const auto f = textures(5);
  const auto ids = patch_ids(f.fx.patches);
  std::vector<const PatchSpec*> specs;
  for (const auto& p : f.fx.patches) specs.push_back(&p);
  const auto m = featurize_patches(ids, specs, f.loader, 4, 16, true, 3);
  ASSERT_EQ(m.rows(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& s = f.fx.patches[i];
    const auto patch = oracle::crop(f.fx.images.at(s.image_id), s.p1.x, s.p1.y, s.p2.x, s.p2.y, 4);
    const auto h = oracle::histogram(patch, 16, true);
    EXPECT_TRUE(std::equal(h.begin(), h.end(), m.row(i).begin()));
  }
}
