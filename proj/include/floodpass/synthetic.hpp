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

// Seeded synthetic fixtures for benchmarks and end-to-end tests.
//
// Multi-view blobs: every sample has a latent outcome (no_evidence 40%,
// passable 30%, non_passable 30%, drawn per sample). View v has its own
// dimension and per-outcome centers with i.i.d. N(0, spread^2) coordinates,
// spread chosen so the expected center distance is `separation`; samples are
// center + N(0, 1) noise, drawn independently per view. Each view is then
// scaled by `view_scale[v]` and shifted by `view_offset[v]` on every
// coordinate, so views live at very different magnitudes.
//
// Texture patches: 64x64 images with one road segment each. non_passable
// ("flooded") images are dark brown water, passable ("dry") images a bright
// grey-green ground; every pixel adds uniform noise in [-noise, noise] and
// every image a brightness jitter in [0.85, 1.15].

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/image.hpp"
#include "floodpass/random.hpp"

namespace floodpass::synthetic {

struct BlobOptions {
  std::size_t samples = 400;
  std::vector<std::size_t> view_dims{8, 12, 16, 6};
  std::vector<double> view_scale{1.0, 10.0, 0.1, 3.0};
  std::vector<double> view_offset{0.0, 5.0, -1.0, 20.0};
  double separation = 6.0;
  std::uint64_t seed = 7;
};

struct BlobFixture {
  MultiViewDataset evidence;  // labels evidence / no_evidence
  LabelTable passability;     // evidence-positive ids only
  LabelTable outcome;         // 3-way truth per id
};

inline std::string sample_id(std::string_view prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return std::string(prefix) + buf;
}

inline BlobFixture make_blobs(const BlobOptions& opt) {
  Rng rng(opt.seed);
  const std::vector<std::string> outcomes{std::string(kNoEvidence), std::string(kPassable), std::string(kNonPassable)};
  std::vector<std::size_t> latent(opt.samples);
  for (auto& c : latent) {
    const double u = rng.uniform();
    c = u < 0.4 ? 0 : (u < 0.7 ? 1 : 2);
  }
  BlobFixture fx;
  for (std::size_t v = 0; v < opt.view_dims.size(); ++v) {
    const std::size_t dim = opt.view_dims[v];
    const double spread = opt.separation / std::sqrt(2.0 * static_cast<double>(dim));
    std::vector<std::vector<double>> centers(outcomes.size(), std::vector<double>(dim));
    for (auto& center : centers) {
      for (double& x : center) x = spread * rng.normal();
    }
    FeatureMatrix m{"m" + std::to_string(v + 1), {}, dim, {}};
    for (std::size_t i = 0; i < opt.samples; ++i) {
      m.ids.push_back(sample_id("s", i));
      for (std::size_t j = 0; j < dim; ++j) {
        m.values.push_back(opt.view_scale[v] * (centers[latent[i]][j] + rng.normal()) + opt.view_offset[v]);
      }
    }
    fx.evidence.views.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < opt.samples; ++i) {
    const std::string id = sample_id("s", i);
    fx.evidence.labels.push_back(latent[i] == 0 ? std::string(kNoEvidence) : std::string(kEvidence));
    if (latent[i] != 0) fx.passability.emplace(id, outcomes[latent[i]]);
    fx.outcome.emplace(id, outcomes[latent[i]]);
  }
  return fx;
}

struct TextureOptions {
  std::size_t per_class = 100;
  std::size_t size = 64;
  double noise = 30.0;
  std::uint64_t seed = 11;
};

struct TextureFixture {
  std::vector<PatchSpec> patches;
  std::map<std::string, ImageBuffer> images;
};

inline TextureFixture make_textures(const TextureOptions& opt) {
  Rng rng(opt.seed);
  TextureFixture fx;
  const std::size_t n = 2 * opt.per_class;
  for (std::size_t i = 0; i < n; ++i) {
    const bool flooded = i % 2 == 0;
    const double base[3] = {flooded ? 70.0 : 170.0, flooded ? 60.0 : 165.0, flooded ? 45.0 : 150.0};
    const double jitter = rng.uniform(0.85, 1.15);
    ImageBuffer img(opt.size, opt.size);
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      const double v = base[p % 3] * jitter + rng.uniform(-opt.noise, opt.noise);
      img.pixels[p] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
    PatchSpec spec;
    spec.image_id = sample_id("img", i);
    const auto coord = [&] { return static_cast<std::int64_t>(rng.index(opt.size)); };
    spec.p1 = {coord(), coord()};
    spec.p2 = {coord(), coord()};
    spec.label = std::string(flooded ? kNonPassable : kPassable);
    fx.images.emplace(spec.image_id, std::move(img));
    fx.patches.push_back(std::move(spec));
  }
  return fx;
}

}  // namespace floodpass::synthetic
