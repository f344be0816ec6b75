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

// 8-bit RGB buffers, binary PPM (P6) I/O, endpoint cropping, flip and
// brightness augmentation, and the RGB histogram featurizer.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "floodpass/dataset.hpp"
#include "floodpass/error.hpp"
#include "floodpass/random.hpp"

namespace floodpass {

struct ImageBuffer {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  ImageBuffer() = default;
  ImageBuffer(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}

  std::uint8_t* at(std::size_t x, std::size_t y) { return pixels.data() + (y * width + x) * 3; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return pixels.data() + (y * width + x) * 3; }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

namespace detail {

inline int ppm_skip_space(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      return c;
    }
    c = in.get();
  }
  return c;
}

inline std::size_t ppm_read_uint(std::istream& in, const char* what) {
  int c = ppm_skip_space(in);
  if (c == EOF || !std::isdigit(c)) throw Error(ErrorKind::UnsupportedFormat, std::string("PPM header: missing ") + what);
  std::size_t value = 0;
  while (c != EOF && std::isdigit(c)) {
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > (std::size_t{1} << 31)) throw Error(ErrorKind::UnsupportedFormat, std::string("PPM header: ") + what + " too large");
    c = in.get();
  }
  if (c != EOF && !std::isspace(c)) throw Error(ErrorKind::UnsupportedFormat, std::string("PPM header: malformed ") + what);
  if (c == EOF) throw Error(ErrorKind::TruncatedPixelData, "PPM header ends early");
  return value;  // the single whitespace after the number has been consumed
}

}  // namespace detail

/// Reads a binary PPM (P6) with maxval 255.
inline ImageBuffer load_ppm(std::istream& in) {
  const int m0 = in.get();
  const int m1 = in.get();
  if (m0 != 'P' || m1 != '6') throw Error(ErrorKind::UnsupportedFormat, "only binary PPM (P6) is supported");
  const std::size_t w = detail::ppm_read_uint(in, "width");
  const std::size_t h = detail::ppm_read_uint(in, "height");
  const std::size_t maxval = detail::ppm_read_uint(in, "maxval");
  if (w == 0 || h == 0) throw Error(ErrorKind::UnsupportedFormat, "PPM dimensions must be positive");
  if (maxval != 255) throw Error(ErrorKind::UnsupportedFormat, "PPM maxval must be 255, got " + std::to_string(maxval));
  ImageBuffer img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) {
    throw Error(ErrorKind::TruncatedPixelData,
                "expected " + std::to_string(img.pixels.size()) + " pixel bytes, got " + std::to_string(in.gcount()));
  }
  return img;
}

inline void write_ppm(std::ostream& out, const ImageBuffer& img) {
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

struct CropBox {
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive
  friend bool operator==(const CropBox&, const CropBox&) = default;
};

/// Bounding box of both endpoints grown by `margin` and clipped to the image.
inline CropBox patch_box(std::size_t width, std::size_t height, const PatchSpec& spec, std::size_t margin) {
  for (const auto* p : {&spec.p1, &spec.p2}) {
    if (p->x < 0 || p->y < 0 || static_cast<std::size_t>(p->x) >= width || static_cast<std::size_t>(p->y) >= height) {
      throw Error(ErrorKind::EndpointOutOfBounds,
                  std::string(p == &spec.p1 ? "p1" : "p2") + " (" + std::to_string(p->x) + "," + std::to_string(p->y) +
                      ") outside " + std::to_string(width) + "x" + std::to_string(height) + " image '" + spec.image_id + "'");
    }
  }
  const auto lo_x = static_cast<std::size_t>(std::min(spec.p1.x, spec.p2.x));
  const auto hi_x = static_cast<std::size_t>(std::max(spec.p1.x, spec.p2.x));
  const auto lo_y = static_cast<std::size_t>(std::min(spec.p1.y, spec.p2.y));
  const auto hi_y = static_cast<std::size_t>(std::max(spec.p1.y, spec.p2.y));
  return {lo_x > margin ? lo_x - margin : 0, lo_y > margin ? lo_y - margin : 0, std::min(width - 1, hi_x + margin),
          std::min(height - 1, hi_y + margin)};
}

inline ImageBuffer crop(const ImageBuffer& img, const CropBox& box) {
  ImageBuffer out(box.x1 - box.x0 + 1, box.y1 - box.y0 + 1);
  for (std::size_t y = 0; y < out.height; ++y) {
    const std::uint8_t* src = img.at(box.x0, box.y0 + y);
    std::copy(src, src + out.width * 3, out.at(0, y));
  }
  return out;
}

inline ImageBuffer extract_patch(const ImageBuffer& img, const PatchSpec& spec, std::size_t margin) {
  return crop(img, patch_box(img.width, img.height, spec, margin));
}

inline ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) std::copy_n(img.at(img.width - 1 - x, y), 3, out.at(x, y));
  }
  return out;
}

inline ImageBuffer flip_vertical(const ImageBuffer& img) {
  ImageBuffer out(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y) std::copy_n(img.at(0, img.height - 1 - y), img.width * 3, out.at(0, y));
  return out;
}

/// Scales every channel by `factor`, rounding half up and clamping to [0,255].
inline ImageBuffer scale_brightness(const ImageBuffer& img, double factor) {
  ImageBuffer out = img;
  for (auto& c : out.pixels) {
    const double v = std::floor(static_cast<double>(c) * factor + 0.5);
    c = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

struct AugmentPolicy {
  bool flip_horizontal = true;
  bool flip_vertical = true;
  bool flip_both = false;
  std::size_t brightness_samples = 2;
  double brightness_lo = 0.6;
  double brightness_hi = 1.4;
  std::uint64_t seed = 0;

  std::size_t flip_count() const { return std::size_t{flip_horizontal} + flip_vertical + flip_both; }
  /// Images produced per input patch.
  std::size_t multiplier() const { return (1 + flip_count()) * (1 + brightness_samples); }

  void validate() const {
    if (!(brightness_lo > 0.0 && brightness_lo <= 1.0 && brightness_hi >= 1.0) || !std::isfinite(brightness_hi)) {
      throw Error(ErrorKind::InvalidArgument, "brightness range must satisfy 0 < lo <= 1 <= hi");
    }
  }
};

/// Brightness factors drawn for `policy`, uniform in [lo, hi].
inline std::vector<double> brightness_factors(const AugmentPolicy& policy) {
  Rng rng(policy.seed);
  std::vector<double> out(policy.brightness_samples);
  for (double& f : out) f = rng.uniform(policy.brightness_lo, policy.brightness_hi);
  return out;
}

/// Original, then the requested flips (horizontal, vertical, both), then for
/// each brightness factor a scaled copy of every geometric variant.
inline std::vector<ImageBuffer> augment(const ImageBuffer& patch, const AugmentPolicy& policy) {
  policy.validate();
  std::vector<ImageBuffer> geo{patch};
  if (policy.flip_horizontal) geo.push_back(flip_horizontal(patch));
  if (policy.flip_vertical) geo.push_back(flip_vertical(patch));
  if (policy.flip_both) geo.push_back(flip_vertical(flip_horizontal(patch)));
  std::vector<ImageBuffer> out = geo;
  for (double f : brightness_factors(policy)) {
    for (const auto& g : geo) out.push_back(scale_brightness(g, f));
  }
  return out;
}

/// Per-channel histograms (R, G, B blocks of `bins` each). With `normalize`,
/// each block sums to 1.
inline std::vector<double> rgb_histogram(const ImageBuffer& patch, std::size_t bins, bool normalize = true) {
  if (bins == 0 || bins > 256 || 256 % bins != 0) {
    throw Error(ErrorKind::InvalidBins, "bins per channel must divide 256, got " + std::to_string(bins));
  }
  const std::size_t width = 256 / bins;
  std::vector<double> hist(3 * bins, 0.0);
  for (std::size_t i = 0; i < patch.pixels.size(); i += 3) {
    for (std::size_t c = 0; c < 3; ++c) hist[c * bins + patch.pixels[i + c] / width] += 1.0;
  }
  const std::size_t count = patch.width * patch.height;
  if (normalize && count > 0) {
    for (double& h : hist) h /= static_cast<double>(count);
  }
  return hist;
}

}  // namespace floodpass
