// Copyright 2026 The synthaug Authors. All Rights Reserved.
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

#include "synthaug/labelpost/labelpost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace synthaug::labelpost {
namespace {

std::array<double, 3> unit_rgb(const PaletteEntry& e) {
  return {byte_to_unit(e.rgb[0]), byte_to_unit(e.rgb[1]), byte_to_unit(e.rgb[2])};
}

}  // namespace

void PurityConfig::validate() const {
  if (!(tol >= 0.0)) throw ConfigError("purity tol must be >= 0");
  if (!(min_pure_fraction >= 0.0 && min_pure_fraction <= 1.0)) {
    throw ConfigError("min_pure_fraction must lie in [0,1]");
  }
}

PurityResult histogram_purity_test(const ImageChip& raster, const PurityConfig& cfg, Palette palette) {
  cfg.validate();
  const std::size_t n = raster.plane();
  if (n == 0) return {false, 0.0};
  std::vector<std::array<double, 3>> colors;
  for (const auto& e : palette) colors.push_back(unit_rgb(e));
  std::size_t pure = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : colors) {
      double d = 0.0;
      for (int ch = 0; ch < 3; ++ch) d = std::max(d, std::abs(raster.data[ch * n + i] - c[ch]));
      best = std::min(best, d);
    }
    if (best <= cfg.tol) ++pure;
  }
  const double fraction = double(pure) / double(n);
  return {fraction >= cfg.min_pure_fraction, fraction};
}

LabelMask snap_to_palette(const ImageChip& raster, Palette palette) {
  LabelMask mask(raster.height, raster.width);
  const std::size_t n = raster.plane();
  std::vector<std::array<double, 3>> colors;
  for (const auto& e : palette) colors.push_back(unit_rgb(e));
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < colors.size(); ++k) {
      double d = 0.0;
      for (int ch = 0; ch < 3; ++ch) {
        const double diff = raster.data[ch * n + i] - colors[k][ch];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    mask.data[i] = palette[arg].index;
  }
  return mask;
}

ImageChip render_palette(const LabelMask& mask, Palette palette) {
  ImageChip img(mask.height, mask.width);
  const std::size_t n = img.plane();
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = std::find_if(palette.begin(), palette.end(), [&](const PaletteEntry& e) { return e.index == mask.data[i]; });
    if (it == palette.end()) throw DataError("class " + std::to_string(mask.data[i]) + " has no palette entry");
    const auto c = unit_rgb(*it);
    for (int ch = 0; ch < 3; ++ch) img.data[ch * n + i] = static_cast<float>(c[ch]);
  }
  return img;
}

FilterResult filter_and_snap(const std::vector<ImageChip>& rasters, const PurityConfig& cfg, Palette palette) {
  if (rasters.empty()) throw ArgumentError("filter_and_snap: empty batch");
  FilterResult r;
  for (std::size_t i = 0; i < rasters.size(); ++i) {
    const PurityResult p = histogram_purity_test(rasters[i], cfg, palette);
    r.pure_fractions.push_back(p.pure_fraction);
    if (!p.passed) continue;
    r.accepted.push_back(snap_to_palette(rasters[i], palette));
    r.accepted_indices.push_back(static_cast<int>(i));
  }
  r.acceptance_rate = double(r.accepted.size()) / double(rasters.size());
  return r;
}

}  // namespace synthaug::labelpost
