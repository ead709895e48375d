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

#pragma once

#include <span>
#include <vector>

#include "synthaug/common/palette.hpp"
#include "synthaug/dataset/raster.hpp"

namespace synthaug::labelpost {

using data::ImageChip;
using data::LabelMask;

using Palette = std::span<const PaletteEntry>;
inline Palette default_palette() { return kPalette; }

// tol is a per-channel distance in [-1,1] units (range width 2.0).
struct PurityConfig {
  double tol = 0.15;
  double min_pure_fraction = 0.90;

  void validate() const;
};

struct PurityResult {
  bool passed = false;
  double pure_fraction = 0.0;
};

// A pixel is pure when some palette colour is within tol of it in every
// channel (Chebyshev distance).
PurityResult histogram_purity_test(const ImageChip& raster, const PurityConfig& cfg, Palette palette = default_palette());

// Per-pixel Euclidean nearest palette entry; ties go to the lower index.
LabelMask snap_to_palette(const ImageChip& raster, Palette palette = default_palette());

ImageChip render_palette(const LabelMask& mask, Palette palette = default_palette());

struct FilterResult {
  std::vector<LabelMask> accepted;
  std::vector<int> accepted_indices;  // positions in the input batch
  std::vector<double> pure_fractions;  // one per input raster
  double acceptance_rate = 0.0;
};

FilterResult filter_and_snap(const std::vector<ImageChip>& rasters, const PurityConfig& cfg,
                             Palette palette = default_palette());

}  // namespace synthaug::labelpost
