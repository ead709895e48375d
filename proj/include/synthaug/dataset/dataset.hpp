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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "synthaug/common/box.hpp"
#include "synthaug/common/palette.hpp"
#include "synthaug/dataset/raster.hpp"

namespace synthaug::data {

// Keeps the pixel at (i*factor, j*factor). Scales gsd_cm by factor.
Tile downsample_nearest(const Tile& tile, int factor);

// Origins per axis: 0, stride, ... while origin + side <= dim.
int chip_count_per_axis(int dim, int side, int stride);
std::vector<Chip> chip(const Tile& tile, int side, int stride);
Chip crop(const Tile& tile, int y, int x, int side);

// Tight half-open boxes of the 4-connected components of class_index, in
// raster-scan order of each component's first pixel.
std::vector<GroundTruthBox> extract_bboxes(const LabelMask& mask, int class_index = kVehicleClass);
int count_components(const LabelMask& mask, int class_index);
inline int count_vehicles(const LabelMask& mask) { return count_components(mask, kVehicleClass); }

// Rejection-samples uniform crop origins until n crops hold at least
// min_vehicles vehicles each. Raises DataError after max_attempts draws.
std::vector<Chip> random_vehicle_crops(const Tile& tile, int side, int min_vehicles, int n, std::uint64_t seed,
                                       int max_attempts = 10000);

// Dihedral group element k in [0,8): rotate by 90*(k%4) degrees
// counter-clockwise, then mirror left-right when k >= 4. Element 0 is the
// identity.
ImageChip d4_transform(const ImageChip& image, int k);
LabelMask d4_transform(const LabelMask& mask, int k);
std::vector<std::pair<ImageChip, LabelMask>> d4_augment(const ImageChip& image, const LabelMask& mask);
// Box image under the same transform on a side x side raster.
Box d4_transform(const Box& box, int side, int k);

struct SplitManifest {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Sections "[train]" and "[test]", one id per line, '#' comments.
SplitManifest parse_manifest(const std::string& text);
std::string format_manifest(const SplitManifest& manifest);
// The 20/4 Potsdam split with the four fixed test tiles.
SplitManifest potsdam_manifest();

struct Split {
  std::vector<Tile> train;
  std::vector<Tile> test;
};
// Ids absent from both lists are dropped. Unknown or duplicated ids raise
// ManifestError.
Split split_train_test(const std::vector<Tile>& corpus, const SplitManifest& manifest);

}  // namespace synthaug::data
