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

#include <cstdint>
#include <string>
#include <vector>

#include "synthaug/common/error.hpp"

namespace synthaug::data {

// H x W grid of class indices in {0..5}.
struct LabelMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  LabelMask() = default;
  LabelMask(int h, int w, std::uint8_t fill = 0) : height(h), width(w), data(std::size_t(h) * w, fill) {}

  std::uint8_t at(int y, int x) const { return data[std::size_t(y) * width + x]; }
  std::uint8_t& at(int y, int x) { return data[std::size_t(y) * width + x]; }
  friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

// 3 x H x W planar raster with values in [-1,1].
struct ImageChip {
  int height = 0;
  int width = 0;
  std::vector<float> data;

  ImageChip() = default;
  ImageChip(int h, int w, float fill = 0.0f) : height(h), width(w), data(std::size_t(3) * h * w, fill) {}

  std::size_t plane() const { return std::size_t(height) * width; }
  float at(int c, int y, int x) const { return data[c * plane() + std::size_t(y) * width + x]; }
  float& at(int c, int y, int x) { return data[c * plane() + std::size_t(y) * width + x]; }
  friend bool operator==(const ImageChip&, const ImageChip&) = default;
};

struct Tile {
  std::string id;
  ImageChip image;
  LabelMask mask;
  double gsd_cm = 5.0;
};

struct Chip {
  ImageChip image;
  LabelMask mask;
  int origin_y = 0;
  int origin_x = 0;
};

}  // namespace synthaug::data
