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

#include "synthaug/dataset/toy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "synthaug/common/palette.hpp"
#include "synthaug/common/rng.hpp"

namespace synthaug::data {
namespace {

using Rgb = std::array<float, 3>;

constexpr Rgb kGround{0.15f, 0.12f, 0.08f};
constexpr Rgb kRoad{-0.35f, -0.35f, -0.33f};
constexpr Rgb kRoof{0.45f, -0.15f, -0.35f};
constexpr Rgb kGrass{-0.15f, 0.35f, -0.45f};
constexpr Rgb kTree{-0.65f, -0.15f, -0.65f};
constexpr Rgb kClutter{0.25f, 0.05f, -0.25f};
constexpr std::array<Rgb, 4> kVehicleColors{{
    {0.9f, 0.9f, 0.88f}, {-0.85f, -0.85f, -0.8f}, {0.85f, -0.7f, -0.7f}, {-0.6f, -0.45f, 0.7f}}};

struct Canvas {
  LabelMask mask;
  std::vector<Rgb> color;
  int n;

  explicit Canvas(int side) : mask(side, side, 0), color(std::size_t(side) * side, kGround), n(side) {}

  void paint(int y, int x, std::uint8_t cls, const Rgb& c) {
    if (y < 0 || x < 0 || y >= n || x >= n) return;
    mask.at(y, x) = cls;
    color[std::size_t(y) * n + x] = c;
  }
};

Rgb shade(const Rgb& c, float f) { return {c[0] * f + (f - 1) * 0.5f, c[1] * f + (f - 1) * 0.5f, c[2] * f + (f - 1) * 0.5f}; }

}  // namespace

ToyScene toy_scene_generate(std::uint64_t seed, int side, const ToySceneSpec& spec, std::string id) {
  if (side < 32) throw DimensionError("toy scenes need side >= 32, got " + std::to_string(side));
  Rng rng(seed);
  Canvas cv(side);

  // Roads: impervious class, darker asphalt.
  std::vector<std::array<int, 4>> roads;  // y0, x0, y1, x1
  const int n_roads = rng.uniform_int(1, 2);
  const bool first_horizontal = rng.uniform() < 0.5;
  for (int r = 0; r < n_roads; ++r) {
    const int width = rng.uniform_int(8, 11);
    const int at = rng.uniform_int(0, side - width);
    const bool horizontal = (r == 0) == first_horizontal;
    std::array<int, 4> rect = horizontal ? std::array<int, 4>{at, 0, at + width, side}
                                         : std::array<int, 4>{0, at, side, at + width};
    roads.push_back(rect);
    for (int y = rect[0]; y < rect[2]; ++y)
      for (int x = rect[1]; x < rect[3]; ++x) cv.paint(y, x, 0, kRoad);
  }
  auto on_road = [&](int y, int x) {
    for (const auto& r : roads)
      if (y >= r[0] && y < r[2] && x >= r[1] && x < r[3]) return true;
    return false;
  };

  // Grass patches (ellipses) then trees (discs), avoiding roads.
  for (int p = 0; p < spec.veg_patches; ++p) {
    const int cy = rng.uniform_int(0, side - 1), cx = rng.uniform_int(0, side - 1);
    const int ry = rng.uniform_int(5, 12), rx = rng.uniform_int(5, 12);
    for (int y = cy - ry; y <= cy + ry; ++y)
      for (int x = cx - rx; x <= cx + rx; ++x) {
        const double d = std::pow(double(y - cy) / ry, 2) + std::pow(double(x - cx) / rx, 2);
        if (d <= 1.0 && !on_road(y, x)) cv.paint(y, x, 2, kGrass);
      }
  }

  // Buildings with a two-tone gabled roof.
  const int n_buildings = rng.uniform_int(spec.buildings_min, spec.buildings_max);
  for (int b = 0; b < n_buildings; ++b) {
    const int h = rng.uniform_int(spec.building_side_min, spec.building_side_max);
    const int w = rng.uniform_int(spec.building_side_min, spec.building_side_max);
    const int y0 = rng.uniform_int(0, side - h), x0 = rng.uniform_int(0, side - w);
    const bool ridge_vertical = w > h;
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) {
        if (on_road(y, x)) continue;
        const bool lit = ridge_vertical ? (x - x0) < w / 2 : (y - y0) < h / 2;
        cv.paint(y, x, 1, shade(kRoof, lit ? 1.0f : 0.75f));
      }
  }

  for (int t = 0; t < spec.trees; ++t) {
    const int cy = rng.uniform_int(0, side - 1), cx = rng.uniform_int(0, side - 1);
    const int r = rng.uniform_int(3, 6);
    for (int y = cy - r; y <= cy + r; ++y)
      for (int x = cx - r; x <= cx + r; ++x) {
        if ((y - cy) * (y - cy) + (x - cx) * (x - cx) > r * r || on_road(y, x)) continue;
        if (y >= 0 && x >= 0 && y < side && x < side && cv.mask.at(y, x) == 1) continue;
        const float f = 1.0f - 0.25f * float(std::hypot(y - cy, x - cx) / r);
        cv.paint(y, x, 3, shade(kTree, f));
      }
  }

  for (int c = 0; c < spec.clutter; ++c) {
    const int h = rng.uniform_int(2, 5), w = rng.uniform_int(2, 5);
    const int y0 = rng.uniform_int(0, side - h), x0 = rng.uniform_int(0, side - w);
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x)
        if (cv.mask.at(y, x) == 0 && !on_road(y, x)) cv.paint(y, x, 5, kClutter);
  }

  // Vehicles: mostly on roads, always on impervious ground with a one-pixel
  // impervious margin, so no two vehicles ever share a component.
  const int wanted = rng.uniform_int(spec.vehicles_min, spec.vehicles_max);
  int placed = 0;
  for (int attempt = 0; attempt < wanted * 200 && placed < wanted; ++attempt) {
    const int s = rng.uniform_int(spec.vehicle_short_min, spec.vehicle_short_max);
    const int l = rng.uniform_int(spec.vehicle_long_min, spec.vehicle_long_max);
    const bool vertical = rng.uniform() < 0.5;
    const int h = vertical ? l : s, w = vertical ? s : l;
    int y0, x0;
    if (rng.uniform() < 0.75) {
      const auto& r = roads[rng.uniform_int(0, static_cast<int>(roads.size()) - 1)];
      y0 = rng.uniform_int(r[0], std::max(r[0], r[2] - h));
      x0 = rng.uniform_int(r[1], std::max(r[1], r[3] - w));
    } else {
      y0 = rng.uniform_int(0, side - h);
      x0 = rng.uniform_int(0, side - w);
    }
    if (y0 + h > side || x0 + w > side) continue;
    bool free = true;
    for (int y = y0 - 1; y <= y0 + h && free; ++y)
      for (int x = x0 - 1; x <= x0 + w && free; ++x) {
        if (y < 0 || x < 0 || y >= side || x >= side) continue;
        free = cv.mask.at(y, x) == 0;
      }
    if (!free) continue;
    const Rgb body = kVehicleColors[rng.uniform_int(0, static_cast<int>(kVehicleColors.size()) - 1)];
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) {
        // Darker windscreen band across the long axis.
        const int along = vertical ? y - y0 : x - x0;
        const bool glass = along == l / 3;
        cv.paint(y, x, kVehicleClass, glass ? shade(body, 0.5f) : body);
      }
    ++placed;
  }

  ToyScene scene;
  scene.vehicles_placed = placed;
  scene.tile.id = std::move(id);
  scene.tile.gsd_cm = 30.0;
  scene.tile.mask = std::move(cv.mask);
  scene.tile.image = ImageChip(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      const Rgb& c = cv.color[std::size_t(y) * side + x];
      for (int ch = 0; ch < 3; ++ch) {
        const double v = c[ch] + spec.noise * rng.normal();
        scene.tile.image.at(ch, y, x) = static_cast<float>(std::clamp(v, -1.0, 1.0));
      }
    }
  return scene;
}

}  // namespace synthaug::data
