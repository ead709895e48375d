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

#include "synthaug/dataset/raster.hpp"

namespace synthaug::data {

// Procedural stand-in for an aerial tile: impervious ground, roof-shaded
// buildings, grass and tree patches, clutter specks and small vehicles.
struct ToySceneSpec {
  int buildings_min = 2, buildings_max = 4;
  int building_side_min = 12, building_side_max = 28;
  int veg_patches = 3;
  int trees = 4;
  int clutter = 3;
  int vehicles_min = 10, vehicles_max = 16;
  int vehicle_short_min = 3, vehicle_short_max = 4;
  int vehicle_long_min = 6, vehicle_long_max = 8;
  double noise = 0.06;  // per-pixel texture noise, [-1,1] units
};

struct ToyScene {
  Tile tile;
  int vehicles_placed = 0;
};

ToyScene toy_scene_generate(std::uint64_t seed, int side, const ToySceneSpec& spec = {}, std::string id = "toy");

}  // namespace synthaug::data
