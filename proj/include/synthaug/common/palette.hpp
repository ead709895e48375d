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
#include <string_view>

namespace synthaug {

inline constexpr int kNumClasses = 6;
inline constexpr std::uint8_t kVehicleClass = 4;

struct PaletteEntry {
  std::uint8_t index;
  std::string_view name;
  std::array<std::uint8_t, 3> rgb;
};

// ISPRS label colours.
inline constexpr std::array<PaletteEntry, kNumClasses> kPalette{{
    {0, "impervious", {255, 255, 255}},
    {1, "building", {0, 0, 255}},
    {2, "low_vegetation", {0, 255, 255}},
    {3, "tree", {0, 255, 0}},
    {4, "vehicle", {255, 255, 0}},
    {5, "clutter", {255, 0, 0}},
}};

// Byte value in [0,255] to the [-1,1] range used by every network.
inline constexpr double byte_to_unit(std::uint8_t b) { return b / 127.5 - 1.0; }

}  // namespace synthaug
