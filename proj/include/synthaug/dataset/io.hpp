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

#include <filesystem>
#include <vector>

#include "synthaug/dataset/dataset.hpp"

namespace synthaug::data {

namespace fs = std::filesystem;

// 8-bit RGB PNG <-> [-1,1] planar image.
ImageChip read_image_png(const fs::path& path);
void write_image_png(const fs::path& path, const ImageChip& image);

// Masks are accepted either as single-channel class indices or as palette
// RGB; the format is detected from the file's colour type. Masks are written
// as single-channel class indices.
LabelMask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const LabelMask& mask);
void write_palette_png(const fs::path& path, const LabelMask& mask);

// Tiles live as <dir>/<id>.png with <dir>/<id>_mask.png.
Tile load_tile(const fs::path& image_path, const fs::path& mask_path, std::string id, double gsd_cm);
void save_tile(const fs::path& dir, const Tile& tile);
std::vector<Tile> load_tiles(const fs::path& dir, double gsd_cm = 5.0);

// chips/<tile_id>/<y>_<x>.png plus <y>_<x>_mask.png.
void save_chips(const fs::path& root, const std::string& tile_id, const std::vector<Chip>& chips);
std::vector<Chip> load_chips(const fs::path& root, const std::string& tile_id);

}  // namespace synthaug::data
