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

#include "synthaug/dataset/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <regex>

#include "synthaug/common/palette.hpp"

namespace synthaug::data {
namespace {

struct Raw {
  int height = 0, width = 0, channels = 0;
  std::vector<std::uint8_t> bytes;
};

// Reads as gray when the file has no colour, else as RGB.
Raw read_png(const fs::path& path, bool force_rgb) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw DataError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  const bool color = force_rgb || (img.format & PNG_FORMAT_FLAG_COLOR);
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  Raw raw{static_cast<int>(img.height), static_cast<int>(img.width), color ? 3 : 1, {}};
  raw.bytes.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, raw.bytes.data(), 0, nullptr)) {
    png_image_free(&img);
    throw DataError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  return raw;
}

void write_png(const fs::path& path, int height, int width, bool rgb, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw DataError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

std::uint8_t unit_to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround((double(v) + 1.0) * 127.5), 0L, 255L));
}

}  // namespace

ImageChip read_image_png(const fs::path& path) {
  Raw raw = read_png(path, true);
  ImageChip img(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = static_cast<float>(byte_to_unit(raw.bytes[(std::size_t(y) * raw.width + x) * 3 + c]));
  return img;
}

void write_image_png(const fs::path& path, const ImageChip& image) {
  std::vector<std::uint8_t> bytes(std::size_t(image.height) * image.width * 3);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) bytes[(std::size_t(y) * image.width + x) * 3 + c] = unit_to_byte(image.at(c, y, x));
  write_png(path, image.height, image.width, true, bytes);
}

LabelMask read_mask_png(const fs::path& path) {
  Raw raw = read_png(path, false);
  LabelMask mask(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      const std::size_t i = std::size_t(y) * raw.width + x;
      int cls = -1;
      if (raw.channels == 1) {
        cls = raw.bytes[i] < kNumClasses ? raw.bytes[i] : -1;
      } else {
        const std::uint8_t* px = &raw.bytes[i * 3];
        for (const auto& e : kPalette)
          if (e.rgb[0] == px[0] && e.rgb[1] == px[1] && e.rgb[2] == px[2]) cls = e.index;
      }
      if (cls < 0) {
        throw DataError("mask '" + path.string() + "': pixel (" + std::to_string(y) + "," + std::to_string(x) +
                        ") is not a class index or palette colour");
      }
      mask.at(y, x) = static_cast<std::uint8_t>(cls);
    }
  }
  return mask;
}

void write_mask_png(const fs::path& path, const LabelMask& mask) {
  write_png(path, mask.height, mask.width, false, mask.data);
}

void write_palette_png(const fs::path& path, const LabelMask& mask) {
  std::vector<std::uint8_t> bytes(mask.data.size() * 3);
  for (std::size_t i = 0; i < mask.data.size(); ++i)
    for (int c = 0; c < 3; ++c) bytes[i * 3 + c] = kPalette.at(mask.data[i]).rgb[c];
  write_png(path, mask.height, mask.width, true, bytes);
}

Tile load_tile(const fs::path& image_path, const fs::path& mask_path, std::string id, double gsd_cm) {
  Tile t{std::move(id), read_image_png(image_path), read_mask_png(mask_path), gsd_cm};
  if (t.image.height != t.mask.height || t.image.width != t.mask.width) {
    throw DataError("tile '" + t.id + "': image and mask sizes differ");
  }
  return t;
}

void save_tile(const fs::path& dir, const Tile& tile) {
  write_image_png(dir / (tile.id + ".png"), tile.image);
  write_mask_png(dir / (tile.id + "_mask.png"), tile.mask);
}

std::vector<Tile> load_tiles(const fs::path& dir, double gsd_cm) {
  if (!fs::is_directory(dir)) throw DataError("tile directory '" + dir.string() + "' does not exist");
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string stem = e.path().stem().string();
    if (e.path().extension() == ".png" && !stem.ends_with("_mask")) ids.push_back(stem);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<Tile> tiles;
  for (const auto& id : ids) tiles.push_back(load_tile(dir / (id + ".png"), dir / (id + "_mask.png"), id, gsd_cm));
  return tiles;
}

void save_chips(const fs::path& root, const std::string& tile_id, const std::vector<Chip>& chips) {
  const fs::path dir = root / "chips" / tile_id;
  for (const auto& c : chips) {
    const std::string stem = std::to_string(c.origin_y) + "_" + std::to_string(c.origin_x);
    write_image_png(dir / (stem + ".png"), c.image);
    write_mask_png(dir / (stem + "_mask.png"), c.mask);
  }
}

std::vector<Chip> load_chips(const fs::path& root, const std::string& tile_id) {
  const fs::path dir = root / "chips" / tile_id;
  if (!fs::is_directory(dir)) throw DataError("no chips for tile '" + tile_id + "' under " + root.string());
  static const std::regex name(R"((\d+)_(\d+))");
  std::vector<std::pair<int, int>> origins;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string stem = e.path().stem().string();
    if (e.path().extension() == ".png" && std::regex_match(stem, m, name)) {
      origins.emplace_back(std::stoi(m[1]), std::stoi(m[2]));
    }
  }
  std::sort(origins.begin(), origins.end());
  std::vector<Chip> chips;
  for (auto [y, x] : origins) {
    const std::string stem = std::to_string(y) + "_" + std::to_string(x);
    chips.push_back({read_image_png(dir / (stem + ".png")), read_mask_png(dir / (stem + "_mask.png")), y, x});
  }
  return chips;
}

}  // namespace synthaug::data
