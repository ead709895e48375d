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

#include "synthaug/dataset/dataset.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "synthaug/common/rng.hpp"

namespace synthaug::data {

Tile downsample_nearest(const Tile& tile, int factor) {
  if (factor < 1) throw DimensionError("downsample factor must be >= 1, got " + std::to_string(factor));
  const int h = tile.mask.height, w = tile.mask.width;
  if (tile.image.height != h || tile.image.width != w) {
    throw DimensionError("tile '" + tile.id + "': image and mask sizes differ");
  }
  if (h % factor != 0 || w % factor != 0) {
    throw DimensionError("tile '" + tile.id + "' size " + std::to_string(h) + "x" + std::to_string(w) +
                         " is not divisible by " + std::to_string(factor));
  }
  const int oh = h / factor, ow = w / factor;
  Tile out{tile.id, ImageChip(oh, ow), LabelMask(oh, ow), tile.gsd_cm * factor};
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      out.mask.at(y, x) = tile.mask.at(y * factor, x * factor);
      for (int c = 0; c < 3; ++c) out.image.at(c, y, x) = tile.image.at(c, y * factor, x * factor);
    }
  }
  return out;
}

int chip_count_per_axis(int dim, int side, int stride) {
  if (stride < 1) throw DimensionError("chip stride must be >= 1");
  if (side < 1 || side > dim) {
    throw DimensionError("chip side " + std::to_string(side) + " exceeds raster dim " + std::to_string(dim));
  }
  return (dim - side) / stride + 1;
}

Chip crop(const Tile& tile, int y0, int x0, int side) {
  if (y0 < 0 || x0 < 0 || y0 + side > tile.mask.height || x0 + side > tile.mask.width) {
    throw DimensionError("crop at (" + std::to_string(y0) + "," + std::to_string(x0) + ") side " +
                         std::to_string(side) + " leaves tile '" + tile.id + "'");
  }
  Chip c{ImageChip(side, side), LabelMask(side, side), y0, x0};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      c.mask.at(y, x) = tile.mask.at(y0 + y, x0 + x);
      for (int ch = 0; ch < 3; ++ch) c.image.at(ch, y, x) = tile.image.at(ch, y0 + y, x0 + x);
    }
  }
  return c;
}

std::vector<Chip> chip(const Tile& tile, int side, int stride) {
  const int ny = chip_count_per_axis(tile.mask.height, side, stride);
  const int nx = chip_count_per_axis(tile.mask.width, side, stride);
  std::vector<Chip> out;
  out.reserve(std::size_t(ny) * nx);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) out.push_back(crop(tile, iy * stride, ix * stride, side));
  return out;
}

std::vector<GroundTruthBox> extract_bboxes(const LabelMask& mask, int class_index) {
  std::vector<GroundTruthBox> boxes;
  std::vector<char> seen(mask.data.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const std::size_t i = std::size_t(y) * mask.width + x;
      if (seen[i] || mask.data[i] != class_index) continue;
      int x0 = x, x1 = x + 1, y0 = y, y1 = y + 1;
      seen[i] = 1;
      stack.assign(1, {y, x});
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        x0 = std::min(x0, cx);
        x1 = std::max(x1, cx + 1);
        y0 = std::min(y0, cy);
        y1 = std::max(y1, cy + 1);
        const int ny[4] = {cy - 1, cy + 1, cy, cy};
        const int nx[4] = {cx, cx, cx - 1, cx + 1};
        for (int k = 0; k < 4; ++k) {
          if (ny[k] < 0 || nx[k] < 0 || ny[k] >= mask.height || nx[k] >= mask.width) continue;
          const std::size_t j = std::size_t(ny[k]) * mask.width + nx[k];
          if (seen[j] || mask.data[j] != class_index) continue;
          seen[j] = 1;
          stack.push_back({ny[k], nx[k]});
        }
      }
      boxes.push_back({Box{double(x0), double(y0), double(x1), double(y1)}, class_index});
    }
  }
  return boxes;
}

int count_components(const LabelMask& mask, int class_index) {
  return static_cast<int>(extract_bboxes(mask, class_index).size());
}

std::vector<Chip> random_vehicle_crops(const Tile& tile, int side, int min_vehicles, int n, std::uint64_t seed,
                                       int max_attempts) {
  if (min_vehicles < 0) throw ArgumentError("min_vehicles must be >= 0");
  if (side > tile.mask.height || side > tile.mask.width) {
    throw DimensionError("crop side " + std::to_string(side) + " exceeds tile '" + tile.id + "'");
  }
  Rng rng(seed);
  std::vector<Chip> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < n) {
    if (attempts++ >= max_attempts) {
      throw DataError("tile '" + tile.id + "': found " + std::to_string(out.size()) + " of " + std::to_string(n) +
                      " crops with >= " + std::to_string(min_vehicles) + " vehicles in " +
                      std::to_string(max_attempts) + " attempts");
    }
    const int y = rng.uniform_int(0, tile.mask.height - side);
    const int x = rng.uniform_int(0, tile.mask.width - side);
    Chip c = crop(tile, y, x, side);
    if (count_vehicles(c.mask) >= min_vehicles) out.push_back(std::move(c));
  }
  return out;
}

namespace {

// Source pixel for output pixel (y, x) under element k on an n x n grid.
std::pair<int, int> d4_source(int y, int x, int n, int k) {
  if (k >= 4) x = n - 1 - x;
  // Undo k%4 counter-clockwise quarter turns.
  for (int r = 0; r < k % 4; ++r) {
    const int sy = x, sx = n - 1 - y;
    y = sy;
    x = sx;
  }
  return {y, x};
}

void require_square(int h, int w) {
  if (h != w) throw DimensionError("d4 transforms need a square raster, got " + std::to_string(h) + "x" + std::to_string(w));
}

}  // namespace

ImageChip d4_transform(const ImageChip& image, int k) {
  require_square(image.height, image.width);
  const int n = image.height;
  ImageChip out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      auto [sy, sx] = d4_source(y, x, n, k);
      for (int c = 0; c < 3; ++c) out.at(c, y, x) = image.at(c, sy, sx);
    }
  }
  return out;
}

LabelMask d4_transform(const LabelMask& mask, int k) {
  require_square(mask.height, mask.width);
  const int n = mask.height;
  LabelMask out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      auto [sy, sx] = d4_source(y, x, n, k);
      out.at(y, x) = mask.at(sy, sx);
    }
  }
  return out;
}

Box d4_transform(const Box& box, int side, int k) {
  // Map the two corner pixels' extents through the forward transform.
  const double n = side;
  double x0 = box.x0, y0 = box.y0, x1 = box.x1, y1 = box.y1;
  for (int r = 0; r < k % 4; ++r) {
    // Counter-clockwise quarter turn: (y, x) -> (n - x, y) on edges.
    const double nx0 = y0, nx1 = y1, ny0 = n - x1, ny1 = n - x0;
    x0 = nx0;
    x1 = nx1;
    y0 = ny0;
    y1 = ny1;
  }
  if (k >= 4) {
    const double nx0 = n - x1, nx1 = n - x0;
    x0 = nx0;
    x1 = nx1;
  }
  return {x0, y0, x1, y1};
}

std::vector<std::pair<ImageChip, LabelMask>> d4_augment(const ImageChip& image, const LabelMask& mask) {
  if (image.height != mask.height || image.width != mask.width) throw DimensionError("d4_augment: image/mask size mismatch");
  std::vector<std::pair<ImageChip, LabelMask>> out;
  for (int k = 0; k < 8; ++k) out.emplace_back(d4_transform(image, k), d4_transform(mask, k));
  return out;
}

SplitManifest parse_manifest(const std::string& text) {
  SplitManifest m;
  std::vector<std::string>* section = nullptr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(b, e - b + 1);
    if (tok == "[train]") {
      section = &m.train;
    } else if (tok == "[test]") {
      section = &m.test;
    } else if (!section) {
      throw ManifestError("manifest line " + std::to_string(lineno) + ": id '" + tok + "' outside a section");
    } else {
      section->push_back(tok);
    }
  }
  return m;
}

std::string format_manifest(const SplitManifest& manifest) {
  std::string s = "[train]\n";
  for (const auto& id : manifest.train) s += id + "\n";
  s += "[test]\n";
  for (const auto& id : manifest.test) s += id + "\n";
  return s;
}

SplitManifest potsdam_manifest() {
  SplitManifest m;
  const char* all[] = {"2_10", "2_11", "2_12", "3_10", "3_11", "3_12", "4_10", "4_11",
                       "4_12", "5_10", "5_11", "5_12", "6_7",  "6_8",  "6_9",  "6_10",
                       "6_11", "6_12", "7_7",  "7_8",  "7_9",  "7_10", "7_11", "7_12"};
  const std::set<std::string> test{"4_12", "3_12", "5_11", "7_12"};
  for (const char* id : {"4_12", "3_12", "5_11", "7_12"}) m.test.push_back(std::string("top_potsdam_") + id);
  for (const char* id : all) {
    if (!test.contains(id)) m.train.push_back(std::string("top_potsdam_") + id);
  }
  return m;
}

Split split_train_test(const std::vector<Tile>& corpus, const SplitManifest& manifest) {
  std::map<std::string, const Tile*> by_id;
  for (const auto& t : corpus) {
    if (!by_id.emplace(t.id, &t).second) throw ManifestError("corpus has duplicate tile id '" + t.id + "'");
  }
  std::set<std::string> used;
  auto take = [&](const std::vector<std::string>& ids, std::vector<Tile>& dst) {
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ManifestError("manifest id '" + id + "' not in corpus");
      if (!used.insert(id).second) throw ManifestError("manifest id '" + id + "' listed twice");
      dst.push_back(*it->second);
    }
  };
  Split s;
  take(manifest.test, s.test);
  if (manifest.train.empty()) {
    // No train section: everything not held out.
    for (const auto& t : corpus)
      if (!used.contains(t.id)) s.train.push_back(t);
  } else {
    take(manifest.train, s.train);
  }
  return s;
}

}  // namespace synthaug::data
