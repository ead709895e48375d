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

#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "oracles/components.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/dataset/dataset.hpp"
#include "synthaug/dataset/io.hpp"
#include "synthaug/dataset/toy.hpp"

namespace synthaug::data {
namespace {

Tile random_tile(int h, int w, std::uint64_t seed, std::string id = "t") {
  Rng rng(seed);
  Tile t{std::move(id), ImageChip(h, w), LabelMask(h, w), 5.0};
  for (auto& v : t.image.data) v = static_cast<float>(rng.uniform(-1, 1));
  for (auto& m : t.mask.data) m = static_cast<std::uint8_t>(rng.uniform_int(0, 5));
  return t;
}

TEST(Downsample, PotsdamGeometry) {
  Tile t{"big", ImageChip(6000, 6000), LabelMask(6000, 6000), 5.0};
  Tile d = downsample_nearest(t, 6);
  EXPECT_EQ(d.mask.height, 1000);
  EXPECT_EQ(d.image.width, 1000);
  EXPECT_DOUBLE_EQ(d.gsd_cm, 30.0);
}

TEST(Downsample, TopLeftRuleAndIdentity) {
  Tile t = random_tile(12, 18, 1);
  Tile d = downsample_nearest(t, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 6; ++x) {
      EXPECT_EQ(d.mask.at(y, x), t.mask.at(3 * y, 3 * x));
      EXPECT_EQ(d.image.at(1, y, x), t.image.at(1, 3 * y, 3 * x));
    }
  Tile same = downsample_nearest(t, 1);
  EXPECT_EQ(same.mask, t.mask);
  EXPECT_EQ(same.image, t.image);
  EXPECT_THROW(downsample_nearest(t, 5), DimensionError);
}

TEST(Downsample, PreservesClassSetsAndConstants) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    Tile t = random_tile(24, 24, s);
    Tile d = downsample_nearest(t, 4);
    std::set<int> before(t.mask.data.begin(), t.mask.data.end());
    for (auto v : d.mask.data) EXPECT_TRUE(before.contains(v));
  }
  Tile c{"c", ImageChip(8, 8, 0.25f), LabelMask(8, 8, 3), 5.0};
  Tile dc = downsample_nearest(c, 2);
  for (auto v : dc.mask.data) EXPECT_EQ(v, 3);
  for (auto v : dc.image.data) EXPECT_EQ(v, 0.25f);
}

TEST(Chip, PotsdamCount) {
  EXPECT_EQ(chip_count_per_axis(1000, 256, 32), 24);
  Tile t{"t", ImageChip(1000, 1000), LabelMask(1000, 1000), 30.0};
  auto chips = chip(t, 256, 32);
  ASSERT_EQ(chips.size(), 576u);
  // Origins enumerate 0..736 step 32.
  std::set<int> ys;
  for (const auto& c : chips) ys.insert(c.origin_y);
  EXPECT_EQ(*ys.rbegin(), 736);
  EXPECT_EQ(ys.size(), 24u);
}

TEST(Chip, CountFormulaProperty) {
  for (int dim = 1; dim <= 40; ++dim)
    for (int side = 1; side <= dim; ++side)
      for (int stride = 1; stride <= 9; ++stride) {
        int brute = 0;
        for (int o = 0; o + side <= dim; o += stride) ++brute;
        ASSERT_EQ(chip_count_per_axis(dim, side, stride), brute) << dim << " " << side << " " << stride;
      }
}

TEST(Chip, ContentsAndBounds) {
  Tile t = random_tile(20, 20, 2);
  auto chips = chip(t, 20, 4);
  ASSERT_EQ(chips.size(), 1u);
  EXPECT_EQ(chips[0].mask, t.mask);
  for (const auto& c : chip(t, 7, 3)) {
    EXPECT_LE(c.origin_y + 7, 20);
    EXPECT_EQ(c.mask.at(6, 6), t.mask.at(c.origin_y + 6, c.origin_x + 6));
  }
  EXPECT_THROW(chip(t, 21, 1), DimensionError);
}

TEST(Vehicles, CountsSimpleCases) {
  LabelMask m(10, 10, 0);
  EXPECT_EQ(count_vehicles(m), 0);
  for (int y = 1; y < 3; ++y)
    for (int x = 1; x < 4; ++x) m.at(y, x) = kVehicleClass;
  for (int y = 6; y < 9; ++y) m.at(y, 7) = kVehicleClass;
  EXPECT_EQ(count_vehicles(m), 2);
  // Diagonal contact does not join components.
  LabelMask d(4, 4, 0);
  d.at(0, 0) = d.at(1, 1) = kVehicleClass;
  EXPECT_EQ(count_vehicles(d), 2);
  EXPECT_EQ(extract_bboxes(d).size(), 2u);
}

TEST(Vehicles, MatchesUnionFindOnRandomMasks) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = rng.uniform_int(1, 30), w = rng.uniform_int(1, 30);
    LabelMask m(h, w, 0);
    const double p = rng.uniform(0.1, 0.6);
    for (auto& v : m.data) v = rng.uniform() < p ? kVehicleClass : static_cast<std::uint8_t>(rng.uniform_int(0, 3));
    ASSERT_EQ(count_vehicles(m), oracle::component_count(m.data, h, w, kVehicleClass)) << "trial " << trial;
  }
}

TEST(Boxes, RectangleIsHalfOpen) {
  LabelMask m(40, 40, 0);
  for (int y = 20; y < 25; ++y)
    for (int x = 10; x < 13; ++x) m.at(y, x) = kVehicleClass;
  auto boxes = extract_bboxes(m);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].box, (Box{10, 20, 13, 25}));
  EXPECT_TRUE(extract_bboxes(LabelMask(5, 5, 0)).empty());
}

TEST(Boxes, AreTight) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    LabelMask m(16, 16, 0);
    for (auto& v : m.data) v = rng.uniform() < 0.3 ? kVehicleClass : 0;
    for (const auto& gt : extract_bboxes(m)) {
      const Box& b = gt.box;
      auto any_on_row = [&](int y) {
        for (int x = int(b.x0); x < int(b.x1); ++x)
          if (m.at(y, x) == kVehicleClass) return true;
        return false;
      };
      auto any_on_col = [&](int x) {
        for (int y = int(b.y0); y < int(b.y1); ++y)
          if (m.at(y, x) == kVehicleClass) return true;
        return false;
      };
      EXPECT_TRUE(any_on_row(int(b.y0)));
      EXPECT_TRUE(any_on_row(int(b.y1) - 1));
      EXPECT_TRUE(any_on_col(int(b.x0)));
      EXPECT_TRUE(any_on_col(int(b.x1) - 1));
    }
  }
}

TEST(Crops, VehicleRuleHoldsAndIsDeterministic) {
  ToyScene scene = toy_scene_generate(5, 128);
  auto a = random_vehicle_crops(scene.tile, 32, 2, 6, 77);
  auto b = random_vehicle_crops(scene.tile, 32, 2, 6, 77);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_GE(count_vehicles(a[i].mask), 2);
    EXPECT_EQ(a[i].origin_y, b[i].origin_y);
    EXPECT_EQ(a[i].origin_x, b[i].origin_x);
  }
  EXPECT_EQ(random_vehicle_crops(scene.tile, 32, 0, 5, 1).size(), 5u);
}

TEST(Crops, InfeasibleRaisesWithAchievedCount) {
  Tile t{"empty", ImageChip(64, 64), LabelMask(64, 64, 0), 30.0};
  try {
    random_vehicle_crops(t, 32, 1, 3, 9, 50);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("found 0 of 3"), std::string::npos);
  }
}

TEST(D4, GroupLaws) {
  Tile t = random_tile(9, 9, 6);
  EXPECT_EQ(d4_transform(t.image, 0), t.image);
  ImageChip r = t.image;
  for (int i = 0; i < 4; ++i) r = d4_transform(r, 1);
  EXPECT_EQ(r, t.image);
  auto all = d4_augment(t.image, t.mask);
  ASSERT_EQ(all.size(), 8u);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      EXPECT_NE(all[i].first, all[j].first) << i << "," << j;
      EXPECT_NE(all[i].second, all[j].second) << i << "," << j;
    }
  EXPECT_THROW(d4_transform(LabelMask(3, 4), 1), DimensionError);
}

TEST(D4, ImageAndMaskMoveInLockstep) {
  Tile t = random_tile(8, 8, 7);
  // Encode the class in channel 0 so lockstep can be checked per pixel.
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) t.image.at(0, y, x) = t.mask.at(y, x);
  for (const auto& [img, mask] : d4_augment(t.image, t.mask))
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) EXPECT_EQ(img.at(0, y, x), mask.at(y, x));
}

TEST(D4, BoxTransformMatchesMaskTransform) {
  LabelMask m(16, 16, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 9; x < 15; ++x) m.at(y, x) = kVehicleClass;
  const Box b = extract_bboxes(m)[0].box;
  for (int k = 0; k < 8; ++k) {
    auto moved = extract_bboxes(d4_transform(m, k));
    ASSERT_EQ(moved.size(), 1u);
    EXPECT_EQ(moved[0].box, d4_transform(b, 16, k)) << "k=" << k;
  }
}

TEST(Toy, DeterministicAndValid) {
  ToyScene a = toy_scene_generate(11, 96);
  ToyScene b = toy_scene_generate(11, 96);
  EXPECT_EQ(a.tile.mask, b.tile.mask);
  EXPECT_EQ(a.tile.image, b.tile.image);
  for (auto v : a.tile.mask.data) EXPECT_LT(v, kNumClasses);
  for (auto v : a.tile.image.data) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_THROW(toy_scene_generate(1, 16), DimensionError);
}

TEST(Toy, VehicleCountMatchesPlacements) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    ToyScene scene = toy_scene_generate(s, 128);
    EXPECT_GT(scene.vehicles_placed, 0);
    EXPECT_EQ(count_vehicles(scene.tile.mask), scene.vehicles_placed) << "seed " << s;
  }
}

TEST(Manifest, PotsdamSplit) {
  SplitManifest m = potsdam_manifest();
  EXPECT_EQ(m.train.size(), 20u);
  ASSERT_EQ(m.test.size(), 4u);
  EXPECT_EQ(m.test[0], "top_potsdam_4_12");
  std::vector<Tile> corpus;
  for (const auto& id : m.train) corpus.push_back({id, ImageChip(1, 1), LabelMask(1, 1), 5.0});
  for (const auto& id : m.test) corpus.push_back({id, ImageChip(1, 1), LabelMask(1, 1), 5.0});
  Split s = split_train_test(corpus, parse_manifest(format_manifest(m)));
  EXPECT_EQ(s.train.size(), 20u);
  EXPECT_EQ(s.test.size(), 4u);
}

TEST(Manifest, EmptyTestAndErrors) {
  std::vector<Tile> corpus{{"a", {}, {}, 5}, {"b", {}, {}, 5}};
  Split s = split_train_test(corpus, parse_manifest("[test]\n"));
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_TRUE(s.test.empty());
  EXPECT_THROW(split_train_test(corpus, parse_manifest("[train]\na\n[test]\na\n")), ManifestError);
  EXPECT_THROW(split_train_test(corpus, parse_manifest("[test]\nzzz\n")), ManifestError);
  EXPECT_THROW(parse_manifest("orphan\n"), ManifestError);
}

TEST(Io, PngRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "synthaug_io_test";
  std::filesystem::remove_all(dir);
  ToyScene scene = toy_scene_generate(3, 64, {}, "scene_a");
  save_tile(dir / "tiles", scene.tile);
  auto tiles = load_tiles(dir / "tiles", 30.0);
  ASSERT_EQ(tiles.size(), 1u);
  EXPECT_EQ(tiles[0].id, "scene_a");
  EXPECT_EQ(tiles[0].mask, scene.tile.mask);
  for (std::size_t i = 0; i < scene.tile.image.data.size(); ++i)
    ASSERT_NEAR(tiles[0].image.data[i], scene.tile.image.data[i], 1.0 / 127.5);

  write_palette_png(dir / "pal.png", scene.tile.mask);
  EXPECT_EQ(read_mask_png(dir / "pal.png"), scene.tile.mask);

  auto chips = chip(tiles[0], 32, 16);
  save_chips(dir, "scene_a", chips);
  auto back = load_chips(dir, "scene_a");
  ASSERT_EQ(back.size(), chips.size());
  EXPECT_EQ(back[3].mask, chips[3].mask);
  EXPECT_EQ(back[3].origin_x, chips[3].origin_x);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace synthaug::data
