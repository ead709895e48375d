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

#include "synthaug/common/rng.hpp"
#include "synthaug/labelpost/labelpost.hpp"

namespace synthaug::labelpost {
namespace {

ImageChip from_bytes(int h, int w, const std::vector<std::array<int, 3>>& px) {
  ImageChip img(h, w);
  for (std::size_t i = 0; i < px.size(); ++i)
    for (int c = 0; c < 3; ++c) img.data[c * img.plane() + i] = static_cast<float>(px[i][c] / 127.5 - 1.0);
  return img;
}

LabelMask random_mask(int side, Rng& rng) {
  LabelMask m(side, side);
  for (auto& v : m.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, 5));
  return m;
}

ImageChip noise_raster(int side, Rng& rng) {
  ImageChip img(side, side);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(-1, 1));
  return img;
}

TEST(Palette, SixDistinctEntries) {
  ASSERT_EQ(default_palette().size(), 6u);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) EXPECT_NE(kPalette[i].rgb, kPalette[j].rgb);
  EXPECT_EQ(kPalette[4].name, "vehicle");
  EXPECT_EQ(kPalette[4].rgb, (std::array<std::uint8_t, 3>{255, 255, 0}));
}

TEST(Purity, ExactPaletteRasterPasses) {
  Rng rng(1);
  auto r = histogram_purity_test(render_palette(random_mask(16, rng)), PurityConfig{});
  EXPECT_TRUE(r.passed);
  EXPECT_DOUBLE_EQ(r.pure_fraction, 1.0);
}

TEST(Purity, MidGrayFails) {
  auto r = histogram_purity_test(ImageChip(8, 8, 0.0f), PurityConfig{0.1, 0.9});
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.pure_fraction, 0.0);
}

TEST(Purity, UniformNoiseAlmostNeverPasses) {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    passes += histogram_purity_test(noise_raster(16, rng), PurityConfig{0.1, 0.8}).passed;
  }
  EXPECT_LT(passes, 10);
}

TEST(Purity, RejectsBadConfig) {
  EXPECT_THROW(histogram_purity_test(ImageChip(2, 2), PurityConfig{-0.1, 0.5}), ConfigError);
  EXPECT_THROW(histogram_purity_test(ImageChip(2, 2), PurityConfig{0.1, 1.5}), ConfigError);
}

TEST(Snap, HandExamples) {
  EXPECT_EQ(snap_to_palette(from_bytes(1, 1, {{255, 255, 0}})).data[0], 4);
  EXPECT_EQ(snap_to_palette(from_bytes(1, 1, {{250, 250, 10}})).data[0], 4);
}

// Nearest palette entry by exhaustive search in byte space.
int byte_space_nearest(const std::array<int, 3>& px) {
  int best = -1;
  long best_d = 0;
  for (const auto& e : kPalette) {
    long d = 0;
    for (int c = 0; c < 3; ++c) d += long(px[c] - e.rgb[c]) * (px[c] - e.rgb[c]);
    if (best < 0 || d < best_d) {
      best = e.index;
      best_d = d;
    }
  }
  return best;
}

TEST(Snap, MatchesExhaustiveSearch) {
  Rng rng(2);
  std::vector<std::array<int, 3>> px(400);
  for (auto& p : px) p = {rng.uniform_int(0, 255), rng.uniform_int(0, 255), rng.uniform_int(0, 255)};
  LabelMask m = snap_to_palette(from_bytes(20, 20, px));
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_EQ(m.data[i], byte_space_nearest(px[i])) << i;
}

TEST(Snap, TiesGoToLowestIndex) {
  // (127.5, 127.5, 255) in unit space is (0, 0, 1): equidistant from white,
  // blue and aqua; white (0) must win.
  ImageChip img(1, 1);
  img.data = {0.0f, 0.0f, 1.0f};
  EXPECT_EQ(snap_to_palette(img).data[0], 0);
}

TEST(Snap, IdempotentAndInRange) {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    LabelMask m = random_mask(12, rng);
    EXPECT_EQ(snap_to_palette(render_palette(m)), m);
    for (auto v : snap_to_palette(noise_raster(12, rng)).data) EXPECT_LT(v, 6);
  }
}

TEST(Filter, RatesAndOrder) {
  Rng rng(4);
  std::vector<ImageChip> batch;
  std::vector<LabelMask> pure_masks;
  for (int i = 0; i < 10; ++i) {
    if (i % 3 == 0) {
      batch.push_back(noise_raster(12, rng));
    } else {
      pure_masks.push_back(random_mask(12, rng));
      batch.push_back(render_palette(pure_masks.back()));
    }
  }
  auto r = filter_and_snap(batch, PurityConfig{});
  EXPECT_DOUBLE_EQ(r.acceptance_rate, 6.0 / 10.0);
  EXPECT_EQ(r.accepted, pure_masks);
  EXPECT_EQ(r.accepted_indices, (std::vector<int>{1, 2, 4, 5, 7, 8}));
  for (const auto& m : r.accepted) EXPECT_DOUBLE_EQ(histogram_purity_test(render_palette(m), PurityConfig{}).pure_fraction, 1.0);
  EXPECT_THROW(filter_and_snap({}, PurityConfig{}), ArgumentError);
}

TEST(Filter, NoiseBatchNearZeroAndMonotone) {
  Rng rng(5);
  std::vector<ImageChip> batch;
  for (int i = 0; i < 50; ++i) {
    ImageChip img = render_palette(random_mask(10, rng));
    // Perturb a varying share of pixels to mid-gray.
    const int k = rng.uniform_int(0, 100);
    for (std::size_t p = 0; p < img.plane(); ++p)
      if (rng.uniform_int(0, 99) < k)
        for (int c = 0; c < 3; ++c) img.data[c * img.plane() + p] = 0.0f;
    batch.push_back(img);
  }
  double last = -1.0;
  for (double f : {1.0, 0.95, 0.8, 0.5, 0.2, 0.0}) {
    const double rate = filter_and_snap(batch, PurityConfig{0.15, f}).acceptance_rate;
    EXPECT_GE(rate, last);
    last = rate;
  }
  EXPECT_DOUBLE_EQ(last, 1.0);
  std::vector<ImageChip> noise;
  for (int i = 0; i < 50; ++i) noise.push_back(noise_raster(16, rng));
  EXPECT_EQ(filter_and_snap(noise, PurityConfig{0.1, 0.9}).acceptance_rate, 0.0);
}

}  // namespace
}  // namespace synthaug::labelpost
