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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "../oracles/detection.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/dataset/dataset.hpp"
#include "synthaug/dataset/toy.hpp"
#include "synthaug/detector/detector.hpp"
#include "synthaug/metrics/detection.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/grad_check.hpp"
#include "synthaug/numerics/ops.hpp"

namespace {

using namespace synthaug;
using namespace synthaug::detector;
using nn::Tensor;

DetectorConfig tiny_config(int side = 32, int stride = 4) {
  DetectorConfig c;
  c.input_side = side;
  c.grid_stride = stride;
  c.anchor_sizes = {3, 6, 12};
  c.channels = {4, 6, 6, 8};
  c.seed = 11;
  return c;
}

Box random_box(Rng& rng, double side) {
  const double x0 = rng.uniform(0, side - 2), y0 = rng.uniform(0, side - 2);
  return {x0, y0, x0 + rng.uniform(0.5, side - x0), y0 + rng.uniform(0.5, side - y0)};
}

std::vector<LabeledChip> toy_chips(int n, std::uint64_t seed) {
  const auto scene = data::toy_scene_generate(seed, 96);
  const auto crops = data::random_vehicle_crops(scene.tile, 32, 2, n, seed);
  std::vector<LabeledChip> out;
  for (std::size_t i = 0; i < crops.size(); ++i) {
    out.push_back(labeled_chip("c" + std::to_string(i), crops[i].image, crops[i].mask));
  }
  return out;
}

TEST(DetectorBuild, GridAndHeadShapes) {
  DetectorConfig c = tiny_config(64, 8);
  EXPECT_EQ(c.grid(), 8);
  Detector net = build_detector(c, c.anchor_sizes);
  Rng rng(1);
  Tensor y = net.forward(Tensor::uniform({2, 3, 64, 64}, rng, -1, 1));
  EXPECT_EQ(y.shape(), (std::vector<int>{2, 3 * 5, 8, 8}));
  EXPECT_EQ(net.anchors().size(), 3u * 64u);
}

TEST(DetectorBuild, IndivisibleStrideIsConfigError) {
  DetectorConfig c = tiny_config(30, 4);
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(build_detector(c, c.anchor_sizes), ConfigError);
  c = tiny_config(32, 3);
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(DetectorBuild, InitIsSeedDeterministic) {
  const DetectorConfig c = tiny_config();
  Detector a = build_detector(c, c.anchor_sizes), b = build_detector(c, c.anchor_sizes);
  EXPECT_EQ(nn::serialize_checkpoint(make_detector_checkpoint(a)), nn::serialize_checkpoint(make_detector_checkpoint(b)));
  DetectorConfig other = c;
  other.seed = 12;
  Detector d = build_detector(other, c.anchor_sizes);
  EXPECT_NE(a.parameters()[0].tensor.to_vector(), d.parameters()[0].tensor.to_vector());
}

TEST(DetectorTargets, AnchorAnchoredIndexing) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  const int g = c.grid();
  const Box& b = anchors[(1 * g + 2) * g + 5];  // size 6, row 2, column 5
  EXPECT_DOUBLE_EQ(b.width(), 6.0);
  EXPECT_DOUBLE_EQ(0.5 * (b.x0 + b.x1), 5.5 * c.grid_stride);
  EXPECT_DOUBLE_EQ(0.5 * (b.y0 + b.y1), 2.5 * c.grid_stride);
}

TEST(DetectorTargets, GroundTruthEqualToAnchorIsPositiveWithZeroOffsets) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  const std::size_t idx = 100;
  const Targets t = assign_targets({{GroundTruthBox{anchors[idx]}}}, anchors);
  EXPECT_EQ(t.objectness[idx], 1.0f);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(t.offsets[idx * 4 + k], 0.0, 1e-7);
}

TEST(DetectorTargets, EmptyGroundTruthGivesAllNegatives) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  const Targets t = assign_targets({{}, {}}, anchors);
  EXPECT_EQ(t.positives, 0);
  EXPECT_EQ(t.objectness.size(), 2 * anchors.size());
  EXPECT_TRUE(std::all_of(t.objectness.begin(), t.objectness.end(), [](float v) { return v == 0.0f; }));
  EXPECT_TRUE(std::all_of(t.offsets.begin(), t.offsets.end(), [](float v) { return v == 0.0f; }));
}

TEST(DetectorTargets, EveryGroundTruthOwnsAPositive) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    // One vehicle-sized box per quadrant, so no two boxes share a best anchor.
    std::vector<GroundTruthBox> gts;
    for (int i = 0; i < 4; ++i) {
      const double x0 = 16 * (i % 2) + rng.uniform(0, 8), y0 = 16 * (i / 2) + rng.uniform(0, 8);
      gts.push_back({{x0, y0, x0 + rng.uniform(2, 8), y0 + rng.uniform(2, 8)}});
    }
    const Targets t = assign_targets({gts}, anchors);
    for (const auto& g : gts) {
      bool owned = false;
      for (std::size_t a = 0; a < anchors.size(); ++a) {
        if (t.objectness[a] == 1.0f) {
          const std::array<double, 4> off{t.offsets[a * 4], t.offsets[a * 4 + 1], t.offsets[a * 4 + 2], t.offsets[a * 4 + 3]};
          const Box d = decode_box(off, anchors[a]);
          owned = owned || std::abs(d.x0 - g.box.x0) + std::abs(d.y1 - g.box.y1) < 1e-4;
        }
      }
      EXPECT_TRUE(owned);
    }
  }
}

TEST(DetectorTargets, EncodeDecodeRoundTrip) {
  Rng rng(9);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const Box b = random_box(rng, 64), a = random_box(rng, 64);
    const Box r = decode_box(encode_box(b, a), a);
    worst = std::max({worst, std::abs(r.x0 - b.x0), std::abs(r.y0 - b.y0), std::abs(r.x1 - b.x1), std::abs(r.y1 - b.y1)});
  }
  EXPECT_LT(worst, 1e-6);
}

Tensor perfect_predictions(const Targets& t, int a, int g) {
  const std::size_t cells = std::size_t(g) * g;
  std::vector<double> v(std::size_t(t.batch) * a * 5 * cells, -40.0);
  for (int n = 0; n < t.batch; ++n) {
    for (int k = 0; k < a; ++k) {
      for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t anchor = (std::size_t(n) * a + k) * cells + c;
        const auto at = [&](int ch) -> double& { return v[((std::size_t(n) * a + k) * 5 + ch) * cells + c]; };
        at(0) = t.objectness[anchor] > 0.5f ? 40.0 : -40.0;
        for (int j = 0; j < 4; ++j) at(1 + j) = t.offsets[anchor * 4 + j];
      }
    }
  }
  return Tensor::from_values({t.batch, a * 5, g, g}, v, nn::Dtype::f64);
}

TEST(DetectorLoss, PerfectPredictionsGiveZeroLoss) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  Rng rng(3);
  std::vector<std::vector<GroundTruthBox>> gts(2);
  for (auto& g : gts) {
    for (int i = 0; i < 3; ++i) g.push_back({random_box(rng, 32)});
  }
  const Targets t = assign_targets(gts, anchors);
  const LossParts l = detector_loss(perfect_predictions(t, 3, c.grid()), t);
  EXPECT_GT(l.positives, 0);
  EXPECT_LT(l.total.item(), 1e-9);
  EXPECT_LT(l.regression, 1e-9);
}

TEST(DetectorLoss, ZeroPositivesGiveZeroRegression) {
  const DetectorConfig c = tiny_config();
  const Targets t = assign_targets({{}}, make_anchors(c));
  Rng rng(4);
  const LossParts l = detector_loss(Tensor::randn({1, 15, c.grid(), c.grid()}, rng, 1.0, nn::Dtype::f64), t);
  EXPECT_EQ(l.regression, 0.0);
  EXPECT_GT(l.classification, 0.0);
}

TEST(DetectorLoss, HardNegativesAreCappedAtRatio) {
  const DetectorConfig c = tiny_config();
  const auto anchors = make_anchors(c);
  const Targets t = assign_targets({{GroundTruthBox{anchors[10]}}}, anchors);
  ASSERT_EQ(t.positives, 1);
  // Every negative scores logit 0 (loss log 2); the positive is perfect.
  std::vector<double> v(15 * c.grid() * c.grid(), 0.0);
  Tensor p = perfect_predictions(t, 3, c.grid());
  auto pv = p.to_vector();
  for (std::size_t i = 0; i < pv.size(); ++i) v[i] = pv[i] == -40.0 ? 0.0 : pv[i];
  const LossParts l = detector_loss(Tensor::from_values(p.shape(), v, nn::Dtype::f64), t, 3);
  EXPECT_NEAR(l.classification, 3 * std::log(2.0), 1e-9);
}

TEST(DetectorLoss, MismatchedShapesAreRejected) {
  const DetectorConfig c = tiny_config();
  const Targets t = assign_targets({{}}, make_anchors(c));
  EXPECT_THROW(detector_loss(Tensor::zeros({1, 10, c.grid(), c.grid()}), t), DimensionError);
}

TEST(DetectorLoss, FullLossMatchesFiniteDifferences) {
  DetectorConfig c = tiny_config(16, 4);
  c.channels = {2, 3, 3, 4};
  c.anchor_sizes = {4, 8};
  c.dtype = nn::Dtype::f64;
  Detector net = build_detector(c, c.anchor_sizes);
  Rng rng(6);
  Tensor x = Tensor::uniform({2, 3, 16, 16}, rng, -1, 1, nn::Dtype::f64);
  const Targets t = assign_targets({{{Box{2, 3, 7, 6}}}, {{Box{9, 8, 13, 15}}, {Box{1, 1, 5, 5}}}}, net.anchors());
  const auto loss = [&]() { return detector_loss(net.forward(x), t).total; };
  const auto report = nn::grad_check(loss, net.parameters(), {1e-5, 1e-4, 1e-6});
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

// Integer corners so the pixel-counting oracle IoU is exact.
std::vector<Detection> random_detections(Rng& rng, int n) {
  std::vector<Detection> d;
  for (int i = 0; i < n; ++i) {
    // Quantized confidences force ties.
    const double x0 = rng.uniform_int(0, 30), y0 = rng.uniform_int(0, 30);
    const Box b{x0, y0, x0 + rng.uniform_int(1, 10), y0 + rng.uniform_int(1, 10)};
    d.push_back({b, kVehicleClass, rng.uniform_int(0, 9) / 10.0});
  }
  return d;
}

TEST(DetectorNms, MatchesBruteForceOracle) {
  Rng rng(21);
  for (int set = 0; set < 100; ++set) {
    const auto dets = random_detections(rng, 50);
    const double thresh = set % 2 ? 0.5 : 0.3;
    const auto got = nms(dets, thresh);
    const auto want = oracle::brute_force_nms(dets, thresh);
    ASSERT_EQ(got.size(), want.size()) << "set " << set;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].box.x0, want[i].box.x0);
      EXPECT_EQ(got[i].box.y1, want[i].box.y1);
      EXPECT_EQ(got[i].confidence, want[i].confidence);
    }
  }
}

TEST(DetectorNms, OutputIsSubsetWithSmallPairwiseOverlap) {
  Rng rng(22);
  for (int set = 0; set < 20; ++set) {
    const auto dets = random_detections(rng, 50);
    const auto kept = nms(dets, 0.4);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      EXPECT_TRUE(std::any_of(dets.begin(), dets.end(), [&](const Detection& d) {
        return d.box.x0 == kept[i].box.x0 && d.box.y0 == kept[i].box.y0 && d.confidence == kept[i].confidence;
      }));
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LT(metrics::iou(kept[i].box, kept[j].box), 0.4);
    }
  }
}

TEST(DetectorNms, IdenticalBoxesKeepHighestConfidence) {
  const Box b{1, 1, 5, 5};
  const auto kept = nms({{b, kVehicleClass, 0.8}, {b, kVehicleClass, 0.9}}, 0.5);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].confidence, 0.9);
}

TEST(DetectorNms, DisjointBoxesAreAllKept) {
  const auto kept = nms({{{0, 0, 2, 2}, kVehicleClass, 0.3}, {{5, 5, 7, 7}, kVehicleClass, 0.9},
                         {{10, 0, 12, 2}, kVehicleClass, 0.5}},
                        0.5);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].confidence, 0.9);
  EXPECT_EQ(kept[2].confidence, 0.3);
}

TEST(DetectorInference, ScoreThresholdOneGivesNothing) {
  DetectorConfig c = tiny_config();
  c.score_thresh = 1.0;
  Detector net = build_detector(c, c.anchor_sizes);
  const auto chips = toy_chips(2, 3);
  for (const auto& d : detect(net, std::vector{chips[0].image, chips[1].image})) EXPECT_TRUE(d.empty());
}

TEST(DetectorInference, DetectionsAreSortedAndClipped) {
  DetectorConfig c = tiny_config();
  c.score_thresh = 0.0;
  c.nms_iou = 0.9;
  Detector net = build_detector(c, {3, 6, 40});
  // Large offsets push boxes off the chip.
  for (auto& p : net.parameters()) {
    if (p.name.find("head.bias") != std::string::npos) {
      for (std::int64_t i = 0; i < p.tensor.numel(); ++i) p.tensor.set(i, i % 5 == 0 ? 0.0 : 1.5);
    }
  }
  const auto chips = toy_chips(1, 4);
  const auto dets = detect(net, chips[0].image);
  ASSERT_FALSE(dets.empty());
  EXPECT_LE(dets.size(), std::size_t(c.max_detections));
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (i) {
      EXPECT_GE(dets[i - 1].confidence, dets[i].confidence);
    }
    EXPECT_GE(dets[i].box.x0, 0.0);
    EXPECT_GE(dets[i].box.y0, 0.0);
    EXPECT_LE(dets[i].box.x1, 32.0);
    EXPECT_LE(dets[i].box.y1, 32.0);
  }
}

TEST(DetectorTraining, SyntheticSelectionCounts) {
  EXPECT_EQ(select_synthetic(400, 100, 3.0, 1).size(), 300u);
  EXPECT_EQ(select_synthetic(400, 100, 0.5, 1).size(), 50u);
  EXPECT_TRUE(select_synthetic(400, 100, 0.0, 1).empty());
  EXPECT_EQ(select_synthetic(10, 3, 2.5, 1).size(), 8u);  // round(7.5)
  EXPECT_EQ(select_synthetic(400, 100, 1.5, 9), select_synthetic(400, 100, 1.5, 9));
  EXPECT_NE(select_synthetic(400, 100, 1.5, 9), select_synthetic(400, 100, 1.5, 10));
  const auto s = select_synthetic(400, 100, 2.0, 3);
  EXPECT_EQ(std::set<int>(s.begin(), s.end()).size(), s.size());
  EXPECT_THROW(select_synthetic(10, 100, 1.0, 1), DataError);
}

TEST(DetectorTraining, EmptyRealSetIsDataError) {
  TrainingMix mix;
  mix.synthetic = toy_chips(2, 1);
  EXPECT_THROW(train_detector(mix, tiny_config()), DataError);
}

TEST(DetectorTraining, RatioZeroNeverUsesSynthetic) {
  TrainingMix mix{toy_chips(3, 1), toy_chips(3, 2), 0.0};
  DetectorConfig c = tiny_config();
  c.steps = 2;
  c.batch_size = 2;
  EXPECT_TRUE(train_detector(mix, c).synthetic_used.empty());
  mix.synthetic_ratio = 1.0;
  EXPECT_EQ(train_detector(mix, c).synthetic_used.size(), 3u);
}

TEST(DetectorTraining, SameSeedGivesIdenticalCheckpointAndLog) {
  TrainingMix mix{toy_chips(4, 1), toy_chips(4, 2), 0.5};
  DetectorConfig c = tiny_config();
  c.steps = 5;
  c.batch_size = 4;
  c.anchor_sizes.clear();
  const auto a = train_detector(mix, c), b = train_detector(mix, c);
  EXPECT_EQ(nn::serialize_checkpoint(make_detector_checkpoint(a.net)),
            nn::serialize_checkpoint(make_detector_checkpoint(b.net)));
  ASSERT_EQ(a.log.size(), 5u);
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].loss, b.log[i].loss);
  EXPECT_EQ(a.net.anchor_sizes().size(), 3u);
}

TEST(DetectorTraining, CheckpointRoundTripPreservesDetections) {
  TrainingMix mix{toy_chips(3, 1), {}, 0.0};
  DetectorConfig c = tiny_config();
  c.steps = 3;
  c.batch_size = 2;
  const auto trained = train_detector(mix, c);
  const auto dir = std::filesystem::temp_directory_path() / "synthaug_test_detector";
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(dir / "det.ckpt", make_detector_checkpoint(trained.net));
  const Detector back = load_detector(nn::load_checkpoint(dir / "det.ckpt"));
  EXPECT_EQ(back.anchor_sizes(), trained.net.anchor_sizes());
  const auto d1 = detect(trained.net, mix.real[0].image), d2 = detect(back, mix.real[0].image);
  ASSERT_EQ(d1.size(), d2.size());
  for (std::size_t i = 0; i < d1.size(); ++i) EXPECT_EQ(d1[i].confidence, d2[i].confidence);

  write_detections_csv(dir / "dets.csv", mix.real, detect(back, std::vector{mix.real[0].image, mix.real[1].image,
                                                                            mix.real[2].image}),
                       "# tool=test");
  std::ifstream in(dir / "dets.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "# tool=test");
  std::getline(in, line);
  EXPECT_EQ(line, "chip_id,x0,y0,x1,y1,confidence");
  std::filesystem::remove_all(dir);
}

TEST(DetectorTraining, RejectsWrongChipSize) {
  auto chips = toy_chips(2, 1);
  DetectorConfig c = tiny_config(64, 4);
  EXPECT_THROW(train_detector({chips, {}, 0.0}, c), DimensionError);
}

TEST(DetectorTraining, OverfitsTenToyChips) {
  const auto chips = toy_chips(10, 5);
  DetectorConfig c;
  c.steps = 500;
  c.seed = 3;
  const auto trained = train_detector({chips, {}, 0.0}, c);
  double first = 0, last = 0;
  for (int i = 0; i < 50; ++i) first += trained.log[i].loss, last += trained.log[trained.log.size() - 1 - i].loss;
  EXPECT_LT(last, first);
  const double ap = metrics::average_precision(evaluate(trained.net, chips), 0.5);
  RecordProperty("ap50", std::to_string(ap));
  EXPECT_GE(ap, 0.9);
}

}  // namespace
