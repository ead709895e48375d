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

#include <cmath>

#include "oracles/detection.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/dataset/dataset.hpp"
#include "synthaug/dataset/toy.hpp"
#include "synthaug/metrics/detection.hpp"
#include "synthaug/metrics/features.hpp"
#include "synthaug/metrics/fid.hpp"

namespace synthaug::metrics {
namespace {

GaussianStats stats_1d(double mu, double var) {
  GaussianStats s;
  s.mu = Eigen::VectorXd::Constant(1, mu);
  s.sigma = Eigen::MatrixXd::Constant(1, 1, var);
  return s;
}

Eigen::MatrixXd random_psd(int d, Rng& rng, int rank = -1) {
  Eigen::MatrixXd b(rank < 0 ? d : rank, d);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
  return b.transpose() * b;
}

GaussianStats random_stats(int d, Rng& rng) {
  GaussianStats s;
  s.mu = Eigen::VectorXd(d);
  for (int i = 0; i < d; ++i) s.mu[i] = rng.normal();
  s.sigma = random_psd(d, rng) / d;
  return s;
}

TEST(GaussianStats, HandExample) {
  Eigen::MatrixXd f(2, 2);
  f << 0, 0, 2, 2;
  auto s = gaussian_stats(f);
  EXPECT_DOUBLE_EQ(s.mu[0], 1.0);
  EXPECT_DOUBLE_EQ(s.mu[1], 1.0);
  EXPECT_TRUE(s.sigma.isApprox(Eigen::MatrixXd::Constant(2, 2, 2.0)));
  EXPECT_THROW(gaussian_stats(Eigen::MatrixXd(1, 3)), ArgumentError);
}

TEST(GaussianStats, IdenticalRowsAndPermutation) {
  Eigen::MatrixXd same = Eigen::MatrixXd::Constant(5, 3, 0.7);
  EXPECT_EQ(gaussian_stats(same).sigma.cwiseAbs().maxCoeff(), 0.0);
  Rng rng(1);
  Eigen::MatrixXd f(6, 3);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = rng.normal();
  Eigen::MatrixXd g = f;
  g.row(0).swap(g.row(5));
  g.row(1).swap(g.row(3));
  auto a = gaussian_stats(f), b = gaussian_stats(g);
  EXPECT_LT((a.mu - b.mu).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((a.sigma - b.sigma).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MatrixSqrt, SimpleCases) {
  EXPECT_TRUE(matrix_sqrt_psd(Eigen::MatrixXd::Identity(4, 4)).isApprox(Eigen::MatrixXd::Identity(4, 4)));
  Eigen::MatrixXd d = Eigen::Vector2d(4, 9).asDiagonal();
  Eigen::MatrixXd r = matrix_sqrt_psd(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-12);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-12);
  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 0, 1;
  EXPECT_THROW(matrix_sqrt_psd(bad), ArgumentError);
}

TEST(MatrixSqrt, ReconstructsRandomPsdUpTo64) {
  Rng rng(2);
  for (int d : {1, 2, 5, 16, 33, 64}) {
    Eigen::MatrixXd a = random_psd(d, rng);
    Eigen::MatrixXd s = matrix_sqrt_psd(a);
    EXPECT_LT((s * s - a).norm() / a.norm(), 1e-8) << "d=" << d;
  }
}

TEST(Fid, OneDimensionalExamples) {
  EXPECT_NEAR(fid(stats_1d(0, 1), stats_1d(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(fid(stats_1d(0, 4), stats_1d(0, 1)), 1.0, 1e-12);
  EXPECT_EQ(fid(stats_1d(3, 2), stats_1d(3, 2)), 0.0);
}

TEST(Fid, OneDimensionalClosedFormProperty) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const double mr = rng.uniform(-5, 5), ms = rng.uniform(-5, 5);
    const double sr = rng.uniform(0.01, 4), ss = rng.uniform(0.01, 4);
    const double expected = (mr - ms) * (mr - ms) + (sr - ss) * (sr - ss);
    EXPECT_NEAR(fid(stats_1d(mr, sr * sr), stats_1d(ms, ss * ss)), expected, 1e-8);
  }
}

TEST(Fid, DiagonalClosedForm) {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const int d = rng.uniform_int(2, 12);
    GaussianStats a, b;
    a.mu = b.mu = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd sa(d), sb(d);
    double expected = 0.0;
    for (int i = 0; i < d; ++i) {
      a.mu[i] = rng.normal();
      b.mu[i] = rng.normal();
      sa[i] = rng.uniform(0.1, 3);
      sb[i] = rng.uniform(0.1, 3);
      expected += std::pow(a.mu[i] - b.mu[i], 2) + std::pow(sa[i] - sb[i], 2);
    }
    a.sigma = sa.cwiseAbs2().asDiagonal();
    b.sigma = sb.cwiseAbs2().asDiagonal();
    EXPECT_NEAR(fid(a, b), expected, 1e-8);
  }
}

TEST(Fid, SelfZeroSymmetricNonNegative) {
  Rng rng(5);
  for (int d : {3, 10, 32, 64}) {
    GaussianStats a = random_stats(d, rng), b = random_stats(d, rng);
    EXPECT_NEAR(fid(a, a), 0.0, 1e-8);
    EXPECT_NEAR(fid(a, b), fid(b, a), 1e-8);
    EXPECT_GE(fid(a, b), 0.0);
  }
  EXPECT_THROW(fid(stats_1d(0, 1), random_stats(2, rng)), ArgumentError);
}

std::vector<data::ImageChip> toy_chips(std::uint64_t seed, int count) {
  std::vector<data::ImageChip> out;
  for (std::uint64_t s = seed; out.size() < std::size_t(count); ++s) {
    auto scene = data::toy_scene_generate(s, 64);
    for (auto& c : data::chip(scene.tile, 32, 16)) {
      if (out.size() < std::size_t(count)) out.push_back(std::move(c.image));
    }
  }
  return out;
}

TEST(Extractor, DeterministicWithDeclaredDim) {
  RandomConvExtractor ex(7, 64);
  auto imgs = toy_chips(1, 10);
  Eigen::MatrixXd a = extract_features(imgs, ex), b = extract_features(imgs, ex);
  EXPECT_EQ(a.cols(), 64);
  EXPECT_EQ(a.rows(), 10);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(make_extractor(ex.id())->id(), ex.id());
  EXPECT_THROW(make_extractor("inception"), ConfigError);
}

TEST(Extractor, RealVsRealBeatsRealVsNoise) {
  RandomConvExtractor ex;
  auto real_a = toy_chips(100, 120);
  auto real_b = toy_chips(500, 120);
  Rng rng(6);
  std::vector<data::ImageChip> noise;
  for (int i = 0; i < 120; ++i) {
    data::ImageChip img(32, 32);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform(-1, 1));
    noise.push_back(img);
  }
  auto sa = gaussian_stats(ex.extract(real_a));
  const double near = fid(sa, gaussian_stats(ex.extract(real_b)));
  const double far = fid(sa, gaussian_stats(ex.extract(noise)));
  EXPECT_LT(near, far);
}

TEST(Iou, Basics) {
  Box a{0, 0, 2, 2}, b{1, 1, 3, 3};
  EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, Box{5, 5, 6, 6}), 0.0);
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    auto rb = [&] {
      const int x0 = rng.uniform_int(0, 10), y0 = rng.uniform_int(0, 10);
      return Box{double(x0), double(y0), double(x0 + rng.uniform_int(1, 6)), double(y0 + rng.uniform_int(1, 6))};
    };
    Box p = rb(), q = rb();
    const double v = iou(p, q);
    EXPECT_NEAR(v, oracle::pixel_iou(p, q), 1e-12);
    EXPECT_EQ(v, iou(q, p));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

Detection det(Box b, double c) { return Detection{b, 4, c}; }
GroundTruthBox gt(Box b) { return GroundTruthBox{b, 4}; }

TEST(AveragePrecision, HandExamples) {
  // IoU 0.8: 8x10 box inside a 10x10 box.
  EXPECT_DOUBLE_EQ(average_precision({det({0, 0, 10, 8}, 0.9)}, {gt({0, 0, 10, 10})}, 0.75), 1.0);
  // IoU 0.5.
  EXPECT_DOUBLE_EQ(average_precision({det({0, 0, 10, 5}, 0.9)}, {gt({0, 0, 10, 10})}, 0.75), 0.0);
  EXPECT_DOUBLE_EQ(average_precision({}, {}, 0.75), 1.0);
  EXPECT_DOUBLE_EQ(average_precision({det({0, 0, 1, 1}, 0.5)}, {}, 0.75), 0.0);
  // Two GTs, ranked hit / miss / hit: precision envelope 1 up to recall 0.5
  // and 2/3 up to recall 1.
  std::vector<GroundTruthBox> gts{gt({0, 0, 4, 4}), gt({10, 10, 14, 14})};
  std::vector<Detection> dets{det({0, 0, 4, 4}, 0.9), det({20, 20, 24, 24}, 0.8), det({10, 10, 14, 14}, 0.7)};
  const double expected = (51 * 1.0 + 50 * (2.0 / 3.0)) / 101.0;
  EXPECT_NEAR(average_precision(dets, gts, 0.75), expected, 1e-12);
  EXPECT_NEAR(average_precision(dets, gts, 0.75), oracle::brute_force_ap({{dets, gts}}, 0.75), 1e-12);
}

oracle::Scene random_scene(Rng& rng) {
  oracle::Scene s;
  auto rb = [&] {
    const int x0 = rng.uniform_int(0, 12), y0 = rng.uniform_int(0, 12);
    return Box{double(x0), double(y0), double(x0 + rng.uniform_int(2, 5)), double(y0 + rng.uniform_int(2, 5))};
  };
  const int n_gt = rng.uniform_int(0, 5), n_det = rng.uniform_int(0, 8);
  for (int i = 0; i < n_gt; ++i) s.gts.push_back(gt(rb()));
  for (int i = 0; i < n_det; ++i) {
    Box b = (!s.gts.empty() && rng.uniform() < 0.6) ? s.gts[rng.uniform_int(0, n_gt - 1)].box : rb();
    if (rng.uniform() < 0.3) b.x1 += 1;
    // Coarse confidences so ties occur.
    s.dets.push_back(det(b, rng.uniform_int(1, 5) / 5.0));
  }
  return s;
}

TEST(AveragePrecision, MatchesBruteForceOn200Scenes) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    oracle::Scene s = random_scene(rng);
    for (double thr : {0.5, 0.75}) {
      ASSERT_NEAR(average_precision(s.dets, s.gts, thr), oracle::brute_force_ap({s}, thr), 1e-9) << "scene " << t;
    }
  }
}

TEST(AveragePrecision, PooledMatchesBruteForce) {
  Rng rng(9);
  for (int t = 0; t < 50; ++t) {
    std::vector<oracle::Scene> scenes;
    std::vector<ImageResult> images;
    for (int i = 0; i < 4; ++i) {
      scenes.push_back(random_scene(rng));
      images.push_back({scenes.back().dets, scenes.back().gts});
    }
    ASSERT_NEAR(average_precision(images, 0.75), oracle::brute_force_ap(scenes, 0.75), 1e-9);
  }
}

TEST(AveragePrecision, DemotingTruePositiveNeverHelps) {
  std::vector<GroundTruthBox> gts{gt({0, 0, 4, 4}), gt({10, 10, 14, 14})};
  std::vector<Detection> dets{det({0, 0, 4, 4}, 0.9), det({30, 30, 34, 34}, 0.6), det({10, 10, 14, 14}, 0.8)};
  const double before = average_precision(dets, gts, 0.75);
  dets[2].confidence = 0.5;
  EXPECT_LE(average_precision(dets, gts, 0.75), before);
}

TEST(AverageRecall, HandExamples) {
  std::vector<GroundTruthBox> gts{gt({0, 0, 4, 4}), gt({10, 10, 14, 14}), gt({20, 0, 24, 4})};
  EXPECT_DOUBLE_EQ(average_recall({}, gts, 0.75), 0.0);
  std::vector<Detection> all{det({0, 0, 4, 4}, 0.9), det({10, 10, 14, 14}, 0.8), det({20, 0, 24, 4}, 0.7)};
  EXPECT_DOUBLE_EQ(average_recall(all, gts, 0.75), 1.0);
  EXPECT_DOUBLE_EQ(average_recall(all, gts, 0.75, 2), 2.0 / 3.0);
}

}  // namespace
}  // namespace synthaug::metrics
