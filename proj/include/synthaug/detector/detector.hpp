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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "synthaug/common/box.hpp"
#include "synthaug/dataset/raster.hpp"
#include "synthaug/metrics/detection.hpp"
#include "synthaug/numerics/adam.hpp"
#include "synthaug/numerics/checkpoint.hpp"
#include "synthaug/numerics/layers.hpp"

namespace synthaug::detector {

using nn::Tensor;

struct DetectorConfig {
  int input_side = 32;
  int grid_stride = 4;  // power of two, at most 16
  // Square anchor sides in pixels. Empty: {0.5, 1, 2} x the median ground
  // truth side of the training set.
  std::vector<double> anchor_sizes;
  double score_thresh = 0.05;
  double nms_iou = 0.5;
  int max_detections = 100;
  std::int64_t steps = 2000;
  int batch_size = 16;
  std::vector<int> channels{16, 32, 32, 64};
  bool augment_d4 = true;
  int neg_pos_ratio = 3;
  nn::AdamConfig adam = nn::AdamConfig::detector();
  std::uint64_t seed = 0;
  nn::Dtype dtype = nn::Dtype::f32;

  void validate() const;
  int grid() const { return input_side / grid_stride; }
};

// One training or evaluation sample: a 3 x S x S chip and its vehicle boxes.
struct LabeledChip {
  std::string id;
  data::ImageChip image;
  std::vector<GroundTruthBox> boxes;
};
// Boxes taken from the mask's vehicle components.
LabeledChip labeled_chip(std::string id, const data::ImageChip& image, const data::LabelMask& mask);

// Median of sqrt(w * h) over all boxes; raises DataError when there are none.
double median_box_side(const std::vector<LabeledChip>& chips);
std::vector<double> default_anchor_sizes(double base_side);

// Anchors in output order: index ((a * G) + gy) * G + gx, centred on grid cells.
std::vector<Box> make_anchors(const DetectorConfig& cfg);

constexpr double kCenterVariance = 0.1;
constexpr double kSizeVariance = 0.2;

// (dcx / (0.1 w_a), dcy / (0.1 h_a), log(w / w_a) / 0.2, log(h / h_a) / 0.2).
std::array<double, 4> encode_box(const Box& box, const Box& anchor);
Box decode_box(const std::array<double, 4>& offsets, const Box& anchor);

struct Targets {
  int batch = 0;
  int anchors = 0;  // per image
  std::vector<float> objectness;  // (N, A*G*G), 1 for positives
  std::vector<float> offsets;     // (N, A*G*G, 4), zero for negatives
  std::int64_t positives = 0;
};
// An anchor is positive when its IoU with some box is >= 0.5, and every box
// additionally claims its best anchor.
Targets assign_targets(const std::vector<std::vector<GroundTruthBox>>& boxes, const std::vector<Box>& anchors,
                       double pos_iou = 0.5);

class Detector {
 public:
  Detector(const DetectorConfig& cfg, std::vector<double> anchor_sizes);
  // (N, 3, S, S) to (N, A*5, G, G); channel a*5 is the objectness logit of
  // anchor size a, channels a*5+1..a*5+4 its box offsets.
  Tensor forward(const Tensor& x) const;
  nn::ParameterList parameters() const;
  const DetectorConfig& config() const { return cfg_; }
  const std::vector<double>& anchor_sizes() const { return anchor_sizes_; }
  const std::vector<Box>& anchors() const { return anchors_; }

 private:
  DetectorConfig cfg_;
  std::vector<double> anchor_sizes_;
  std::vector<Box> anchors_;
  std::vector<nn::Conv2d> stages_;
  nn::Conv2d head_;
};

Detector build_detector(const DetectorConfig& cfg, std::vector<double> anchor_sizes);

struct LossParts {
  Tensor total;  // (classification + regression) / max(positives, 1)
  double classification = 0;
  double regression = 0;
  std::int64_t positives = 0;
};
// BCE on objectness over all positives and the neg_pos_ratio * max(P, 1)
// highest-loss negatives of the batch, plus smooth-L1 on positive offsets.
LossParts detector_loss(const Tensor& preds, const Targets& targets, int neg_pos_ratio = 3);

struct TrainingMix {
  std::vector<LabeledChip> real;
  std::vector<LabeledChip> synthetic;  // the pool to draw from
  double synthetic_ratio = 0.0;
};
// round(ratio * n_real) distinct pool indices from a seeded shuffle. Raises
// DataError when the pool is too small.
std::vector<int> select_synthetic(int pool_size, int n_real, double ratio, std::uint64_t seed);

struct TrainLogRow {
  std::int64_t step;
  double loss;
  double classification;
  double regression;
  std::int64_t positives;
};

struct TrainedDetector {
  Detector net;
  std::vector<TrainLogRow> log;
  std::vector<int> synthetic_used;
};
// Anchor sizes come from the config or, if empty, the real chips' boxes.
TrainedDetector train_detector(const TrainingMix& mix, const DetectorConfig& cfg,
                               const std::function<void(const TrainLogRow&)>& on_step = {});
void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log, const std::string& header);

// Greedy suppression in descending confidence (ties keep input order).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh);
// Decoded, clipped, thresholded and suppressed; sorted by confidence.
std::vector<Detection> detect(const Detector& net, const data::ImageChip& chip);
std::vector<std::vector<Detection>> detect(const Detector& net, const std::vector<data::ImageChip>& chips);

std::vector<metrics::ImageResult> evaluate(const Detector& net, const std::vector<LabeledChip>& chips);
void write_detections_csv(const std::filesystem::path& path, const std::vector<LabeledChip>& chips,
                          const std::vector<std::vector<Detection>>& dets, const std::string& header);

nn::Checkpoint make_detector_checkpoint(const Detector& net);
Detector load_detector(const nn::Checkpoint& ckpt);

}  // namespace synthaug::detector
