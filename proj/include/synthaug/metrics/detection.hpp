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

#include <vector>

#include "synthaug/common/box.hpp"

namespace synthaug::metrics {

double iou(const Box& a, const Box& b);

// Detections and ground truth of one image.
struct ImageResult {
  std::vector<Detection> detections;
  std::vector<GroundTruthBox> ground_truth;
};

// COCO-style single-threshold AP with 101-point interpolation, pooled over
// images. Detections are ranked by confidence with a stable sort (image
// order, then input order, breaks ties); each is greedily matched to the
// unmatched ground-truth box of its own image with the highest IoU >=
// iou_thresh. No ground truth at all gives 1.0 with no detections, else 0.0.
double average_precision(const std::vector<ImageResult>& images, double iou_thresh);
double average_precision(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts, double iou_thresh);

// Recall from each image's top max_dets detections, averaged over images
// that have ground truth. Returns 1.0 when no image has ground truth.
double average_recall(const std::vector<ImageResult>& images, double iou_thresh, int max_dets = 100);
double average_recall(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts, double iou_thresh,
                      int max_dets = 100);

}  // namespace synthaug::metrics
