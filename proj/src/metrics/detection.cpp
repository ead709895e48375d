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

#include "synthaug/metrics/detection.hpp"

#include <algorithm>
#include <numeric>

namespace synthaug::metrics {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {

struct Ranked {
  std::size_t image;
  const Detection* det;
};

// Greedy match of one detection; marks the chosen ground truth. Returns
// whether it was a true positive.
bool match(const Detection& d, const std::vector<GroundTruthBox>& gts, std::vector<char>& used, double thresh) {
  double best = -1.0;
  std::size_t arg = gts.size();
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (used[g]) continue;
    const double v = iou(d.box, gts[g].box);
    if (v >= thresh && v > best) {
      best = v;
      arg = g;
    }
  }
  if (arg == gts.size()) return false;
  used[arg] = 1;
  return true;
}

}  // namespace

double average_precision(const std::vector<ImageResult>& images, double iou_thresh) {
  std::size_t total_gt = 0, total_det = 0;
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < images.size(); ++i) {
    total_gt += images[i].ground_truth.size();
    total_det += images[i].detections.size();
    for (const auto& d : images[i].detections) ranked.push_back({i, &d});
  }
  if (total_gt == 0) return total_det == 0 ? 1.0 : 0.0;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.det->confidence > b.det->confidence; });

  std::vector<std::vector<char>> used(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) used[i].assign(images[i].ground_truth.size(), 0);
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    const auto& r = ranked[k];
    tp += match(*r.det, images[r.image].ground_truth, used[r.image], iou_thresh);
    precision.push_back(double(tp) / double(k + 1));
    recall.push_back(double(tp) / double(total_gt));
  }
  // Monotone envelope from the right.
  for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double sum = 0.0;
  std::size_t k = 0;
  for (int t = 0; t <= 100; ++t) {
    const double r = t / 100.0;
    while (k < recall.size() && recall[k] < r) ++k;
    if (k < recall.size()) sum += precision[k];
  }
  return sum / 101.0;
}

double average_precision(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts, double iou_thresh) {
  return average_precision(std::vector<ImageResult>{{dets, gts}}, iou_thresh);
}

double average_recall(const std::vector<ImageResult>& images, double iou_thresh, int max_dets) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& img : images) {
    if (img.ground_truth.empty()) continue;
    std::vector<std::size_t> order(img.detections.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return img.detections[a].confidence > img.detections[b].confidence;
    });
    if (static_cast<int>(order.size()) > max_dets) order.resize(std::max(0, max_dets));
    std::vector<char> used(img.ground_truth.size(), 0);
    std::size_t tp = 0;
    for (std::size_t i : order) tp += match(img.detections[i], img.ground_truth, used, iou_thresh);
    sum += double(tp) / double(img.ground_truth.size());
    ++counted;
  }
  return counted == 0 ? 1.0 : sum / counted;
}

double average_recall(const std::vector<Detection>& dets, const std::vector<GroundTruthBox>& gts, double iou_thresh,
                      int max_dets) {
  return average_recall(std::vector<ImageResult>{{dets, gts}}, iou_thresh, max_dets);
}

}  // namespace synthaug::metrics
