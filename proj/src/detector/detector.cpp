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

#include "synthaug/detector/detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/dataset/dataset.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::detector {

namespace {

constexpr double kSlope = 0.1;
constexpr int kChunk = 64;
// Objectness bias at init: sigmoid(-4.6) ~ 0.01.
constexpr double kPriorLogit = -4.6;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2i(int v) {
  int k = 0;
  while ((1 << k) < v) ++k;
  return k;
}

}  // namespace

void DetectorConfig::validate() const {
  if (!is_pow2(grid_stride) || grid_stride > 16) throw ConfigError("grid_stride must be a power of two <= 16");
  if (input_side <= 0 || input_side % grid_stride != 0) {
    throw ConfigError("input_side " + std::to_string(input_side) + " is not divisible by grid_stride " +
                      std::to_string(grid_stride));
  }
  if (channels.size() != 4) throw ConfigError("detector needs exactly 4 backbone channel counts");
  for (int c : channels) {
    if (c < 1) throw ConfigError("detector channel counts must be >= 1");
  }
  for (double a : anchor_sizes) {
    if (!(a > 0)) throw ConfigError("anchor sizes must be > 0");
  }
  if (!(score_thresh >= 0 && score_thresh <= 1)) throw ConfigError("score_thresh must lie in [0,1]");
  if (!(nms_iou > 0 && nms_iou <= 1)) throw ConfigError("nms_iou must lie in (0,1]");
  if (steps < 1 || batch_size < 1 || max_detections < 1) throw ConfigError("steps, batch_size and max_detections must be >= 1");
  if (neg_pos_ratio < 0) throw ConfigError("neg_pos_ratio must be >= 0");
}

LabeledChip labeled_chip(std::string id, const data::ImageChip& image, const data::LabelMask& mask) {
  if (image.height != mask.height || image.width != mask.width) throw DimensionError("chip image and mask differ in size");
  return {std::move(id), image, data::extract_bboxes(mask)};
}

double median_box_side(const std::vector<LabeledChip>& chips) {
  std::vector<double> sides;
  for (const auto& c : chips) {
    for (const auto& b : c.boxes) sides.push_back(std::sqrt(b.box.area()));
  }
  if (sides.empty()) throw DataError("no ground-truth boxes to size anchors from");
  std::sort(sides.begin(), sides.end());
  const std::size_t n = sides.size();
  return n % 2 ? sides[n / 2] : 0.5 * (sides[n / 2 - 1] + sides[n / 2]);
}

std::vector<double> default_anchor_sizes(double base_side) { return {0.5 * base_side, base_side, 2.0 * base_side}; }

std::vector<Box> make_anchors(const DetectorConfig& cfg) {
  const int g = cfg.grid();
  std::vector<Box> out;
  for (double a : cfg.anchor_sizes) {
    for (int gy = 0; gy < g; ++gy) {
      for (int gx = 0; gx < g; ++gx) {
        const double cx = (gx + 0.5) * cfg.grid_stride, cy = (gy + 0.5) * cfg.grid_stride;
        out.push_back({cx - a / 2, cy - a / 2, cx + a / 2, cy + a / 2});
      }
    }
  }
  return out;
}

std::array<double, 4> encode_box(const Box& b, const Box& a) {
  const double aw = a.width(), ah = a.height();
  return {((b.x0 + b.x1) - (a.x0 + a.x1)) / (2 * aw * kCenterVariance),
          ((b.y0 + b.y1) - (a.y0 + a.y1)) / (2 * ah * kCenterVariance), std::log(b.width() / aw) / kSizeVariance,
          std::log(b.height() / ah) / kSizeVariance};
}

Box decode_box(const std::array<double, 4>& t, const Box& a) {
  const double aw = a.width(), ah = a.height();
  const double cx = 0.5 * (a.x0 + a.x1) + t[0] * kCenterVariance * aw;
  const double cy = 0.5 * (a.y0 + a.y1) + t[1] * kCenterVariance * ah;
  const double w = aw * std::exp(t[2] * kSizeVariance), h = ah * std::exp(t[3] * kSizeVariance);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

Targets assign_targets(const std::vector<std::vector<GroundTruthBox>>& boxes, const std::vector<Box>& anchors,
                       double pos_iou) {
  Targets t;
  t.batch = static_cast<int>(boxes.size());
  t.anchors = static_cast<int>(anchors.size());
  const std::size_t na = anchors.size();
  t.objectness.assign(boxes.size() * na, 0.0f);
  t.offsets.assign(boxes.size() * na * 4, 0.0f);
  for (std::size_t n = 0; n < boxes.size(); ++n) {
    const auto& gts = boxes[n];
    std::vector<int> owner(na, -1);
    std::vector<double> best(na, 0.0);
    std::vector<int> argmax(gts.size(), -1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      double arg_iou = -1;
      for (std::size_t a = 0; a < na; ++a) {
        const double v = metrics::iou(anchors[a], gts[g].box);
        if (v > arg_iou) arg_iou = v, argmax[g] = static_cast<int>(a);
        if (v >= pos_iou && v > best[a]) best[a] = v, owner[a] = static_cast<int>(g);
      }
    }
    // The best anchor of every box is positive even below the threshold, and
    // takes precedence over threshold matches of other boxes.
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (argmax[g] >= 0) owner[argmax[g]] = static_cast<int>(g);
    }
    for (std::size_t a = 0; a < na; ++a) {
      if (owner[a] < 0) continue;
      t.objectness[n * na + a] = 1.0f;
      const auto e = encode_box(gts[owner[a]].box, anchors[a]);
      for (int k = 0; k < 4; ++k) t.offsets[(n * na + a) * 4 + k] = static_cast<float>(e[k]);
      ++t.positives;
    }
  }
  return t;
}

// ------------------------------------------------------------------ network

Detector::Detector(const DetectorConfig& cfg, std::vector<double> anchor_sizes)
    : cfg_(cfg), anchor_sizes_(std::move(anchor_sizes)) {
  cfg_.anchor_sizes = anchor_sizes_;
  cfg_.validate();
  if (anchor_sizes_.empty()) throw ConfigError("detector needs at least one anchor size");
  anchors_ = make_anchors(cfg_);
  Rng rng(derive_seed(cfg_.seed, 0x646574));
  const int downs = log2i(cfg_.grid_stride);
  int in = 3;
  for (int i = 0; i < 4; ++i) {
    stages_.emplace_back(in, cfg_.channels[i], 3, i < downs ? 2 : 1, 1, rng, cfg_.dtype);
    in = cfg_.channels[i];
  }
  const int a = static_cast<int>(anchor_sizes_.size());
  head_ = nn::Conv2d(in, a * 5, 3, 1, 1, rng, cfg_.dtype, 0.1);
  for (int k = 0; k < a; ++k) head_.bias.set(k * 5, kPriorLogit);
}

Tensor Detector::forward(const Tensor& x) const {
  if (x.ndim() != 4 || x.dim(1) != 3 || x.dim(2) != cfg_.input_side || x.dim(3) != cfg_.input_side) {
    throw DimensionError("detector expects (N, 3, " + std::to_string(cfg_.input_side) + ", " +
                         std::to_string(cfg_.input_side) + "), got " + nn::shape_str(x.shape()));
  }
  Tensor h = x;
  for (const auto& s : stages_) h = nn::leaky_relu(s.forward(h), kSlope);
  return head_.forward(h);
}

nn::ParameterList Detector::parameters() const {
  nn::ParameterList out;
  for (std::size_t i = 0; i < stages_.size(); ++i) stages_[i].collect("det.stage" + std::to_string(i), out);
  head_.collect("det.head", out);
  return out;
}

Detector build_detector(const DetectorConfig& cfg, std::vector<double> anchor_sizes) {
  Detector net(cfg, std::move(anchor_sizes));
  log_info("detector: " + std::to_string(nn::parameter_count(net.parameters())) + " params, " +
           std::to_string(net.anchors().size()) + " anchors");
  return net;
}

// --------------------------------------------------------------------- loss

LossParts detector_loss(const Tensor& preds, const Targets& targets, int neg_pos_ratio) {
  const int n = preds.dim(0), a = preds.dim(1) / 5, g = preds.dim(2);
  const std::size_t cells = std::size_t(g) * g;
  if (preds.ndim() != 4 || preds.dim(1) != a * 5 || n != targets.batch ||
      std::size_t(targets.anchors) != std::size_t(a) * cells) {
    throw DimensionError("detector_loss: predictions " + nn::shape_str(preds.shape()) + " do not match " +
                         std::to_string(targets.batch) + " x " + std::to_string(targets.anchors) + " targets");
  }
  std::vector<Tensor> obj_parts, reg_parts;
  for (int k = 0; k < a; ++k) {
    obj_parts.push_back(nn::slice_channels(preds, k * 5, k * 5 + 1));
    reg_parts.push_back(nn::slice_channels(preds, k * 5 + 1, k * 5 + 5));
  }
  Tensor obj = nn::concat_channels(obj_parts);  // (N, A, G, G)
  Tensor reg = nn::concat_channels(reg_parts);  // (N, 4A, G, G)
  const nn::Dtype dt = preds.dtype();

  Tensor bce = nn::bce_with_logits(obj, Tensor::from_vector(obj.shape(), targets.objectness).to(dt));
  const auto bce_v = bce.to_vector();
  std::vector<double> w_obj(bce_v.size(), 0.0);
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < bce_v.size(); ++i) {
    if (targets.objectness[i] > 0.5f) w_obj[i] = 1.0;
    else negatives.push_back(i);
  }
  const std::size_t keep =
      std::min(negatives.size(), std::size_t(neg_pos_ratio) * std::size_t(std::max<std::int64_t>(targets.positives, 1)));
  std::stable_sort(negatives.begin(), negatives.end(), [&](std::size_t x, std::size_t y) { return bce_v[x] > bce_v[y]; });
  for (std::size_t i = 0; i < keep; ++i) w_obj[negatives[i]] = 1.0;
  Tensor cls = nn::sum(nn::mul(bce, Tensor::from_values(obj.shape(), w_obj, dt)));

  // Targets and weights in the (N, 4A, G, G) layout of `reg`.
  std::vector<double> t_reg(std::size_t(n) * 4 * a * cells, 0.0), w_reg(t_reg.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < a; ++k) {
      for (std::size_t c = 0; c < cells; ++c) {
        const std::size_t anchor = (std::size_t(i) * a + k) * cells + c;
        if (targets.objectness[anchor] < 0.5f) continue;
        for (int j = 0; j < 4; ++j) {
          const std::size_t dst = ((std::size_t(i) * a + k) * 4 + j) * cells + c;
          t_reg[dst] = targets.offsets[anchor * 4 + j];
          w_reg[dst] = 1.0;
        }
      }
    }
  }
  Tensor diff = nn::sub(reg, Tensor::from_values(reg.shape(), t_reg, dt));
  Tensor regression = nn::sum(nn::mul(nn::smooth_l1(diff), Tensor::from_values(reg.shape(), w_reg, dt)));

  LossParts out;
  out.positives = targets.positives;
  const double norm = 1.0 / static_cast<double>(std::max<std::int64_t>(targets.positives, 1));
  out.total = nn::scale(nn::add(cls, regression), norm);
  out.classification = cls.item() * norm;
  out.regression = regression.item() * norm;
  return out;
}

// ----------------------------------------------------------------- training

std::vector<int> select_synthetic(int pool_size, int n_real, double ratio, std::uint64_t seed) {
  if (ratio < 0) throw ArgumentError("synthetic ratio must be >= 0");
  const int want = static_cast<int>(std::lround(ratio * n_real));
  if (want > pool_size) {
    throw DataError("synthetic pool has " + std::to_string(pool_size) + " chips, ratio " + std::to_string(ratio) +
                    " needs " + std::to_string(want));
  }
  std::vector<int> idx(pool_size);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, 0x73796e));
  rng.shuffle(idx);
  idx.resize(want);
  return idx;
}

namespace {

Tensor stack_images(const std::vector<const data::ImageChip*>& chips, nn::Dtype dtype) {
  const int s = chips[0]->height;
  std::vector<float> v;
  v.reserve(chips.size() * 3 * s * s);
  for (const auto* c : chips) {
    if (c->height != s || c->width != s) throw DimensionError("detector chips differ in size");
    v.insert(v.end(), c->data.begin(), c->data.end());
  }
  return Tensor::from_vector({static_cast<int>(chips.size()), 3, s, s}, std::move(v)).to(dtype);
}

}  // namespace

TrainedDetector train_detector(const TrainingMix& mix, const DetectorConfig& cfg,
                               const std::function<void(const TrainLogRow&)>& on_step) {
  if (mix.real.empty()) throw DataError("detector: empty real training set");
  cfg.validate();
  std::vector<double> sizes = cfg.anchor_sizes;
  if (sizes.empty()) sizes = default_anchor_sizes(median_box_side(mix.real));
  TrainedDetector out{build_detector(cfg, sizes), {}, {}};
  out.synthetic_used =
      select_synthetic(static_cast<int>(mix.synthetic.size()), static_cast<int>(mix.real.size()), mix.synthetic_ratio, cfg.seed);

  std::vector<const LabeledChip*> pool;
  for (const auto& c : mix.real) pool.push_back(&c);
  for (int i : out.synthetic_used) pool.push_back(&mix.synthetic[i]);
  for (const auto* c : pool) {
    if (c->image.height != cfg.input_side || c->image.width != cfg.input_side) {
      throw DimensionError("detector chip '" + c->id + "' is " + std::to_string(c->image.height) + "x" +
                           std::to_string(c->image.width) + ", expected " + std::to_string(cfg.input_side));
    }
  }

  nn::Adam opt(out.net.parameters(), cfg.adam);
  Rng rng(derive_seed(cfg.seed, 0x747264));
  const auto params = out.net.parameters();
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    std::vector<data::ImageChip> images;
    std::vector<std::vector<GroundTruthBox>> boxes;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const LabeledChip& c = *pool[rng.uniform_int(0, static_cast<int>(pool.size()) - 1)];
      const int k = cfg.augment_d4 ? rng.uniform_int(0, 7) : 0;
      images.push_back(k == 0 ? c.image : data::d4_transform(c.image, k));
      std::vector<GroundTruthBox> bx = c.boxes;
      if (k != 0) {
        for (auto& g : bx) g.box = data::d4_transform(g.box, cfg.input_side, k);
      }
      boxes.push_back(std::move(bx));
    }
    std::vector<const data::ImageChip*> ptrs;
    for (const auto& im : images) ptrs.push_back(&im);
    const Targets targets = assign_targets(boxes, out.net.anchors());
    LossParts loss = detector_loss(out.net.forward(stack_images(ptrs, cfg.dtype)), targets, cfg.neg_pos_ratio);
    const double value = loss.total.item();
    if (!std::isfinite(value)) throw TrainingError("detector loss is not finite", "step " + std::to_string(step));
    nn::zero_grads(params);
    nn::backward(loss.total);
    opt.step();
    nn::zero_grads(params);
    out.log.push_back({step, value, loss.classification, loss.regression, loss.positives});
    if (on_step) on_step(out.log.back());
  }
  return out;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& log, const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << "\nstep,loss,classification,regression,positives\n" << std::setprecision(9);
  for (const auto& r : log) {
    out << r.step << "," << r.loss << "," << r.classification << "," << r.regression << "," << r.positives << "\n";
  }
}

// ---------------------------------------------------------------- inference

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
  std::vector<Detection> kept;
  std::vector<bool> dead(dets.size(), false);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dead[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!dead[j] && metrics::iou(dets[i].box, dets[j].box) >= iou_thresh) dead[j] = true;
    }
  }
  return kept;
}

std::vector<std::vector<Detection>> detect(const Detector& net, const std::vector<data::ImageChip>& chips) {
  const auto& cfg = net.config();
  const auto& anchors = net.anchors();
  const int a = static_cast<int>(net.anchor_sizes().size());
  const int g = cfg.grid();
  const std::size_t cells = std::size_t(g) * g;
  const double s = cfg.input_side;
  std::vector<std::vector<Detection>> out;
  nn::NoGradGuard ng;
  for (std::size_t start = 0; start < chips.size(); start += kChunk) {
    const std::size_t end = std::min(chips.size(), start + kChunk);
    std::vector<const data::ImageChip*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&chips[i]);
    const auto pred = net.forward(stack_images(ptrs, cfg.dtype)).to_vector();
    for (std::size_t i = 0; i < ptrs.size(); ++i) {
      std::vector<Detection> dets;
      for (int k = 0; k < a; ++k) {
        for (std::size_t c = 0; c < cells; ++c) {
          const auto at = [&](int ch) { return pred[((i * a + k) * 5 + ch) * cells + c]; };
          const double score = 1.0 / (1.0 + std::exp(-at(0)));
          if (score < cfg.score_thresh) continue;
          Box b = decode_box({at(1), at(2), at(3), at(4)}, anchors[k * cells + c]);
          b = {std::clamp(b.x0, 0.0, s), std::clamp(b.y0, 0.0, s), std::clamp(b.x1, 0.0, s), std::clamp(b.y1, 0.0, s)};
          if (!b.valid()) continue;
          dets.push_back({b, kVehicleClass, score});
        }
      }
      dets = nms(std::move(dets), cfg.nms_iou);
      if (dets.size() > std::size_t(cfg.max_detections)) dets.resize(cfg.max_detections);
      out.push_back(std::move(dets));
    }
  }
  return out;
}

std::vector<Detection> detect(const Detector& net, const data::ImageChip& chip) { return detect(net, std::vector{chip})[0]; }

std::vector<metrics::ImageResult> evaluate(const Detector& net, const std::vector<LabeledChip>& chips) {
  std::vector<data::ImageChip> images;
  for (const auto& c : chips) images.push_back(c.image);
  const auto dets = detect(net, images);
  std::vector<metrics::ImageResult> out;
  for (std::size_t i = 0; i < chips.size(); ++i) out.push_back({dets[i], chips[i].boxes});
  return out;
}

void write_detections_csv(const std::filesystem::path& path, const std::vector<LabeledChip>& chips,
                          const std::vector<std::vector<Detection>>& dets, const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << "\nchip_id,x0,y0,x1,y1,confidence\n" << std::setprecision(9);
  for (std::size_t i = 0; i < chips.size(); ++i) {
    for (const auto& d : dets[i]) {
      out << chips[i].id << "," << d.box.x0 << "," << d.box.y0 << "," << d.box.x1 << "," << d.box.y1 << ","
          << d.confidence << "\n";
    }
  }
}

// -------------------------------------------------------------- persistence

namespace {
std::string join(const std::vector<double>& v) {
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ";" : "") << v[i];
  return s.str();
}
std::vector<double> split(const std::string& text) {
  std::vector<double> v;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ';');) v.push_back(std::stod(item));
  return v;
}
}  // namespace

nn::Checkpoint make_detector_checkpoint(const Detector& net) {
  const auto& c = net.config();
  std::vector<double> ch(c.channels.begin(), c.channels.end());
  std::ostringstream f;
  f << std::setprecision(17) << c.score_thresh << ";" << c.nms_iou;
  return nn::make_checkpoint(net.parameters(), {{"kind", "detector"},
                                                {"input_side", std::to_string(c.input_side)},
                                                {"grid_stride", std::to_string(c.grid_stride)},
                                                {"anchor_sizes", join(net.anchor_sizes())},
                                                {"channels", join(ch)},
                                                {"thresholds", f.str()},
                                                {"max_detections", std::to_string(c.max_detections)},
                                                {"seed", std::to_string(c.seed)}});
}

Detector load_detector(const nn::Checkpoint& ckpt) {
  if (ckpt.meta("kind") != "detector") throw CheckpointError("checkpoint is not a detector");
  DetectorConfig c;
  c.input_side = ckpt.meta_int("input_side");
  c.grid_stride = ckpt.meta_int("grid_stride");
  c.channels.clear();
  for (double v : split(ckpt.meta("channels"))) c.channels.push_back(static_cast<int>(v));
  const auto th = split(ckpt.meta("thresholds"));
  if (th.size() != 2) throw CheckpointError("bad detector thresholds");
  c.score_thresh = th[0];
  c.nms_iou = th[1];
  c.max_detections = ckpt.meta_int("max_detections");
  c.seed = std::stoull(ckpt.meta("seed"));
  Detector net(c, split(ckpt.meta("anchor_sizes")));
  nn::restore_parameters(ckpt, net.parameters());
  return net;
}

}  // namespace synthaug::detector
