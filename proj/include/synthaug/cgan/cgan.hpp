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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "synthaug/dataset/raster.hpp"
#include "synthaug/numerics/adam.hpp"
#include "synthaug/numerics/checkpoint.hpp"
#include "synthaug/numerics/layers.hpp"

namespace synthaug::cgan {

using nn::Tensor;

struct CganConfig {
  int crop_side = 32;
  int batch_size = 4;
  double lambda_fm = 10.0;
  std::int64_t steps = 5000;
  int min_vehicles_per_crop = 10;
  int num_scales = 3;
  int base_channels = 16;
  int residual_blocks = 3;
  // Adds a full-resolution enhancer in front of a half-resolution global
  // generator.
  bool local_enhancer = false;
  nn::AdamConfig adam{2e-4, 0.5, 0.999, 1e-8};
  std::uint64_t seed = 0;
  nn::Dtype dtype = nn::Dtype::f32;

  // Raises ConfigError; the coarsest discriminator must see at least 8x8.
  void validate() const;
};

// (N, H, W) class indices to (N, 6, H, W) one-hot planes.
Tensor one_hot_encode(const std::vector<data::LabelMask>& masks, int num_classes = 6, nn::Dtype dtype = nn::Dtype::f32);
Tensor one_hot_encode(const data::LabelMask& mask, int num_classes = 6, nn::Dtype dtype = nn::Dtype::f32);
// Per-pixel argmax over channels of an (N, C, H, W) tensor.
std::vector<data::LabelMask> argmax_decode(const Tensor& one_hot);

class Generator {
 public:
  Generator(const CganConfig& cfg, Rng& rng);
  // (N, 6, S, S) one-hot labels to (N, 3, S, S) images in [-1,1].
  Tensor forward(const Tensor& labels) const;
  nn::ParameterList parameters() const;

 private:
  struct Residual {
    nn::Conv2d a, b;
  };
  struct Global {
    nn::Conv2d in, down;
    std::vector<Residual> res;
    nn::Conv2d up;
  };
  Tensor global_features(const Tensor& labels) const;

  Global global_;
  nn::Conv2d out_;
  bool enhancer_ = false;
  nn::Conv2d local_in_, local_down_;
  Residual local_res_;
  nn::Conv2d local_up_;
};

struct ScaleOutput {
  Tensor probability;             // (N, 1, h, w), clamped to [1e-7, 1 - 1e-7]
  std::vector<Tensor> features;  // intermediate activations, shallow to deep
};

class PatchDiscriminator {
 public:
  PatchDiscriminator(int in_channels, int base_channels, Rng& rng, nn::Dtype dtype);
  ScaleOutput forward(const Tensor& x) const;
  void collect(const std::string& prefix, nn::ParameterList& out) const;

 private:
  nn::Conv2d c1_, c2_, c3_, out_;
};

class MultiScaleDiscriminator {
 public:
  MultiScaleDiscriminator(const CganConfig& cfg, Rng& rng);
  // Scale k sees avgpool2x applied k times to concat(labels, image).
  std::vector<ScaleOutput> forward(const Tensor& labels, const Tensor& image) const;
  nn::ParameterList parameters() const;
  int num_scales() const { return static_cast<int>(scales_.size()); }
  const PatchDiscriminator& scale(int k) const { return scales_.at(k); }

 private:
  std::vector<PatchDiscriminator> scales_;
};

struct Cgan {
  CganConfig config;
  Generator generator;
  MultiScaleDiscriminator discriminator;

  explicit Cgan(const CganConfig& cfg);
};

Cgan build_cgan(const CganConfig& cfg);

constexpr double kProbabilityEps = 1e-7;

// Sum over scales of mean log D(real) + mean log(1 - D(fake)); the
// discriminator maximizes it.
Tensor cgan_d_objective(const std::vector<ScaleOutput>& real, const std::vector<ScaleOutput>& fake);
// Sum over layers of mean |real - fake|, i.e. (1/N_i) ||r_i - f_i||_1 averaged
// over the batch. Raises DimensionError on misaligned stacks.
Tensor feature_matching_loss(const std::vector<Tensor>& real, const std::vector<Tensor>& fake);

struct GeneratorLoss {
  Tensor total;
  Tensor adversarial;
  Tensor feature_matching;  // unweighted
};
// Real features are treated as constants.
GeneratorLoss cgan_g_loss(const std::vector<ScaleOutput>& fake, const std::vector<ScaleOutput>& real,
                          double lambda_fm);

struct TraceRow {
  std::int64_t step;
  double d_loss;  // negated objective
  double g_adv;
  double g_fm;
};

// Paired training data: labels (N, 6, S, S) one-hot, images (N, 3, S, S).
struct PairSet {
  Tensor labels;
  Tensor images;
  int size() const { return labels.defined() ? labels.dim(0) : 0; }
};
PairSet make_pairs(const std::vector<data::Chip>& chips, nn::Dtype dtype = nn::Dtype::f32);

double discriminator_step(Cgan& model, nn::Adam& opt_d, const Tensor& labels, const Tensor& images);
GeneratorLoss generator_step(Cgan& model, nn::Adam& opt_g, const Tensor& labels, const Tensor& images);

std::vector<TraceRow> train_cgan(Cgan& model, const PairSet& pairs,
                                 const std::function<void(const TraceRow&)>& on_step = {});
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace, const std::string& header);

// Deterministic for a fixed model; raises DimensionError unless the mask side
// equals crop_side.
data::ImageChip translate(const Cgan& model, const data::LabelMask& mask);
std::vector<data::ImageChip> translate(const Cgan& model, const std::vector<data::LabelMask>& masks);

nn::Checkpoint make_cgan_checkpoint(const Cgan& model);
Cgan load_cgan(const nn::Checkpoint& ckpt);
std::string format_config(const CganConfig& cfg);

}  // namespace synthaug::cgan
