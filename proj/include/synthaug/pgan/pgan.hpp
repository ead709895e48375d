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
#include <map>
#include <string>
#include <vector>

#include "synthaug/numerics/adam.hpp"
#include "synthaug/numerics/checkpoint.hpp"
#include "synthaug/numerics/layers.hpp"

namespace synthaug::pgan {

using nn::Tensor;

struct ResolutionSchedule {
  int target_side = 32;
  std::vector<int> stages;  // 4, 8, ..., target_side
  // Images shown in each fade-in phase and in each stabilization phase.
  std::int64_t images_per_phase = 28000;

  // Raises ConfigError unless target_side is a power of two >= 8.
  static ResolutionSchedule make(int target_side, std::int64_t images_per_phase);
  int num_phases() const { return 2 * static_cast<int>(stages.size()) - 1; }
};

enum class GpAnchor { generated, interpolated };

struct PganConfig {
  int target_side = 32;
  int latent_dim = 64;
  std::int64_t images_per_phase = 28000;
  std::map<int, int> batch_sizes{{4, 64}, {8, 32}, {16, 16}, {32, 8}};
  // Feature maps per stage side; sides not listed use the nearest smaller
  // listed side's value.
  std::map<int, int> channels{{4, 64}, {8, 64}, {16, 32}, {32, 16}};
  double lambda_gp = 10.0;
  GpAnchor gp_anchor = GpAnchor::generated;
  double pixelnorm_eps = 1e-8;
  bool minibatch_stddev = false;
  bool equalized_lr = false;
  nn::AdamConfig adam = nn::AdamConfig::gan();
  std::uint64_t seed = 0;
  nn::Dtype dtype = nn::Dtype::f32;  // f64 for gradient checks

  void validate() const;
  ResolutionSchedule schedule() const { return ResolutionSchedule::make(target_side, images_per_phase); }
  int batch_for(int side) const;
  int channels_for(int side) const;
};

class Generator {
 public:
  Generator(const PganConfig& cfg, Rng& rng);

  int stage() const { return stage_; }
  int side() const { return 4 << stage_; }
  double fade_alpha() const { return alpha_; }
  void set_fade_alpha(double alpha);
  // Adds the next block; fade_alpha restarts at 0.
  void grow();
  bool fully_grown() const { return side() >= target_side_; }

  // (N, latent) -> (N, 3, side, side) in [-1,1].
  Tensor forward(const Tensor& z) const;
  // Parameters of every block up to and including the current stage.
  nn::ParameterList parameters() const;
  // Parameters of all blocks, grown or not (for checkpoints).
  nn::ParameterList all_parameters() const;

 private:
  struct Block {
    nn::Conv2d conv1, conv2;
  };
  int latent_dim_, target_side_;
  double eps_;
  nn::Linear input_;
  std::vector<Block> blocks_;
  std::vector<nn::Conv2d> to_rgb_;
  int stage_ = 0;
  double alpha_ = 1.0;

  Tensor features(const Tensor& z, int upto) const;
};

class Discriminator {
 public:
  Discriminator(const PganConfig& cfg, Rng& rng);

  int stage() const { return stage_; }
  int side() const { return 4 << stage_; }
  double fade_alpha() const { return alpha_; }
  void set_fade_alpha(double alpha);
  void grow();

  // (N, 3, side, side) -> (N,) scores.
  Tensor forward(const Tensor& x) const;
  nn::ParameterList parameters() const;
  nn::ParameterList all_parameters() const;

 private:
  struct Block {
    nn::Conv2d conv1, conv2;
  };
  bool mbstd_;
  std::vector<nn::Conv2d> from_rgb_;
  std::vector<Block> blocks_;  // blocks_[k] maps side 4<<k down to 2<<k (k >= 1)
  nn::Conv2d final_conv_;
  nn::Linear final_fc_, final_out_;
  int stage_ = 0;
  double alpha_ = 1.0;

  Tensor trunk(Tensor h, int from_stage) const;
};

// Builds both networks at the 4x4 stage with seed-deterministic weights.
struct Pgan {
  PganConfig config;
  Generator generator;
  Discriminator discriminator;

  explicit Pgan(const PganConfig& cfg);
  void grow();
  void set_fade_alpha(double alpha);
};

Pgan build_pgan(const PganConfig& cfg);

// Batch mean of d_real - d_fake: the discriminator's objective (it minimizes
// the negation).
Tensor d_loss_wgan(const Tensor& d_real, const Tensor& d_fake);
// Implemented generator loss: -mean(d_fake).
Tensor g_loss_wgan(const Tensor& d_fake);
// lambda * mean_i (||grad_x D(x_i)||_2 - 1)^2. `samples` must require grad.
Tensor gradient_penalty(const std::function<Tensor(const Tensor&)>& d, const Tensor& samples, double lambda_gp);

struct DStepResult {
  double d_loss;  // -objective + penalty
  double gp;
};

// One discriminator update on `real` (batch at the current side). Gradients of
// every model parameter are cleared before returning.
DStepResult discriminator_step(Pgan& model, nn::Adam& opt_d, const Tensor& real, Rng& rng);
// One generator update on `batch` fresh latents; returns the implemented loss.
double generator_step(Pgan& model, nn::Adam& opt_g, int batch, Rng& rng);

struct TraceRow {
  std::int64_t step;
  int stage_side;
  double fade_alpha;
  double d_loss;  // implemented discriminator loss including the penalty
  double g_loss;
  double gp;
};

struct TrainResult {
  std::vector<TraceRow> trace;
  std::vector<std::int64_t> stage_boundaries;  // first step of each new side
  std::int64_t images_shown = 0;
};

// Trains on (N, 3, M, M) palette rasters in [-1,1]; leaves `model` fully
// grown. on_step (optional) is called after each step.
TrainResult train_pgan(Pgan& model, const Tensor& dataset, const std::function<void(const TraceRow&)>& on_step = {});

void write_trace_csv(const std::filesystem::path& path, const TrainResult& result, const std::string& header);

nn::Checkpoint make_pgan_checkpoint(const Pgan& model);
Pgan load_pgan(const nn::Checkpoint& ckpt);

// n rasters (n, 3, M, M) from standard-normal latents drawn from `seed`.
Tensor sample_raw_labels(const Generator& g, int n, std::uint64_t seed);

std::string format_config(const PganConfig& cfg);

}  // namespace synthaug::pgan
