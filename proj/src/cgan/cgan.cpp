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

#include "synthaug/cgan/cgan.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "synthaug/common/palette.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::cgan {

using nn::NoGradGuard;

namespace {

constexpr double kSlope = 0.2;
constexpr int kLabelChannels = kNumClasses;
constexpr int kChunk = 64;

Tensor lrelu(const Tensor& t) { return nn::leaky_relu(t, kSlope); }
Tensor norm_lrelu(const Tensor& t) { return lrelu(nn::instance_norm(t)); }

}  // namespace

void CganConfig::validate() const {
  if (batch_size < 1) throw ConfigError("cgan batch_size must be >= 1");
  if (lambda_fm < 0) throw ConfigError("cgan lambda_fm must be >= 0");
  if (steps < 1) throw ConfigError("cgan steps must be >= 1");
  if (min_vehicles_per_crop < 0) throw ConfigError("cgan min_vehicles_per_crop must be >= 0");
  if (base_channels < 1 || residual_blocks < 0) throw ConfigError("cgan network sizes must be positive");
  if (num_scales < 1) throw ConfigError("cgan num_scales must be >= 1");
  const int coarse = 1 << (num_scales - 1);
  if (crop_side % coarse != 0 || crop_side / coarse < 8) {
    throw ConfigError("cgan crop_side " + std::to_string(crop_side) + " is too small for " +
                      std::to_string(num_scales) + " discriminator scales (the coarsest needs >= 8x8); lower num_scales");
  }
  if (crop_side % (local_enhancer ? 4 : 2) != 0) throw ConfigError("cgan crop_side must be divisible by 4 with the enhancer, 2 otherwise");
}

// ------------------------------------------------------------------ one-hot

Tensor one_hot_encode(const std::vector<data::LabelMask>& masks, int num_classes, nn::Dtype dtype) {
  if (masks.empty()) throw ArgumentError("one_hot_encode: no masks");
  const int h = masks[0].height, w = masks[0].width;
  const std::size_t plane = std::size_t(h) * w;
  std::vector<double> out(masks.size() * num_classes * plane, 0.0);
  for (std::size_t n = 0; n < masks.size(); ++n) {
    const auto& m = masks[n];
    if (m.height != h || m.width != w) throw DimensionError("one_hot_encode: masks differ in size");
    for (std::size_t i = 0; i < plane; ++i) {
      const int c = m.data[i];
      if (c >= num_classes) {
        throw DataError("class " + std::to_string(c) + " out of range at mask " + std::to_string(n) + " pixel (y=" +
                        std::to_string(i / w) + ", x=" + std::to_string(i % w) + ")");
      }
      out[(n * num_classes + c) * plane + i] = 1.0;
    }
  }
  return Tensor::from_values({static_cast<int>(masks.size()), num_classes, h, w}, out, dtype);
}

Tensor one_hot_encode(const data::LabelMask& mask, int num_classes, nn::Dtype dtype) {
  return one_hot_encode(std::vector<data::LabelMask>{mask}, num_classes, dtype);
}

std::vector<data::LabelMask> argmax_decode(const Tensor& one_hot) {
  if (one_hot.ndim() != 4) throw DimensionError("argmax_decode expects (N, C, H, W), got " + nn::shape_str(one_hot.shape()));
  const int n = one_hot.dim(0), c = one_hot.dim(1), h = one_hot.dim(2), w = one_hot.dim(3);
  const std::size_t plane = std::size_t(h) * w;
  const auto v = one_hot.to_vector();
  std::vector<data::LabelMask> out;
  for (int i = 0; i < n; ++i) {
    data::LabelMask m(h, w);
    for (std::size_t p = 0; p < plane; ++p) {
      int best = 0;
      for (int k = 1; k < c; ++k) {
        if (v[(std::size_t(i) * c + k) * plane + p] > v[(std::size_t(i) * c + best) * plane + p]) best = k;
      }
      m.data[p] = static_cast<std::uint8_t>(best);
    }
    out.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------- generator

Generator::Generator(const CganConfig& cfg, Rng& rng) : enhancer_(cfg.local_enhancer) {
  const int c = cfg.base_channels;
  const auto dt = cfg.dtype;
  // Every hidden convolution feeds an instance norm, so none carries a bias.
  global_.in = nn::Conv2d(kLabelChannels, c, 3, 1, 1, rng, dt).without_bias();
  global_.down = nn::Conv2d(c, 2 * c, 3, 2, 1, rng, dt).without_bias();
  for (int i = 0; i < cfg.residual_blocks; ++i) {
    global_.res.push_back({nn::Conv2d(2 * c, 2 * c, 3, 1, 1, rng, dt).without_bias(),
                           nn::Conv2d(2 * c, 2 * c, 3, 1, 1, rng, dt).without_bias()});
  }
  global_.up = nn::Conv2d(2 * c, c, 3, 1, 1, rng, dt).without_bias();
  out_ = nn::Conv2d(c, 3, 3, 1, 1, rng, dt, 1.0);
  if (enhancer_) {
    local_in_ = nn::Conv2d(kLabelChannels, c, 3, 1, 1, rng, dt).without_bias();
    local_down_ = nn::Conv2d(c, c, 3, 2, 1, rng, dt).without_bias();
    local_res_ = {nn::Conv2d(c, c, 3, 1, 1, rng, dt).without_bias(), nn::Conv2d(c, c, 3, 1, 1, rng, dt).without_bias()};
    local_up_ = nn::Conv2d(c, c, 3, 1, 1, rng, dt).without_bias();
  }
}

Tensor Generator::global_features(const Tensor& labels) const {
  Tensor h = norm_lrelu(global_.in.forward(labels));
  h = norm_lrelu(global_.down.forward(h));
  for (const auto& r : global_.res) h = nn::add(h, nn::instance_norm(r.b.forward(norm_lrelu(r.a.forward(h)))));
  return norm_lrelu(global_.up.forward(nn::upsample_nearest2x(h)));
}

Tensor Generator::forward(const Tensor& labels) const {
  if (labels.ndim() != 4 || labels.dim(1) != kLabelChannels) {
    throw DimensionError("cgan generator expects (N, 6, S, S) labels, got " + nn::shape_str(labels.shape()));
  }
  if (!enhancer_) return nn::tanh_act(out_.forward(global_features(labels)));
  Tensor g = global_features(nn::avgpool2x(labels));
  Tensor h = norm_lrelu(local_down_.forward(norm_lrelu(local_in_.forward(labels))));
  h = nn::add(h, g);
  h = nn::add(h, nn::instance_norm(local_res_.b.forward(norm_lrelu(local_res_.a.forward(h)))));
  h = norm_lrelu(local_up_.forward(nn::upsample_nearest2x(h)));
  return nn::tanh_act(out_.forward(h));
}

nn::ParameterList Generator::parameters() const {
  nn::ParameterList out;
  global_.in.collect("g.global.in", out);
  global_.down.collect("g.global.down", out);
  for (std::size_t i = 0; i < global_.res.size(); ++i) {
    global_.res[i].a.collect("g.global.res" + std::to_string(i) + ".a", out);
    global_.res[i].b.collect("g.global.res" + std::to_string(i) + ".b", out);
  }
  global_.up.collect("g.global.up", out);
  out_.collect("g.out", out);
  if (enhancer_) {
    local_in_.collect("g.local.in", out);
    local_down_.collect("g.local.down", out);
    local_res_.a.collect("g.local.res.a", out);
    local_res_.b.collect("g.local.res.b", out);
    local_up_.collect("g.local.up", out);
  }
  return out;
}

// ------------------------------------------------------------ discriminator

PatchDiscriminator::PatchDiscriminator(int in_channels, int base, Rng& rng, nn::Dtype dtype)
    : c1_(in_channels, base, 3, 2, 1, rng, dtype),
      c2_(base, 2 * base, 3, 2, 1, rng, dtype),
      c3_(2 * base, 2 * base, 3, 1, 1, rng, dtype),
      out_(2 * base, 1, 3, 1, 1, rng, dtype, 1.0) {
  c2_.without_bias();
  c3_.without_bias();
}

ScaleOutput PatchDiscriminator::forward(const Tensor& x) const {
  ScaleOutput r;
  Tensor h = lrelu(c1_.forward(x));
  r.features.push_back(h);
  h = norm_lrelu(c2_.forward(h));
  r.features.push_back(h);
  h = norm_lrelu(c3_.forward(h));
  r.features.push_back(h);
  r.probability = nn::clamp(nn::sigmoid(out_.forward(h)), kProbabilityEps, 1.0 - kProbabilityEps);
  return r;
}

void PatchDiscriminator::collect(const std::string& prefix, nn::ParameterList& out) const {
  c1_.collect(prefix + ".c1", out);
  c2_.collect(prefix + ".c2", out);
  c3_.collect(prefix + ".c3", out);
  out_.collect(prefix + ".out", out);
}

MultiScaleDiscriminator::MultiScaleDiscriminator(const CganConfig& cfg, Rng& rng) {
  for (int k = 0; k < cfg.num_scales; ++k) scales_.emplace_back(kLabelChannels + 3, cfg.base_channels, rng, cfg.dtype);
}

std::vector<ScaleOutput> MultiScaleDiscriminator::forward(const Tensor& labels, const Tensor& image) const {
  if (labels.ndim() != 4 || image.ndim() != 4 || labels.dim(0) != image.dim(0) || labels.dim(2) != image.dim(2) ||
      labels.dim(3) != image.dim(3) || image.dim(1) != 3) {
    throw DimensionError("cgan discriminator: labels " + nn::shape_str(labels.shape()) + " and image " +
                         nn::shape_str(image.shape()) + " do not pair");
  }
  std::vector<ScaleOutput> out;
  Tensor x = nn::concat_channels({labels, image});
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) x = nn::avgpool2x(x);
    out.push_back(scales_[k].forward(x));
  }
  return out;
}

nn::ParameterList MultiScaleDiscriminator::parameters() const {
  nn::ParameterList out;
  for (std::size_t k = 0; k < scales_.size(); ++k) scales_[k].collect("d.scale" + std::to_string(k + 1), out);
  return out;
}

// -------------------------------------------------------------------- model

namespace {
Generator make_generator(const CganConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, 0x636767));
  return Generator(cfg, rng);
}
MultiScaleDiscriminator make_discriminator(const CganConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x636764));
  return MultiScaleDiscriminator(cfg, rng);
}
}  // namespace

Cgan::Cgan(const CganConfig& cfg) : config(cfg), generator(make_generator(cfg)), discriminator(make_discriminator(cfg)) {}

Cgan build_cgan(const CganConfig& cfg) {
  Cgan model(cfg);
  log_info("cgan: generator " + std::to_string(nn::parameter_count(model.generator.parameters())) +
           " params, discriminator " + std::to_string(nn::parameter_count(model.discriminator.parameters())) +
           " params");
  return model;
}

// ------------------------------------------------------------------- losses

namespace {
void check_scales(const std::vector<ScaleOutput>& a, const std::vector<ScaleOutput>& b, const char* what) {
  if (a.empty() || a.size() != b.size()) throw DimensionError(std::string(what) + ": scale counts differ or are zero");
}
}  // namespace

Tensor cgan_d_objective(const std::vector<ScaleOutput>& real, const std::vector<ScaleOutput>& fake) {
  check_scales(real, fake, "cgan_d_objective");
  Tensor total;
  for (std::size_t k = 0; k < real.size(); ++k) {
    Tensor t = nn::add(nn::mean(nn::log_act(real[k].probability)),
                       nn::mean(nn::log_act(nn::add_scalar(nn::neg(fake[k].probability), 1.0))));
    total = total.defined() ? nn::add(total, t) : t;
  }
  return total;
}

Tensor feature_matching_loss(const std::vector<Tensor>& real, const std::vector<Tensor>& fake) {
  if (real.empty() || real.size() != fake.size()) {
    throw DimensionError("feature_matching_loss: stacks have " + std::to_string(real.size()) + " and " +
                         std::to_string(fake.size()) + " layers");
  }
  Tensor total;
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real[i].shape() != fake[i].shape()) {
      throw DimensionError("feature_matching_loss: layer " + std::to_string(i) + " shapes " +
                           nn::shape_str(real[i].shape()) + " and " + nn::shape_str(fake[i].shape()));
    }
    Tensor t = nn::mean(nn::abs_act(nn::sub(real[i], fake[i])));
    total = total.defined() ? nn::add(total, t) : t;
  }
  return total;
}

GeneratorLoss cgan_g_loss(const std::vector<ScaleOutput>& fake, const std::vector<ScaleOutput>& real,
                          double lambda_fm) {
  check_scales(fake, real, "cgan_g_loss");
  GeneratorLoss r;
  for (std::size_t k = 0; k < fake.size(); ++k) {
    Tensor adv = nn::neg(nn::mean(nn::log_act(fake[k].probability)));
    std::vector<Tensor> detached;
    for (const auto& f : real[k].features) detached.push_back(f.detach());
    Tensor fm = feature_matching_loss(detached, fake[k].features);
    r.adversarial = r.adversarial.defined() ? nn::add(r.adversarial, adv) : adv;
    r.feature_matching = r.feature_matching.defined() ? nn::add(r.feature_matching, fm) : fm;
  }
  r.total = nn::add(r.adversarial, nn::scale(r.feature_matching, lambda_fm));
  return r;
}

// ----------------------------------------------------------------- training

PairSet make_pairs(const std::vector<data::Chip>& chips, nn::Dtype dtype) {
  if (chips.empty()) throw DataError("cgan: no training pairs");
  std::vector<data::LabelMask> masks;
  std::vector<double> images;
  const int h = chips[0].image.height, w = chips[0].image.width;
  for (const auto& c : chips) {
    if (c.image.height != h || c.image.width != w || c.mask.height != h || c.mask.width != w) {
      throw DimensionError("cgan: training pairs differ in size");
    }
    masks.push_back(c.mask);
    images.insert(images.end(), c.image.data.begin(), c.image.data.end());
  }
  return {one_hot_encode(masks, kNumClasses, dtype),
          Tensor::from_values({static_cast<int>(chips.size()), 3, h, w}, images, dtype)};
}

namespace {

nn::ParameterList all_parameters(const Cgan& model) {
  nn::ParameterList all = model.generator.parameters();
  for (const auto& p : model.discriminator.parameters()) all.push_back(p);
  return all;
}

Tensor gather(const Tensor& t, const std::vector<int>& idx) {
  const std::size_t per = static_cast<std::size_t>(t.numel() / t.dim(0));
  const auto src = t.to_vector();
  std::vector<double> out(per * idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(src.begin() + std::size_t(idx[i]) * per, per, out.begin() + i * per);
  nn::Shape shape = t.shape();
  shape[0] = static_cast<int>(idx.size());
  return Tensor::from_values(shape, out, t.dtype());
}

}  // namespace

double discriminator_step(Cgan& model, nn::Adam& opt_d, const Tensor& labels, const Tensor& images) {
  Tensor fake;
  {
    NoGradGuard ng;
    fake = model.generator.forward(labels);
  }
  Tensor objective = cgan_d_objective(model.discriminator.forward(labels, images),
                                      model.discriminator.forward(labels, fake));
  Tensor loss = nn::neg(objective);
  const auto params = all_parameters(model);
  nn::zero_grads(params);
  nn::backward(loss);
  const double value = loss.item();
  if (std::isfinite(value)) opt_d.step();
  nn::zero_grads(params);
  return value;
}

GeneratorLoss generator_step(Cgan& model, nn::Adam& opt_g, const Tensor& labels, const Tensor& images) {
  std::vector<ScaleOutput> real;
  {
    NoGradGuard ng;
    real = model.discriminator.forward(labels, images);
  }
  const auto fake = model.discriminator.forward(labels, model.generator.forward(labels));
  GeneratorLoss loss = cgan_g_loss(fake, real, model.config.lambda_fm);
  const auto params = all_parameters(model);
  nn::zero_grads(params);
  nn::backward(loss.total);
  if (std::isfinite(loss.total.item())) opt_g.step();
  nn::zero_grads(params);
  return loss;
}

std::vector<TraceRow> train_cgan(Cgan& model, const PairSet& pairs, const std::function<void(const TraceRow&)>& on_step) {
  const CganConfig& cfg = model.config;
  if (pairs.size() == 0) throw DataError("cgan: empty training stream");
  const int s = cfg.crop_side;
  if (pairs.labels.dim(2) != s || pairs.labels.dim(3) != s || pairs.images.dim(0) != pairs.size() ||
      pairs.images.dim(2) != s || pairs.images.dim(3) != s) {
    throw DimensionError("cgan: training pairs must be " + std::to_string(s) + "x" + std::to_string(s) + ", got " +
                         nn::shape_str(pairs.labels.shape()) + " / " + nn::shape_str(pairs.images.shape()));
  }
  Tensor labels = pairs.labels.to(cfg.dtype), images = pairs.images.to(cfg.dtype);
  nn::Adam opt_g(model.generator.parameters(), cfg.adam);
  nn::Adam opt_d(model.discriminator.parameters(), cfg.adam);
  Rng rng(derive_seed(cfg.seed, 0x74726e));
  std::vector<TraceRow> trace;
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    std::vector<int> idx(cfg.batch_size);
    for (int& i : idx) i = rng.uniform_int(0, pairs.size() - 1);
    const Tensor l = gather(labels, idx), x = gather(images, idx);
    const double d = discriminator_step(model, opt_d, l, x);
    if (!std::isfinite(d)) throw TrainingError("cgan discriminator loss is not finite", "step " + std::to_string(step));
    const GeneratorLoss g = generator_step(model, opt_g, l, x);
    const double total = g.total.item();
    if (!std::isfinite(total)) throw TrainingError("cgan generator loss is not finite", "step " + std::to_string(step));
    trace.push_back({step, d, g.adversarial.item(), g.feature_matching.item()});
    if (on_step) on_step(trace.back());
  }
  return trace;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& trace, const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << "\nstep,d_loss,g_adv,g_fm\n" << std::setprecision(9);
  for (const auto& r : trace) out << r.step << "," << r.d_loss << "," << r.g_adv << "," << r.g_fm << "\n";
}

// ---------------------------------------------------------------- translate

std::vector<data::ImageChip> translate(const Cgan& model, const std::vector<data::LabelMask>& masks) {
  const int s = model.config.crop_side;
  for (const auto& m : masks) {
    if (m.height != s || m.width != s) {
      throw DimensionError("translate: mask is " + std::to_string(m.height) + "x" + std::to_string(m.width) +
                           ", generator was trained at " + std::to_string(s));
    }
  }
  NoGradGuard ng;
  std::vector<data::ImageChip> out;
  for (std::size_t start = 0; start < masks.size(); start += kChunk) {
    const std::vector<data::LabelMask> part(masks.begin() + start, masks.begin() + std::min(masks.size(), start + kChunk));
    const Tensor y = model.generator.forward(one_hot_encode(part, kNumClasses, model.config.dtype));
    const auto v = y.to_vector();
    const std::size_t per = std::size_t(3) * s * s;
    for (std::size_t i = 0; i < part.size(); ++i) {
      data::ImageChip img(s, s);
      for (std::size_t j = 0; j < per; ++j) img.data[j] = static_cast<float>(v[i * per + j]);
      out.push_back(std::move(img));
    }
  }
  return out;
}

data::ImageChip translate(const Cgan& model, const data::LabelMask& mask) { return translate(model, std::vector{mask})[0]; }

// -------------------------------------------------------------- persistence

namespace {
std::map<std::string, std::string> config_metadata(const CganConfig& c) {
  const auto num = [](double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
  };
  return {{"kind", "cgan"},
          {"crop_side", std::to_string(c.crop_side)},
          {"batch_size", std::to_string(c.batch_size)},
          {"lambda_fm", num(c.lambda_fm)},
          {"steps", std::to_string(c.steps)},
          {"min_vehicles_per_crop", std::to_string(c.min_vehicles_per_crop)},
          {"num_scales", std::to_string(c.num_scales)},
          {"base_channels", std::to_string(c.base_channels)},
          {"residual_blocks", std::to_string(c.residual_blocks)},
          {"local_enhancer", c.local_enhancer ? "1" : "0"},
          {"adam_lr", num(c.adam.lr)},
          {"adam_beta1", num(c.adam.beta1)},
          {"adam_beta2", num(c.adam.beta2)},
          {"adam_eps", num(c.adam.eps)},
          {"seed", std::to_string(c.seed)}};
}
}  // namespace

std::string format_config(const CganConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : config_metadata(cfg)) s += k + "=" + v + "\n";
  return s;
}

nn::Checkpoint make_cgan_checkpoint(const Cgan& model) {
  return nn::make_checkpoint(all_parameters(model), config_metadata(model.config));
}

Cgan load_cgan(const nn::Checkpoint& ckpt) {
  if (ckpt.meta("kind") != "cgan") throw CheckpointError("checkpoint is not a cgan model");
  CganConfig c;
  c.crop_side = ckpt.meta_int("crop_side");
  c.batch_size = ckpt.meta_int("batch_size");
  c.lambda_fm = ckpt.meta_double("lambda_fm");
  c.steps = std::stoll(ckpt.meta("steps"));
  c.min_vehicles_per_crop = ckpt.meta_int("min_vehicles_per_crop");
  c.num_scales = ckpt.meta_int("num_scales");
  c.base_channels = ckpt.meta_int("base_channels");
  c.residual_blocks = ckpt.meta_int("residual_blocks");
  c.local_enhancer = ckpt.meta("local_enhancer") == "1";
  c.adam = {ckpt.meta_double("adam_lr"), ckpt.meta_double("adam_beta1"), ckpt.meta_double("adam_beta2"),
            ckpt.meta_double("adam_eps")};
  c.seed = std::stoull(ckpt.meta("seed"));
  Cgan model(c);
  nn::restore_parameters(ckpt, all_parameters(model));
  return model;
}

}  // namespace synthaug::cgan
