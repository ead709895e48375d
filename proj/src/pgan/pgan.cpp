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

#include "synthaug/pgan/pgan.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/numerics/autograd.hpp"
#include "synthaug/numerics/ops.hpp"

namespace synthaug::pgan {

using nn::NoGradGuard;

namespace {

constexpr double kSlope = 0.2;

bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

Tensor lrelu(const Tensor& t) { return nn::leaky_relu(t, kSlope); }

// Appends one channel holding the batch-wide mean of per-feature stddevs.
Tensor minibatch_stddev(const Tensor& h) {
  const int n = h.dim(0), c = h.dim(1), hh = h.dim(2), ww = h.dim(3);
  const int f = c * hh * ww;
  Tensor cols = nn::transpose2d(nn::reshape(h, {n, f}));  // (f, n)
  Tensor mu = nn::scale(nn::sum_per_sample(cols), 1.0 / n);
  Tensor diff = nn::sub(cols, nn::expand_per_sample(mu, {f, n}));
  Tensor var = nn::scale(nn::sum_per_sample(nn::mul(diff, diff)), 1.0 / n);
  Tensor sd = nn::mean(nn::sqrt_act(nn::add_scalar(var, 1e-8)));
  return nn::concat_channels({h, nn::expand_scalar(sd, {n, 1, hh, ww})});
}

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("fade_alpha must lie in [0,1]");
}

}  // namespace

ResolutionSchedule ResolutionSchedule::make(int target_side, std::int64_t images_per_phase) {
  if (target_side < 8 || !is_pow2(target_side)) {
    throw ConfigError("target_side must be a power of two >= 8, got " + std::to_string(target_side));
  }
  if (images_per_phase <= 0) throw ConfigError("images_per_phase must be > 0");
  ResolutionSchedule s;
  s.target_side = target_side;
  s.images_per_phase = images_per_phase;
  for (int side = 4; side <= target_side; side *= 2) s.stages.push_back(side);
  return s;
}

void PganConfig::validate() const {
  schedule();
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (lambda_gp < 0) throw ConfigError("lambda_gp must be >= 0");
  if (pixelnorm_eps <= 0) throw ConfigError("pixelnorm_eps must be > 0");
  for (int side = 4; side <= target_side; side *= 2) {
    if (batch_for(side) < 1) throw ConfigError("batch size must be >= 1 at side " + std::to_string(side));
    if (channels_for(side) < 1) throw ConfigError("channels must be >= 1 at side " + std::to_string(side));
  }
}

namespace {
int lookup(const std::map<int, int>& m, int side, const char* what) {
  auto it = m.upper_bound(side);
  if (it == m.begin()) throw ConfigError(std::string("no ") + what + " configured for side " + std::to_string(side));
  return std::prev(it)->second;
}
}  // namespace

int PganConfig::batch_for(int side) const { return lookup(batch_sizes, side, "batch size"); }
int PganConfig::channels_for(int side) const { return lookup(channels, side, "channel count"); }

// ------------------------------------------------------------------ generator

Generator::Generator(const PganConfig& cfg, Rng& rng)
    : latent_dim_(cfg.latent_dim), target_side_(cfg.target_side), eps_(cfg.pixelnorm_eps) {
  const int c0 = cfg.channels_for(4);
  input_ = nn::Linear(latent_dim_, c0 * 16, rng, cfg.dtype, std::sqrt(2.0) / 4.0);
  int prev = c0;
  for (int side = 4; side <= target_side_; side *= 2) {
    const int c = cfg.channels_for(side);
    Block b;
    b.conv1 = nn::Conv2d(prev, c, 3, 1, 1, rng, cfg.dtype);
    if (side > 4) b.conv2 = nn::Conv2d(c, c, 3, 1, 1, rng, cfg.dtype);
    blocks_.push_back(b);
    to_rgb_.emplace_back(c, 3, 1, 1, 0, rng, cfg.dtype, 1.0);
    prev = c;
  }
  if (cfg.equalized_lr) {
    input_.equalize();
    for (auto& b : blocks_) {
      b.conv1.equalize();
      if (b.conv2.weight.defined()) b.conv2.equalize();
    }
    for (auto& r : to_rgb_) r.equalize();
  }
}

void Generator::set_fade_alpha(double alpha) {
  check_alpha(alpha);
  alpha_ = alpha;
}

void Generator::grow() {
  if (fully_grown()) throw StateError("generator already at target side " + std::to_string(target_side_));
  ++stage_;
  alpha_ = 0.0;
}

Tensor Generator::features(const Tensor& z, int upto) const {
  const int n = z.dim(0);
  Tensor h = nn::pixelwise_norm(z, eps_);
  h = input_.forward(h);
  h = nn::reshape(h, {n, h.dim(1) / 16, 4, 4});
  h = nn::pixelwise_norm(lrelu(h), eps_);
  h = nn::pixelwise_norm(lrelu(blocks_[0].conv1.forward(h)), eps_);
  for (int k = 1; k <= upto; ++k) {
    h = nn::upsample_nearest2x(h);
    h = nn::pixelwise_norm(lrelu(blocks_[k].conv1.forward(h)), eps_);
    h = nn::pixelwise_norm(lrelu(blocks_[k].conv2.forward(h)), eps_);
  }
  return h;
}

Tensor Generator::forward(const Tensor& z) const {
  if (z.ndim() != 2 || z.dim(1) != latent_dim_) {
    throw DimensionError("generator expects (N, " + std::to_string(latent_dim_) + ") latents, got " +
                         nn::shape_str(z.shape()));
  }
  if (stage_ == 0 || alpha_ >= 1.0) return nn::tanh_act(to_rgb_[stage_].forward(features(z, stage_)));
  Tensor prev = features(z, stage_ - 1);
  Tensor old_rgb = nn::upsample_nearest2x(to_rgb_[stage_ - 1].forward(prev));
  Tensor h = nn::upsample_nearest2x(prev);
  h = nn::pixelwise_norm(lrelu(blocks_[stage_].conv1.forward(h)), eps_);
  h = nn::pixelwise_norm(lrelu(blocks_[stage_].conv2.forward(h)), eps_);
  return nn::tanh_act(nn::lerp(old_rgb, to_rgb_[stage_].forward(h), alpha_));
}

nn::ParameterList Generator::parameters() const {
  nn::ParameterList out;
  input_.collect("g.input", out);
  for (int k = 0; k <= stage_; ++k) {
    const std::string p = "g.block" + std::to_string(k);
    blocks_[k].conv1.collect(p + ".conv1", out);
    if (k > 0) blocks_[k].conv2.collect(p + ".conv2", out);
  }
  // The previous head still feeds the output during a fade.
  for (int k = std::max(0, stage_ - 1); k <= stage_; ++k) to_rgb_[k].collect("g.to_rgb" + std::to_string(k), out);
  return out;
}

nn::ParameterList Generator::all_parameters() const {
  nn::ParameterList out;
  input_.collect("g.input", out);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const std::string p = "g.block" + std::to_string(k);
    blocks_[k].conv1.collect(p + ".conv1", out);
    if (k > 0) blocks_[k].conv2.collect(p + ".conv2", out);
  }
  for (std::size_t k = 0; k < to_rgb_.size(); ++k) to_rgb_[k].collect("g.to_rgb" + std::to_string(k), out);
  return out;
}

// -------------------------------------------------------------- discriminator

Discriminator::Discriminator(const PganConfig& cfg, Rng& rng) : mbstd_(cfg.minibatch_stddev) {
  const int c0 = cfg.channels_for(4);
  for (int side = 4; side <= cfg.target_side; side *= 2) {
    const int c = cfg.channels_for(side);
    from_rgb_.emplace_back(3, c, 1, 1, 0, rng, cfg.dtype);
    Block b;
    if (side > 4) {
      b.conv1 = nn::Conv2d(c, c, 3, 1, 1, rng, cfg.dtype);
      b.conv2 = nn::Conv2d(c, cfg.channels_for(side / 2), 3, 1, 1, rng, cfg.dtype);
    }
    blocks_.push_back(b);
  }
  final_conv_ = nn::Conv2d(c0 + (mbstd_ ? 1 : 0), c0, 3, 1, 1, rng, cfg.dtype);
  final_fc_ = nn::Linear(c0 * 16, c0, rng, cfg.dtype);
  final_out_ = nn::Linear(c0, 1, rng, cfg.dtype, 1.0);
  if (cfg.equalized_lr) {
    for (auto& f : from_rgb_) f.equalize();
    for (std::size_t k = 1; k < blocks_.size(); ++k) {
      blocks_[k].conv1.equalize();
      blocks_[k].conv2.equalize();
    }
    final_conv_.equalize();
    final_fc_.equalize();
    final_out_.equalize();
  }
}

void Discriminator::set_fade_alpha(double alpha) {
  check_alpha(alpha);
  alpha_ = alpha;
}

void Discriminator::grow() {
  if (stage_ + 1 >= static_cast<int>(blocks_.size())) throw StateError("discriminator already at target side");
  ++stage_;
  alpha_ = 0.0;
}

Tensor Discriminator::trunk(Tensor h, int from_stage) const {
  for (int k = from_stage; k >= 1; --k) {
    h = lrelu(blocks_[k].conv1.forward(h));
    h = nn::avgpool2x(lrelu(blocks_[k].conv2.forward(h)));
  }
  if (mbstd_) h = minibatch_stddev(h);
  h = lrelu(final_conv_.forward(h));
  h = lrelu(final_fc_.forward(nn::flatten(h)));
  Tensor out = final_out_.forward(h);
  return nn::reshape(out, {out.dim(0)});
}

Tensor Discriminator::forward(const Tensor& x) const {
  if (x.ndim() != 4 || x.dim(1) != 3 || x.dim(2) != side() || x.dim(3) != side()) {
    throw DimensionError("discriminator at side " + std::to_string(side()) + " got " + nn::shape_str(x.shape()));
  }
  Tensor h = lrelu(from_rgb_[stage_].forward(x));
  if (stage_ == 0 || alpha_ >= 1.0) return trunk(h, stage_);
  h = lrelu(blocks_[stage_].conv1.forward(h));
  h = nn::avgpool2x(lrelu(blocks_[stage_].conv2.forward(h)));
  Tensor old = lrelu(from_rgb_[stage_ - 1].forward(nn::avgpool2x(x)));
  return trunk(nn::lerp(old, h, alpha_), stage_ - 1);
}

nn::ParameterList Discriminator::parameters() const {
  nn::ParameterList out;
  for (int k = std::max(0, stage_ - 1); k <= stage_; ++k) from_rgb_[k].collect("d.from_rgb" + std::to_string(k), out);
  for (int k = 1; k <= stage_; ++k) {
    const std::string p = "d.block" + std::to_string(k);
    blocks_[k].conv1.collect(p + ".conv1", out);
    blocks_[k].conv2.collect(p + ".conv2", out);
  }
  final_conv_.collect("d.final_conv", out);
  final_fc_.collect("d.final_fc", out);
  final_out_.collect("d.final_out", out);
  return out;
}

nn::ParameterList Discriminator::all_parameters() const {
  nn::ParameterList out;
  for (std::size_t k = 0; k < from_rgb_.size(); ++k) from_rgb_[k].collect("d.from_rgb" + std::to_string(k), out);
  for (std::size_t k = 1; k < blocks_.size(); ++k) {
    const std::string p = "d.block" + std::to_string(k);
    blocks_[k].conv1.collect(p + ".conv1", out);
    blocks_[k].conv2.collect(p + ".conv2", out);
  }
  final_conv_.collect("d.final_conv", out);
  final_fc_.collect("d.final_fc", out);
  final_out_.collect("d.final_out", out);
  return out;
}

// --------------------------------------------------------------------- model

namespace {
Rng init_rng(const PganConfig& cfg, std::uint64_t tag) {
  cfg.validate();
  return Rng(derive_seed(cfg.seed, tag));
}
Generator make_generator(const PganConfig& cfg) {
  Rng rng = init_rng(cfg, 0x67656e);
  return Generator(cfg, rng);
}
Discriminator make_discriminator(const PganConfig& cfg) {
  Rng rng = init_rng(cfg, 0x646973);
  return Discriminator(cfg, rng);
}
}  // namespace

Pgan::Pgan(const PganConfig& cfg) : config(cfg), generator(make_generator(cfg)), discriminator(make_discriminator(cfg)) {}

void Pgan::grow() {
  generator.grow();
  discriminator.grow();
}

void Pgan::set_fade_alpha(double alpha) {
  generator.set_fade_alpha(alpha);
  discriminator.set_fade_alpha(alpha);
}

Pgan build_pgan(const PganConfig& cfg) {
  Pgan model(cfg);
  log_info("pgan: generator " + std::to_string(nn::parameter_count(model.generator.all_parameters())) +
           " params, discriminator " + std::to_string(nn::parameter_count(model.discriminator.all_parameters())) +
           " params");
  return model;
}

// -------------------------------------------------------------------- losses

Tensor d_loss_wgan(const Tensor& d_real, const Tensor& d_fake) {
  if (!d_real.defined() || !d_fake.defined()) throw ArgumentError("d_loss_wgan: empty batch");
  if (d_real.numel() != d_fake.numel()) throw ArgumentError("d_loss_wgan: batch sizes differ");
  return nn::mean(nn::sub(d_real, d_fake));
}

Tensor g_loss_wgan(const Tensor& d_fake) {
  if (!d_fake.defined()) throw ArgumentError("g_loss_wgan: empty batch");
  return nn::neg(nn::mean(d_fake));
}

Tensor gradient_penalty(const std::function<Tensor(const Tensor&)>& d, const Tensor& samples, double lambda_gp) {
  if (lambda_gp < 0) throw ArgumentError("lambda_gp must be >= 0");
  if (!samples.requires_grad()) throw ArgumentError("gradient_penalty: samples must require grad");
  Tensor g = nn::grad(nn::sum(d(samples)), {samples}, /*create_graph=*/true)[0];
  Tensor norms = nn::sqrt_act(nn::sum_per_sample(nn::mul(g, g)));
  Tensor dev = nn::add_scalar(norms, -1.0);
  return nn::scale(nn::mean(nn::mul(dev, dev)), lambda_gp);
}

// ------------------------------------------------------------------ training

namespace {

// Rows `idx` of an (N, ...) f32 tensor.
Tensor gather(const Tensor& t, const std::vector<int>& idx) {
  const std::size_t per = static_cast<std::size_t>(t.numel() / t.dim(0));
  std::vector<float> out(per * idx.size());
  auto src = t.values<float>();
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::copy_n(src.data() + std::size_t(idx[i]) * per, per, out.data() + i * per);
  nn::Shape shape = t.shape();
  shape[0] = static_cast<int>(idx.size());
  return Tensor::from_vector(shape, std::move(out));
}

nn::ParameterList current_parameters(const Pgan& model) {
  nn::ParameterList all = model.generator.parameters();
  for (const auto& p : model.discriminator.parameters()) all.push_back(p);
  return all;
}

}  // namespace

DStepResult discriminator_step(Pgan& model, nn::Adam& opt_d, const Tensor& real, Rng& rng) {
  const PganConfig& cfg = model.config;
  const int batch = real.dim(0);
  Tensor z = Tensor::randn({batch, cfg.latent_dim}, rng, 1.0, cfg.dtype);
  Tensor fake;
  {
    NoGradGuard ng;
    fake = model.generator.forward(z);
  }
  Tensor anchor = fake.clone();
  if (cfg.gp_anchor == GpAnchor::interpolated) {
    auto a = anchor.mutable_values<float>();
    auto r = real.values<float>();
    const std::size_t per = a.size() / batch;
    for (int i = 0; i < batch; ++i) {
      const float e = static_cast<float>(rng.uniform());
      for (std::size_t j = i * per; j < (i + 1) * per; ++j) a[j] = r[j] + e * (a[j] - r[j]);
    }
  }
  anchor.set_requires_grad(true);
  const auto d_fn = [&](const Tensor& x) { return model.discriminator.forward(x); };
  Tensor objective = d_loss_wgan(d_fn(real), d_fn(fake));
  Tensor gp = cfg.lambda_gp > 0 ? gradient_penalty(d_fn, anchor, cfg.lambda_gp) : Tensor::scalar(0.0);
  Tensor loss = nn::add(nn::neg(objective), gp);
  const nn::ParameterList params = current_parameters(model);
  nn::zero_grads(params);
  nn::backward(loss);
  const double value = loss.item();
  if (std::isfinite(value)) opt_d.step();
  nn::zero_grads(params);
  return {value, gp.item()};
}

double generator_step(Pgan& model, nn::Adam& opt_g, int batch, Rng& rng) {
  Tensor z = Tensor::randn({batch, model.config.latent_dim}, rng, 1.0, model.config.dtype);
  Tensor loss = g_loss_wgan(model.discriminator.forward(model.generator.forward(z)));
  const nn::ParameterList params = current_parameters(model);
  nn::zero_grads(params);
  nn::backward(loss);
  const double value = loss.item();
  if (std::isfinite(value)) opt_g.step();
  nn::zero_grads(params);
  return value;
}

TrainResult train_pgan(Pgan& model, const Tensor& dataset, const std::function<void(const TraceRow&)>& on_step) {
  const PganConfig& cfg = model.config;
  const ResolutionSchedule sched = cfg.schedule();
  const int m = cfg.target_side;
  if (dataset.ndim() != 4 || dataset.dim(1) != 3 || dataset.dim(2) != m || dataset.dim(3) != m) {
    throw DataError("pgan training rasters must be (N, 3, " + std::to_string(m) + ", " + std::to_string(m) + "), got " +
                    nn::shape_str(dataset.shape()));
  }
  if (dataset.dim(0) < 1) throw DataError("pgan training set is empty");
  if (model.generator.stage() != 0) throw StateError("train_pgan expects a freshly built model");

  // Real images at every stage resolution.
  std::vector<Tensor> reals(sched.stages.size());
  {
    NoGradGuard ng;
    reals.back() = dataset.to(nn::Dtype::f32);
    for (int k = static_cast<int>(reals.size()) - 2; k >= 0; --k) reals[k] = nn::avgpool2x(reals[k + 1]);
  }

  Rng rng(derive_seed(cfg.seed, 0x747261696e));
  const int n_data = dataset.dim(0);
  TrainResult result;
  std::int64_t step = 0;

  for (int stage = 0; stage < static_cast<int>(sched.stages.size()); ++stage) {
    if (stage > 0) {
      model.grow();
      result.stage_boundaries.push_back(step);
    }
    const int side = sched.stages[stage];
    const int batch = cfg.batch_for(side);
    nn::Adam opt_g(model.generator.parameters(), cfg.adam);
    nn::Adam opt_d(model.discriminator.parameters(), cfg.adam);

    for (int phase = (stage == 0 ? 1 : 0); phase < 2; ++phase) {
      const bool fading = phase == 0;
      std::int64_t shown = 0;
      while (shown < sched.images_per_phase) {
        const double alpha = fading ? std::min(1.0, double(shown) / double(sched.images_per_phase)) : 1.0;
        model.set_fade_alpha(alpha);

        std::vector<int> idx(batch);
        for (int& i : idx) i = rng.uniform_int(0, n_data - 1);
        Tensor real;
        {
          NoGradGuard ng;
          real = gather(reals[stage], idx);
          if (fading && stage > 0) real = nn::lerp(nn::upsample_nearest2x(gather(reals[stage - 1], idx)), real, alpha);
        }

        const DStepResult d = discriminator_step(model, opt_d, real, rng);
        if (!std::isfinite(d.d_loss)) {
          throw TrainingError("pgan discriminator loss is not finite", "step " + std::to_string(step));
        }
        const double g_val = generator_step(model, opt_g, batch, rng);
        if (!std::isfinite(g_val)) throw TrainingError("pgan generator loss is not finite", "step " + std::to_string(step));

        TraceRow row{step, side, alpha, d.d_loss, g_val, d.gp};
        result.trace.push_back(row);
        if (on_step) on_step(row);
        shown += batch;
        result.images_shown += batch;
        ++step;
      }
    }
  }
  model.set_fade_alpha(1.0);
  return result;
}

void write_trace_csv(const std::filesystem::path& path, const TrainResult& result, const std::string& header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << "\n" << "step,stage_side,fade_alpha,d_loss,g_loss,gp\n";
  out << std::setprecision(9);
  std::size_t next = 0;
  for (const auto& r : result.trace) {
    if (next < result.stage_boundaries.size() && result.stage_boundaries[next] == r.step) {
      out << "# stage_boundary step=" << r.step << " side=" << r.stage_side << "\n";
      ++next;
    }
    out << r.step << "," << r.stage_side << "," << r.fade_alpha << "," << r.d_loss << "," << r.g_loss << "," << r.gp
        << "\n";
  }
}

// --------------------------------------------------------------- persistence

namespace {

std::string join_map(const std::map<int, int>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += (s.empty() ? "" : ";") + std::to_string(k) + ":" + std::to_string(v);
  return s;
}

std::map<int, int> split_map(const std::string& s) {
  std::map<int, int> m;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw CheckpointError("bad map entry '" + item + "'");
    m[std::stoi(item.substr(0, colon))] = std::stoi(item.substr(colon + 1));
  }
  return m;
}

std::map<std::string, std::string> config_metadata(const PganConfig& c) {
  std::ostringstream lr;
  lr << std::setprecision(17) << c.adam.lr << ";" << c.adam.beta1 << ";" << c.adam.beta2 << ";" << c.adam.eps;
  std::ostringstream gp, eps;
  gp << std::setprecision(17) << c.lambda_gp;
  eps << std::setprecision(17) << c.pixelnorm_eps;
  return {{"kind", "pgan"},
          {"target_side", std::to_string(c.target_side)},
          {"latent_dim", std::to_string(c.latent_dim)},
          {"images_per_phase", std::to_string(c.images_per_phase)},
          {"batch_sizes", join_map(c.batch_sizes)},
          {"channels", join_map(c.channels)},
          {"lambda_gp", gp.str()},
          {"gp_anchor", c.gp_anchor == GpAnchor::generated ? "generated" : "interpolated"},
          {"pixelnorm_eps", eps.str()},
          {"minibatch_stddev", c.minibatch_stddev ? "1" : "0"},
          {"equalized_lr", c.equalized_lr ? "1" : "0"},
          {"adam", lr.str()},
          {"seed", std::to_string(c.seed)}};
}

}  // namespace

std::string format_config(const PganConfig& cfg) {
  std::string s;
  for (const auto& [k, v] : config_metadata(cfg)) s += k + "=" + v + "\n";
  return s;
}

nn::Checkpoint make_pgan_checkpoint(const Pgan& model) {
  auto meta = config_metadata(model.config);
  meta["stage"] = std::to_string(model.generator.stage());
  std::ostringstream a;
  a << std::setprecision(17) << model.generator.fade_alpha();
  meta["fade_alpha"] = a.str();
  nn::ParameterList params = model.generator.all_parameters();
  for (const auto& p : model.discriminator.all_parameters()) params.push_back(p);
  return nn::make_checkpoint(params, std::move(meta));
}

Pgan load_pgan(const nn::Checkpoint& ckpt) {
  if (ckpt.meta("kind") != "pgan") throw CheckpointError("checkpoint is not a pgan model");
  PganConfig c;
  c.target_side = ckpt.meta_int("target_side");
  c.latent_dim = ckpt.meta_int("latent_dim");
  c.images_per_phase = std::stoll(ckpt.meta("images_per_phase"));
  c.batch_sizes = split_map(ckpt.meta("batch_sizes"));
  c.channels = split_map(ckpt.meta("channels"));
  c.lambda_gp = ckpt.meta_double("lambda_gp");
  c.gp_anchor = ckpt.meta("gp_anchor") == "generated" ? GpAnchor::generated : GpAnchor::interpolated;
  c.pixelnorm_eps = ckpt.meta_double("pixelnorm_eps");
  c.minibatch_stddev = ckpt.meta("minibatch_stddev") == "1";
  c.equalized_lr = ckpt.meta("equalized_lr") == "1";
  std::istringstream adam(ckpt.meta("adam"));
  char sep;
  adam >> c.adam.lr >> sep >> c.adam.beta1 >> sep >> c.adam.beta2 >> sep >> c.adam.eps;
  c.seed = std::stoull(ckpt.meta("seed"));
  Pgan model(c);
  for (int s = 0; s < ckpt.meta_int("stage"); ++s) model.grow();
  model.set_fade_alpha(ckpt.meta_double("fade_alpha"));
  nn::ParameterList params = model.generator.all_parameters();
  for (const auto& p : model.discriminator.all_parameters()) params.push_back(p);
  nn::restore_parameters(ckpt, params);
  return model;
}

Tensor sample_raw_labels(const Generator& g, int n, std::uint64_t seed) {
  if (n <= 0) throw ArgumentError("sample_raw_labels: n must be > 0");
  NoGradGuard ng;
  Rng rng(seed);
  const int latent = g.parameters().front().tensor.dim(0);
  Tensor z = Tensor::randn({n, latent}, rng);
  constexpr int kChunk = 128;
  if (n <= kChunk) return g.forward(z);
  std::vector<float> out;
  const auto zv = z.values<float>();
  for (int start = 0; start < n; start += kChunk) {
    const int count = std::min(kChunk, n - start);
    std::vector<float> part(zv.begin() + std::size_t(start) * latent, zv.begin() + std::size_t(start + count) * latent);
    Tensor y = g.forward(Tensor::from_vector({count, latent}, std::move(part)));
    auto yv = y.values<float>();
    out.insert(out.end(), yv.begin(), yv.end());
  }
  return Tensor::from_vector({n, 3, g.side(), g.side()}, std::move(out));
}

}  // namespace synthaug::pgan
