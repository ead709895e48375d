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

#include "synthaug/pipeline/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "synthaug/common/error.hpp"
#include "synthaug/common/util.hpp"

namespace synthaug::pipeline {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(" \t\r") - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string item; std::getline(in, item, sep);) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw ConfigError("not a number: '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw ConfigError("not a boolean: '" + s + "'");
}

std::string fmt(double v) {
  std::ostringstream o;
  o << std::setprecision(17) << v;
  return o.str();
}

template <typename T>
std::string fmt_list(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>) s += fmt(v[i]);
    else s += std::to_string(v[i]);
  }
  return s;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_number<T>(item));
  return out;
}

std::string fmt_map(const std::map<int, int>& m) {
  std::string s;
  for (const auto& [k, v] : m) s += (s.empty() ? "" : ",") + std::to_string(k) + ":" + std::to_string(v);
  return s;
}

std::map<int, int> parse_map(const std::string& s) {
  std::map<int, int> out;
  for (const auto& item : split(s, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("expected side:value pairs, got '" + item + "'");
    out[parse_number<int>(trim(item.substr(0, colon)))] = parse_number<int>(trim(item.substr(colon + 1)));
  }
  return out;
}

// Typed key builders over a member accessor.
template <typename F>
ConfigKey int_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help), [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); },
          [field](RunConfig& c, const std::string& v) {
            field(c) = parse_number<std::remove_reference_t<decltype(field(c))>>(v);
          }};
}

template <typename F>
ConfigKey double_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help), [field](const RunConfig& c) { return fmt(field(const_cast<RunConfig&>(c))); },
          [field](RunConfig& c, const std::string& v) { field(c) = parse_number<double>(v); }};
}

template <typename F>
ConfigKey bool_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help),
          [field](const RunConfig& c) -> std::string { return field(const_cast<RunConfig&>(c)) ? "true" : "false"; },
          [field](RunConfig& c, const std::string& v) { field(c) = parse_bool(v); }};
}

template <typename F>
ConfigKey string_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help), [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); },
          [field](RunConfig& c, const std::string& v) { field(c) = v; }};
}

template <typename T, typename F>
ConfigKey list_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help), [field](const RunConfig& c) { return fmt_list(field(const_cast<RunConfig&>(c))); },
          [field](RunConfig& c, const std::string& v) { field(c) = parse_list<T>(v); }};
}

template <typename F>
ConfigKey map_key(std::string name, std::string help, F field) {
  return {std::move(name), std::move(help), [field](const RunConfig& c) { return fmt_map(field(const_cast<RunConfig&>(c))); },
          [field](RunConfig& c, const std::string& v) { field(c) = parse_map(v); }};
}

#define FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  k.push_back(int_key("seed", "base seed for every stochastic stage", FIELD(seed)));

  k.push_back(string_key("data.source", "toy or dir", FIELD(data.source)));
  k.push_back(string_key("data.dir", "tile directory for source=dir", FIELD(data.dir)));
  k.push_back(string_key("data.manifest", "split manifest file (empty: Potsdam split)", FIELD(data.manifest)));
  k.push_back(int_key("data.downsample", "nearest-neighbour downsampling factor for loaded tiles", FIELD(data.downsample)));
  k.push_back(int_key("data.toy_train_tiles", "procedural training tiles", FIELD(data.toy_train_tiles)));
  k.push_back(int_key("data.toy_test_tiles", "procedural test tiles", FIELD(data.toy_test_tiles)));
  k.push_back(int_key("data.toy_tile_side", "procedural tile side in pixels", FIELD(data.toy_tile_side)));
  k.push_back(int_key("data.toy_vehicles_min", "fewest vehicles per procedural tile", FIELD(data.toy_vehicles_min)));
  k.push_back(int_key("data.toy_vehicles_max", "most vehicles per procedural tile", FIELD(data.toy_vehicles_max)));
  k.push_back(int_key("data.chip_side", "chip side; must equal the GAN and detector sides", FIELD(data.chip_side)));
  k.push_back(int_key("data.chip_stride", "chipping stride", FIELD(data.chip_stride)));

  k.push_back(int_key("pgan.target_side", "final PGAN resolution", FIELD(pgan.target_side)));
  k.push_back(int_key("pgan.latent_dim", "latent size", FIELD(pgan.latent_dim)));
  k.push_back(int_key("pgan.images_per_phase", "images shown per fade or stabilize phase", FIELD(pgan.images_per_phase)));
  k.push_back(map_key("pgan.batch_sizes", "side:batch pairs", FIELD(pgan.batch_sizes)));
  k.push_back(map_key("pgan.channels", "side:feature-map pairs", FIELD(pgan.channels)));
  k.push_back(double_key("pgan.lambda_gp", "gradient penalty weight", FIELD(pgan.lambda_gp)));
  k.push_back({"pgan.gp_anchor", "generated or interpolated",
               [](const RunConfig& c) -> std::string {
                 return c.pgan.gp_anchor == pgan::GpAnchor::generated ? "generated" : "interpolated";
               },
               [](RunConfig& c, const std::string& v) {
                 if (v == "generated") c.pgan.gp_anchor = pgan::GpAnchor::generated;
                 else if (v == "interpolated") c.pgan.gp_anchor = pgan::GpAnchor::interpolated;
                 else throw ConfigError("pgan.gp_anchor must be generated or interpolated");
               }});
  k.push_back(bool_key("pgan.minibatch_stddev", "minibatch standard deviation feature", FIELD(pgan.minibatch_stddev)));
  k.push_back(bool_key("pgan.equalized_lr", "equalized learning rate", FIELD(pgan.equalized_lr)));
  k.push_back(double_key("pgan.lr", "Adam step size", FIELD(pgan.adam.lr)));
  k.push_back(double_key("pgan.beta1", "Adam beta1", FIELD(pgan.adam.beta1)));
  k.push_back(double_key("pgan.beta2", "Adam beta2", FIELD(pgan.adam.beta2)));

  k.push_back(int_key("cgan.crop_side", "training crop side", FIELD(cgan.crop_side)));
  k.push_back(int_key("cgan.batch_size", "batch size", FIELD(cgan.batch_size)));
  k.push_back(double_key("cgan.lambda_fm", "feature-matching weight", FIELD(cgan.lambda_fm)));
  k.push_back(int_key("cgan.steps", "optimizer steps", FIELD(cgan.steps)));
  k.push_back(int_key("cgan.min_vehicles_per_crop", "vehicles required in each training crop", FIELD(cgan.min_vehicles_per_crop)));
  k.push_back(int_key("cgan.num_scales", "discriminator scales", FIELD(cgan.num_scales)));
  k.push_back(int_key("cgan.base_channels", "generator and discriminator width", FIELD(cgan.base_channels)));
  k.push_back(int_key("cgan.residual_blocks", "generator residual blocks", FIELD(cgan.residual_blocks)));
  k.push_back(bool_key("cgan.local_enhancer", "add the full-resolution enhancer", FIELD(cgan.local_enhancer)));
  k.push_back(double_key("cgan.lr", "Adam step size", FIELD(cgan.adam.lr)));
  k.push_back(double_key("cgan.beta1", "Adam beta1", FIELD(cgan.adam.beta1)));

  k.push_back(double_key("purity.tol", "per-channel palette distance tolerance", FIELD(purity.tol)));
  k.push_back(double_key("purity.min_pure_fraction", "fraction of pixels that must be pure", FIELD(purity.min_pure_fraction)));

  k.push_back(int_key("synth.batch", "raw labels sampled per round", FIELD(synth.batch)));
  k.push_back(int_key("synth.max_raw_factor", "raw-label budget per requested pair", FIELD(synth.max_raw_factor)));
  k.push_back(double_key("synth.acceptance_floor", "minimum purity acceptance rate", FIELD(synth.acceptance_floor)));
  k.push_back(bool_key("synth.d4_gan_data", "train the GANs on dihedral copies", FIELD(synth.d4_gan_data)));
  k.push_back(int_key("synth.cgan_crops_per_tile", "CGAN training crops drawn per tile", FIELD(synth.cgan_crops_per_tile)));

  k.push_back(int_key("detector.grid_stride", "anchor grid stride", FIELD(detector.grid_stride)));
  k.push_back(list_key<double>("detector.anchor_sizes", "anchor sides; empty derives them from the training boxes",
                               FIELD(detector.anchor_sizes)));
  k.push_back(double_key("detector.score_thresh", "minimum detection score", FIELD(detector.score_thresh)));
  k.push_back(double_key("detector.nms_iou", "suppression IoU", FIELD(detector.nms_iou)));
  k.push_back(int_key("detector.max_detections", "detections kept per chip", FIELD(detector.max_detections)));
  k.push_back(int_key("detector.steps", "optimizer steps", FIELD(detector.steps)));
  k.push_back(int_key("detector.batch_size", "batch size", FIELD(detector.batch_size)));
  k.push_back(list_key<int>("detector.channels", "four backbone widths", FIELD(detector.channels)));
  k.push_back(bool_key("detector.augment_d4", "random dihedral augmentation", FIELD(detector.augment_d4)));
  k.push_back(int_key("detector.neg_pos_ratio", "hard negatives per positive", FIELD(detector.neg_pos_ratio)));
  k.push_back(double_key("detector.lr", "Adam step size", FIELD(detector.adam.lr)));

  k.push_back(list_key<int>("grid.subsets", "nested training tile counts", FIELD(grid.subsets)));
  k.push_back(list_key<double>("grid.ratios", "synthetic to real ratios", FIELD(grid.ratios)));
  k.push_back(int_key("grid.seeds", "replicates per cell", FIELD(grid.seeds)));
  k.push_back(int_key("grid.workers", "cells trained concurrently", FIELD(grid.workers)));

  k.push_back(double_key("eval.iou", "IoU for mAP and recall", FIELD(eval.iou)));
  k.push_back(int_key("eval.max_dets", "detections per image for recall", FIELD(eval.max_dets)));
  k.push_back(string_key("fid.extractor", "feature extractor id", FIELD(extractor)));

  std::sort(k.begin(), k.end(), [](const ConfigKey& a, const ConfigKey& b) { return a.name < b.name; });
  return k;
}

#undef FIELD

const ConfigKey& find_key(const std::string& name) {
  const auto& keys = config_keys();
  const auto it = std::lower_bound(keys.begin(), keys.end(), name,
                                   [](const ConfigKey& k, const std::string& n) { return k.name < n; });
  if (it == keys.end() || it->name != name) throw ConfigError("unknown config key '" + name + "'");
  return *it;
}

}  // namespace

void ExperimentGrid::validate() const {
  if (subsets.empty()) throw ConfigError("grid.subsets is empty");
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    if (subsets[i] < 1 || (i && subsets[i] <= subsets[i - 1])) {
      throw ConfigError("grid.subsets must be positive and strictly increasing");
    }
  }
  if (std::find(ratios.begin(), ratios.end(), 0.0) == ratios.end()) throw ConfigError("grid.ratios must include 0");
  for (double r : ratios) {
    if (r < 0) throw ConfigError("grid.ratios must be >= 0");
  }
  if (seeds < 1 || workers < 1) throw ConfigError("grid.seeds and grid.workers must be >= 1");
}

void RunConfig::validate() const {
  if (data.source != "toy" && data.source != "dir") throw ConfigError("data.source must be toy or dir");
  if (data.source == "dir" && data.dir.empty()) throw ConfigError("data.dir is required for data.source=dir");
  if (data.toy_vehicles_min < 0 || data.toy_vehicles_max < data.toy_vehicles_min) {
    throw ConfigError("need 0 <= data.toy_vehicles_min <= data.toy_vehicles_max");
  }
  if (data.chip_side < 8 || data.chip_stride < 1 || data.downsample < 1) throw ConfigError("bad chip geometry");
  if (pgan.target_side != data.chip_side || cgan.crop_side != data.chip_side || detector.input_side != data.chip_side) {
    throw ConfigError("pgan.target_side, cgan.crop_side and the detector input must all equal data.chip_side (" +
                      std::to_string(data.chip_side) + ")");
  }
  if (synth.batch < 1 || synth.max_raw_factor < 1) throw ConfigError("synth.batch and synth.max_raw_factor must be >= 1");
  pgan.validate();
  cgan.validate();
  purity.validate();
  detector.validate();
  grid.validate();
  if (!(eval.iou > 0 && eval.iou <= 1) || eval.max_dets < 1) throw ConfigError("bad eval settings");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  const ConfigKey& k = find_key(key);
  try {
    k.set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
  // The chip side drives every model side.
  if (key == "data.chip_side") {
    cfg.pgan.target_side = cfg.cgan.crop_side = cfg.detector.input_side = cfg.data.chip_side;
  }
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string section;
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find_first_of("#;");
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    try {
      apply_override(cfg, section.empty() ? key : section + "." + key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    apply_config_text(cfg, buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const RunConfig& cfg) {
  std::string s;
  for (const auto& k : config_keys()) s += k.name + " = " + k.get(cfg) + "\n";
  return s;
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a64(format_config(cfg))); }

}  // namespace synthaug::pipeline
