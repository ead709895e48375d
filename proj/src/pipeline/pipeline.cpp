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

#include "synthaug/pipeline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "synthaug/common/error.hpp"
#include "synthaug/common/rng.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/dataset/io.hpp"
#include "synthaug/dataset/toy.hpp"
#include "synthaug/metrics/detection.hpp"
#include "synthaug/metrics/fid.hpp"

namespace synthaug::pipeline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed tags, one per stochastic stage.
constexpr std::uint64_t kTagToyTrain = 0x746f7931, kTagToyTest = 0x746f7932, kTagSubsets = 0x73756273,
                        kTagPgan = 0x7067616e, kTagCgan = 0x6367616e, kTagCrops = 0x63726f70,
                        kTagSynth = 0x73796e74, kTagDetector = 0x64657463;

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
  return std::string(buf, end);
}

// Quoted CSV field with doubled inner quotes; newlines become spaces.
std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += (c == '\n' || c == '\r') ? ' ' : c;
  }
  return out + "\"";
}

std::string unquoted(const std::string& s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return s;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    out += s[i];
    if (s[i] == '"' && s[i + 1] == '"') ++i;
  }
  return out;
}

std::ofstream open_csv(const fs::path& path, const std::string& header) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw PipelineError("cannot write " + path.string());
  out << header << "\n";
  return out;
}

std::vector<data::ImageChip> unstack(const nn::Tensor& t) {
  const int n = t.dim(0), s = t.dim(2);
  const auto v = t.to_vector();
  std::vector<data::ImageChip> out;
  const std::size_t per = std::size_t(3) * s * s;
  for (int i = 0; i < n; ++i) {
    data::ImageChip c(s, s);
    std::copy(v.begin() + i * per, v.begin() + (i + 1) * per, c.data.begin());
    out.push_back(std::move(c));
  }
  return out;
}

std::string pool_digest(const SynthesisResult& s) {
  std::string bytes;
  for (const auto& m : s.masks) bytes.append(reinterpret_cast<const char*>(m.data.data()), m.data.size());
  for (const auto& im : s.images) {
    bytes.append(reinterpret_cast<const char*>(im.data.data()), im.data.size() * sizeof(float));
  }
  return hex64(fnv1a64(bytes));
}

}  // namespace

// ------------------------------------------------------------------- data

data::Split prepare_split(const RunConfig& cfg) {
  const auto& d = cfg.data;
  if (d.source == "toy") {
    data::Split split;
    data::ToySceneSpec spec;
    spec.vehicles_min = d.toy_vehicles_min;
    spec.vehicles_max = d.toy_vehicles_max;
    for (int i = 0; i < d.toy_train_tiles; ++i) {
      split.train.push_back(data::toy_scene_generate(derive_seed(derive_seed(cfg.seed, kTagToyTrain), i), d.toy_tile_side,
                                                     spec, "toy_train_" + std::to_string(i))
                                .tile);
    }
    for (int i = 0; i < d.toy_test_tiles; ++i) {
      split.test.push_back(data::toy_scene_generate(derive_seed(derive_seed(cfg.seed, kTagToyTest), i), d.toy_tile_side,
                                                    spec, "toy_test_" + std::to_string(i))
                               .tile);
    }
    return split;
  }
  auto tiles = data::load_tiles(d.dir);
  if (d.downsample > 1) {
    for (auto& t : tiles) t = data::downsample_nearest(t, d.downsample);
  }
  data::SplitManifest manifest = data::potsdam_manifest();
  if (!d.manifest.empty()) {
    std::ifstream in(d.manifest);
    if (!in) throw ManifestError("cannot read manifest " + d.manifest);
    std::stringstream buf;
    buf << in.rdbuf();
    manifest = data::parse_manifest(buf.str());
  }
  return data::split_train_test(tiles, manifest);
}

std::vector<data::Tile> subset_order(const std::vector<data::Tile>& train, std::uint64_t seed) {
  std::vector<int> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  Rng rng(derive_seed(seed, kTagSubsets));
  rng.shuffle(idx);
  std::vector<data::Tile> out;
  for (int i : idx) out.push_back(train[i]);
  return out;
}

std::vector<data::Chip> chip_tiles(const std::vector<data::Tile>& tiles, int side, int stride) {
  std::vector<data::Chip> out;
  for (const auto& t : tiles) {
    auto c = data::chip(t, side, stride);
    out.insert(out.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return out;
}

std::vector<detector::LabeledChip> label_chips(const std::vector<data::Chip>& chips, const std::string& prefix) {
  std::vector<detector::LabeledChip> out;
  for (std::size_t i = 0; i < chips.size(); ++i) {
    out.push_back(detector::labeled_chip(prefix + std::to_string(i), chips[i].image, chips[i].mask));
  }
  return out;
}

int count_vehicles(const std::vector<detector::LabeledChip>& chips) {
  std::size_t n = 0;
  for (const auto& c : chips) n += c.boxes.size();
  return static_cast<int>(n);
}

std::vector<data::ImageChip> images_of(const std::vector<detector::LabeledChip>& chips) {
  std::vector<data::ImageChip> out;
  for (const auto& c : chips) out.push_back(c.image);
  return out;
}

std::vector<detector::LabeledChip> label_synthetic(const SynthesisResult& synth, const std::string& prefix) {
  std::vector<detector::LabeledChip> out;
  for (std::size_t i = 0; i < synth.masks.size(); ++i) {
    out.push_back(detector::labeled_chip(prefix + std::to_string(i), synth.images[i], synth.masks[i]));
  }
  return out;
}

// -------------------------------------------------------------- synthesis

nn::Tensor pgan_training_set(const std::vector<data::LabelMask>& masks, bool d4) {
  if (masks.empty()) throw DataError("no masks to train the PGAN on");
  const int s = masks[0].height;
  std::vector<float> v;
  int n = 0;
  for (const auto& m : masks) {
    if (m.height != s || m.width != s) throw DimensionError("PGAN training masks differ in size");
    for (int k = 0; k < (d4 ? 8 : 1); ++k) {
      const auto r = labelpost::render_palette(k ? data::d4_transform(m, k) : m);
      v.insert(v.end(), r.data.begin(), r.data.end());
      ++n;
    }
  }
  return nn::Tensor::from_vector({n, 3, s, s}, std::move(v));
}

std::vector<data::Chip> cgan_training_crops(const std::vector<data::Tile>& tiles, const RunConfig& cfg,
                                            std::uint64_t seed) {
  std::vector<data::Chip> out;
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto crops = data::random_vehicle_crops(tiles[i], cfg.cgan.crop_side, cfg.cgan.min_vehicles_per_crop,
                                                  cfg.synth.cgan_crops_per_tile, derive_seed(seed, i));
    for (const auto& c : crops) {
      if (!cfg.synth.d4_gan_data) {
        out.push_back(c);
        continue;
      }
      for (auto& [image, mask] : data::d4_augment(c.image, c.mask)) out.push_back({image, mask, c.origin_y, c.origin_x});
    }
  }
  return out;
}

SynthesisResult run_joint_synthesis(const pgan::Pgan& pgan_model, const cgan::Cgan& cgan_model, int n_pairs,
                                    const labelpost::PurityConfig& purity, std::uint64_t seed,
                                    const SynthesisOptions& options) {
  if (n_pairs < 0) throw ArgumentError("n_pairs must be >= 0");
  SynthesisResult out;
  if (n_pairs == 0) return out;
  if (pgan_model.generator.side() != cgan_model.config.crop_side) {
    throw DimensionError("PGAN emits " + std::to_string(pgan_model.generator.side()) + " px labels but the CGAN expects " +
                         std::to_string(cgan_model.config.crop_side));
  }
  purity.validate();
  const std::int64_t budget = std::int64_t(options.max_raw_factor) * n_pairs;
  std::int64_t accepted = 0;
  for (std::uint64_t round = 0; int(out.masks.size()) < n_pairs && out.raw_sampled < budget; ++round) {
    const int n = static_cast<int>(std::min<std::int64_t>(options.batch, budget - out.raw_sampled));
    const auto raw = unstack(pgan::sample_raw_labels(pgan_model.generator, n, derive_seed(seed, round)));
    auto filtered = labelpost::filter_and_snap(raw, purity);
    out.raw_sampled += n;
    accepted += static_cast<std::int64_t>(filtered.accepted.size());
    for (auto& m : filtered.accepted) {
      if (int(out.masks.size()) == n_pairs) break;
      out.masks.push_back(std::move(m));
    }
  }
  out.acceptance_rate = double(accepted) / double(out.raw_sampled);
  if (out.acceptance_rate < options.acceptance_floor) {
    std::ostringstream msg;
    msg << "label acceptance rate " << out.acceptance_rate << " is below the floor " << options.acceptance_floor
        << "; loosen purity.tol or purity.min_pure_fraction, or train the PGAN longer";
    throw PipelineError(msg.str());
  }
  if (int(out.masks.size()) < n_pairs) {
    log_warn("synthesis budget spent with " + std::to_string(out.masks.size()) + " of " + std::to_string(n_pairs) +
             " pairs accepted");
  }
  out.images = cgan::translate(cgan_model, out.masks);
  return out;
}

// -------------------------------------------------------------------- FID

std::vector<FidRow> fid_study(const std::vector<data::ImageChip>& real, const std::vector<FidInput>& pools,
                              const metrics::FeatureExtractor& extractor) {
  if (real.size() < 2) throw ArgumentError("fid_study needs at least 2 real images");
  const auto real_stats = metrics::gaussian_stats(metrics::extract_features(real, extractor));
  std::vector<FidRow> rows;
  for (const auto& p : pools) {
    if (p.pool.size() < 2) {
      throw ArgumentError("fid_study: pool '" + p.subset + "' has " + std::to_string(p.pool.size()) +
                          " images, needs at least 2");
    }
    const auto s = metrics::gaussian_stats(metrics::extract_features(p.pool, extractor));
    rows.push_back({p.subset, p.images, p.vehicles, static_cast<int>(p.pool.size()), metrics::fid(real_stats, s)});
  }
  return rows;
}

void write_fid_csv(const fs::path& path, const std::vector<FidRow>& rows, const std::string& header) {
  auto out = open_csv(path, header);
  out << "subset,images / vehicles,pool_size,fid\n";
  for (const auto& r : rows) out << r.subset << "," << r.counts() << "," << r.pool_size << "," << num(r.fid) << "\n";
}

// ------------------------------------------------------------------ sweep

const CellResult* RunReport::find(int subset, double ratio, int replicate) const {
  for (const auto& c : cells) {
    if (c.subset == subset && c.ratio == ratio && c.replicate == replicate) return &c;
  }
  return nullptr;
}

std::vector<double> RunReport::per_seed_map(int subset, double ratio) const {
  std::vector<double> out;
  for (int r = 0; r < seeds; ++r) {
    const auto* c = find(subset, ratio, r);
    out.push_back(c ? c->map : kNaN);
  }
  return out;
}

double RunReport::mean_map(int subset, double ratio) const {
  double sum = 0;
  int n = 0;
  for (double v : per_seed_map(subset, ratio)) {
    if (!std::isnan(v)) sum += v, ++n;
  }
  return n ? sum / n : kNaN;
}

namespace {

struct SubsetModels {
  std::vector<detector::LabeledChip> real;
  std::vector<detector::LabeledChip> pool;
};

// Loads a cached checkpoint when its run key matches, else trains and saves.
template <typename Train>
nn::Checkpoint cached(const fs::path& path, const std::string& key, bool reuse, Train train) {
  if (reuse && !path.empty() && fs::exists(path)) {
    auto ck = nn::load_checkpoint(path);
    if (ck.metadata.count("run_key") && ck.metadata.at("run_key") == key) {
      log_info("reusing " + path.string());
      return ck;
    }
  }
  nn::Checkpoint ck = train();
  ck.metadata["run_key"] = key;
  if (!path.empty()) {
    fs::create_directories(path.parent_path());
    nn::save_checkpoint(path, ck);
  }
  return ck;
}

std::string ids_key(const std::vector<data::Tile>& tiles) {
  std::string s;
  for (const auto& t : tiles) s += t.id + ";";
  return s;
}

SubsetModels prepare_subset(const RunConfig& cfg, const std::vector<data::Tile>& tiles, int k, SubsetInfo& info,
                            const SweepOptions& opt) {
  SubsetModels m;
  const auto chips = chip_tiles(tiles, cfg.data.chip_side, cfg.data.chip_stride);
  m.real = label_chips(chips, "s" + std::to_string(k) + "_real_");
  info.chips = static_cast<int>(m.real.size());
  info.vehicles = count_vehicles(m.real);
  for (const auto& t : tiles) info.tile_ids.push_back(t.id);

  int pool_size = 0;
  for (double r : cfg.grid.ratios) pool_size = std::max(pool_size, static_cast<int>(std::lround(r * info.chips)));
  info.pool_size = 0;
  info.fid = kNaN;
  if (pool_size == 0) return m;

  const fs::path dir = opt.work_dir.empty() ? fs::path() : opt.work_dir / ("subset_" + std::to_string(k));
  const std::string tiles_key = ids_key(tiles) + (cfg.synth.d4_gan_data ? "d4" : "");
  try {
    pgan::PganConfig pc = cfg.pgan;
    pc.seed = derive_seed(cfg.seed, kTagPgan + k);
    const auto pgan_ck = cached(dir.empty() ? dir : dir / "pgan.ckpt", hex64(fnv1a64(pgan::format_config(pc) + tiles_key)),
                                opt.reuse_checkpoints, [&] {
                                  std::vector<data::LabelMask> masks;
                                  for (const auto& c : chips) masks.push_back(c.mask);
                                  pgan::Pgan model = pgan::build_pgan(pc);
                                  log_info("subset " + std::to_string(k) + ": training PGAN");
                                  const auto result = pgan::train_pgan(model, pgan_training_set(masks, cfg.synth.d4_gan_data));
                                  if (!dir.empty()) {
                                    pgan::write_trace_csv(dir / "pgan_trace.csv", result,
                                                          report_header(config_hash(cfg), cfg.extractor));
                                  }
                                  return pgan::make_pgan_checkpoint(model);
                                });
    const pgan::Pgan pgan_model = pgan::load_pgan(pgan_ck);

    cgan::CganConfig cc = cfg.cgan;
    cc.seed = derive_seed(cfg.seed, kTagCgan + k);
    const auto crop_seed = derive_seed(cfg.seed, kTagCrops + k);
    const auto cgan_ck = cached(
        dir.empty() ? dir : dir / "cgan.ckpt",
        hex64(fnv1a64(cgan::format_config(cc) + tiles_key + std::to_string(cfg.synth.cgan_crops_per_tile))),
        opt.reuse_checkpoints, [&] {
          cgan::Cgan model = cgan::build_cgan(cc);
          log_info("subset " + std::to_string(k) + ": training CGAN");
          const auto trace = cgan::train_cgan(model, cgan::make_pairs(cgan_training_crops(tiles, cfg, crop_seed)));
          if (!dir.empty()) {
            cgan::write_trace_csv(dir / "cgan_trace.csv", trace, report_header(config_hash(cfg), cfg.extractor));
          }
          return cgan::make_cgan_checkpoint(model);
        });
    const cgan::Cgan cgan_model = cgan::load_cgan(cgan_ck);

    log_info("subset " + std::to_string(k) + ": synthesizing " + std::to_string(pool_size) + " pairs");
    const auto synth = run_joint_synthesis(pgan_model, cgan_model, pool_size, cfg.purity,
                                           derive_seed(cfg.seed, kTagSynth + k), cfg.synth);
    info.acceptance_rate = synth.acceptance_rate;
    info.pool_size = static_cast<int>(synth.masks.size());
    info.pool_digest = pool_digest(synth);
    m.pool = label_synthetic(synth, "s" + std::to_string(k) + "_synth_");
    if (synth.images.size() >= 2) {
      const auto extractor = metrics::make_extractor(cfg.extractor);
      info.fid = fid_study(images_of(m.real), {{"", 0, 0, synth.images}}, *extractor)[0].fid;
    }
    if (!dir.empty() && opt.write_samples && synth.masks.size() >= 6) {
      write_sample_sheet(dir, "samples", emit_sample_grids(synth.masks, synth.images, 2, 3));
    }
  } catch (const Error& e) {
    info.synthesis_error = e.what();
    log_warn("subset " + std::to_string(k) + ": synthesis failed: " + e.what());
  }
  return m;
}

}  // namespace

RunReport augmentation_sweep(const RunConfig& cfg, const SweepOptions& opt) {
  cfg.validate();
  RunReport report;
  report.config_hash = config_hash(cfg);
  report.extractor = cfg.extractor;
  report.ratios = cfg.grid.ratios;
  report.seeds = cfg.grid.seeds;

  const auto split = prepare_split(cfg);
  if (int(split.train.size()) < cfg.grid.subsets.back()) {
    throw ConfigError("largest subset needs " + std::to_string(cfg.grid.subsets.back()) + " training tiles, have " +
                      std::to_string(split.train.size()));
  }
  if (split.test.empty()) throw DataError("no test tiles");
  const auto order = subset_order(split.train, cfg.seed);
  const auto test = label_chips(chip_tiles(split.test, cfg.data.chip_side, cfg.data.chip_stride), "test_");
  report.test_chips = static_cast<int>(test.size());
  report.test_vehicles = count_vehicles(test);

  std::vector<SubsetModels> models;
  for (std::size_t k = 0; k < cfg.grid.subsets.size(); ++k) {
    SubsetInfo info;
    info.index = static_cast<int>(k);
    info.tiles = cfg.grid.subsets[k];
    const std::vector<data::Tile> tiles(order.begin(), order.begin() + info.tiles);
    models.push_back(prepare_subset(cfg, tiles, info.index, info, opt));
    report.subsets.push_back(std::move(info));
  }

  struct Job {
    int subset, replicate;
    double ratio;
  };
  std::vector<Job> jobs;
  for (std::size_t k = 0; k < cfg.grid.subsets.size(); ++k) {
    for (int r = 0; r < cfg.grid.seeds; ++r) {
      for (double ratio : cfg.grid.ratios) jobs.push_back({static_cast<int>(k), r, ratio});
    }
  }

  std::vector<std::optional<CellResult>> results(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  const auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      const Job& job = jobs[j];
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const auto& sub = report.subsets[job.subset];
        if (job.ratio > 0 && !sub.synthesis_error.empty()) throw PipelineError("no synthetic pool: " + sub.synthesis_error);
        detector::DetectorConfig dc = cfg.detector;
        // Shared by every ratio of one (subset, replicate), so ratio 0 never
        // depends on synthesis settings.
        dc.seed = derive_seed(cfg.seed, kTagDetector + 64 * std::uint64_t(job.subset) + job.replicate);
        const detector::TrainingMix mix{models[job.subset].real, models[job.subset].pool, job.ratio};
        const auto trained = detector::train_detector(mix, dc);
        const auto eval = detector::evaluate(trained.net, test);
        CellResult c;
        c.subset = job.subset;
        c.ratio = job.ratio;
        c.replicate = job.replicate;
        c.seed = dc.seed;
        c.synthetic_used = static_cast<int>(trained.synthetic_used.size());
        c.map = metrics::average_precision(eval, cfg.eval.iou);
        c.recall = metrics::average_recall(eval, cfg.eval.iou, cfg.eval.max_dets);
        c.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        results[j] = c;
        std::lock_guard lock(log_mutex);
        log_info("cell subset=" + std::to_string(job.subset) + " ratio=" + num(job.ratio) +
                 " replicate=" + std::to_string(job.replicate) + " map=" + num(c.map));
      } catch (const std::exception& e) {
        errors[j] = e.what();
        std::lock_guard lock(log_mutex);
        log_warn("cell subset=" + std::to_string(job.subset) + " ratio=" + num(job.ratio) +
                 " replicate=" + std::to_string(job.replicate) + " failed: " + e.what());
      }
    }
  };
  const int workers = std::min<int>(cfg.grid.workers, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (results[j]) report.cells.push_back(*results[j]);
    else report.failures.push_back({jobs[j].subset, jobs[j].ratio, jobs[j].replicate, errors[j]});
  }
  for (auto& c : report.cells) {
    const auto* base = report.find(c.subset, 0.0, c.replicate);
    c.baseline_map = base ? base->map : kNaN;
    c.baseline_recall = base ? base->recall : kNaN;
    c.relative_change = (base && base->map > 0) ? (c.map - base->map) / base->map : kNaN;
  }
  return report;
}

void write_report(const fs::path& dir, const RunReport& report, const std::string& header) {
  fs::create_directories(dir);
  {
    auto out = open_csv(dir / "cells.csv", header);
    out << "subset,tiles,chips,vehicles,ratio,replicate,seed,synthetic_used,map,recall,baseline_map,baseline_recall,"
           "relative_change,pool_fid\n";
    for (const auto& c : report.cells) {
      const auto& s = report.subsets[c.subset];
      out << c.subset << "," << s.tiles << "," << s.chips << "," << s.vehicles << "," << num(c.ratio) << ","
          << c.replicate << "," << c.seed << "," << c.synthetic_used << "," << num(c.map) << "," << num(c.recall) << ","
          << num(c.baseline_map) << "," << num(c.baseline_recall) << "," << num(c.relative_change) << ","
          << num(c.ratio > 0 ? s.fid : kNaN) << "\n";
    }
  }
  {
    auto out = open_csv(dir / "summary.csv", header);
    out << "subset,chips / vehicles,ratio,mean_map,relative_change,per_seed_map\n";
    for (const auto& s : report.subsets) {
      const double base = report.mean_map(s.index, 0.0);
      for (double r : report.ratios) {
        const double m = report.mean_map(s.index, r);
        std::string seeds;
        for (double v : report.per_seed_map(s.index, r)) seeds += (seeds.empty() ? "" : ";") + num(v);
        out << s.index << "," << s.chips << " / " << s.vehicles << "," << num(r) << "," << num(m) << ","
            << num(base > 0 ? (m - base) / base : kNaN) << "," << seeds << "\n";
      }
    }
  }
  {
    auto out = open_csv(dir / "subsets.csv", header);
    out << "subset,tiles,tile_ids,chips,vehicles,pool_size,acceptance_rate,pool_fid,pool_digest,synthesis_error\n";
    for (const auto& s : report.subsets) {
      std::string ids;
      for (const auto& id : s.tile_ids) ids += (ids.empty() ? "" : ";") + id;
      out << s.index << "," << s.tiles << "," << ids << "," << s.chips << "," << s.vehicles << "," << s.pool_size << ","
          << num(s.acceptance_rate) << "," << num(s.fid) << "," << s.pool_digest << "," << quoted(s.synthesis_error) << "\n";
    }
  }
  {
    auto out = open_csv(dir / "failures.csv", header);
    out << "subset,ratio,replicate,error\n";
    for (const auto& f : report.failures) {
      out << f.subset << "," << num(f.ratio) << "," << f.replicate << "," << quoted(f.error) << "\n";
    }
  }
  {
    // Wall times vary between runs, so they stay out of the other reports.
    auto out = open_csv(dir / "timings.csv", header);
    out << "subset,ratio,replicate,wall_seconds\n";
    for (const auto& c : report.cells) {
      out << c.subset << "," << num(c.ratio) << "," << c.replicate << "," << num(c.wall_seconds) << "\n";
    }
  }
}

// -------------------------------------------------------------- plot data

std::vector<std::vector<PlotPoint>> emit_plot_data(const RunReport& report) {
  std::vector<std::string> missing;
  for (const auto& s : report.subsets) {
    for (double r : report.ratios) {
      if (std::isnan(report.mean_map(s.index, r))) missing.push_back("(subset " + std::to_string(s.index) + ", ratio " + num(r) + ")");
    }
  }
  if (!missing.empty()) {
    std::string msg = "report is incomplete; missing cells:";
    for (const auto& m : missing) msg += " " + m;
    throw PipelineError(msg);
  }
  std::vector<const SubsetInfo*> order;
  for (const auto& s : report.subsets) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(), [](const SubsetInfo* a, const SubsetInfo* b) { return a->vehicles < b->vehicles; });
  std::vector<std::vector<PlotPoint>> series;
  for (double r : report.ratios) {
    std::vector<PlotPoint> pts;
    for (const auto* s : order) {
      const double base = report.mean_map(s->index, 0.0), m = report.mean_map(s->index, r);
      pts.push_back({r, s->vehicles, s->chips, m, r == 0.0 ? 0.0 : (base > 0 ? (m - base) / base : kNaN)});
    }
    series.push_back(std::move(pts));
  }
  return series;
}

void write_plot_csv(const fs::path& path, const std::vector<std::vector<PlotPoint>>& series, const std::string& header) {
  auto out = open_csv(path, header);
  out << "ratio,real_vehicles,real_chips,map,relative_change\n";
  for (const auto& s : series) {
    for (const auto& p : s) {
      out << num(p.ratio) << "," << p.real_vehicles << "," << p.real_chips << "," << num(p.map) << ","
          << num(p.relative_change) << "\n";
    }
  }
}

// ------------------------------------------------------------ sample grid

SampleSheet emit_sample_grids(const std::vector<data::LabelMask>& masks, const std::vector<data::ImageChip>& images,
                              int rows, int cols) {
  if (rows < 1 || cols < 1) throw ArgumentError("sample grid needs rows, cols >= 1");
  const std::size_t need = std::size_t(rows) * cols;
  if (masks.size() < need || images.size() < need) {
    throw ArgumentError("sample grid " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                        std::to_string(need) + " pairs, got " + std::to_string(std::min(masks.size(), images.size())));
  }
  const int s = masks[0].height;
  SampleSheet sheet{data::ImageChip(rows * s, cols * s), data::ImageChip(rows * s, cols * s)};
  for (std::size_t i = 0; i < need; ++i) {
    if (masks[i].height != s || masks[i].width != s || images[i].height != s || images[i].width != s) {
      throw ArgumentError("sample grid pairs differ in size");
    }
    const int oy = static_cast<int>(i / cols) * s, ox = static_cast<int>(i % cols) * s;
    const auto rendered = labelpost::render_palette(masks[i]);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) {
          sheet.masks.at(c, oy + y, ox + x) = rendered.at(c, y, x);
          sheet.images.at(c, oy + y, ox + x) = images[i].at(c, y, x);
        }
      }
    }
  }
  return sheet;
}

void write_sample_sheet(const fs::path& dir, const std::string& stem, const SampleSheet& sheet) {
  fs::create_directories(dir);
  data::write_image_png(dir / (stem + "_masks.png"), sheet.masks);
  data::write_image_png(dir / (stem + "_images.png"), sheet.images);
}

// ---------------------------------------------------------------- storage

namespace {
std::string pair_name(std::size_t i) {
  std::ostringstream o;
  o << std::setw(6) << std::setfill('0') << i << ".png";
  return o.str();
}

std::vector<std::string> csv_fields(const std::string& line, std::size_t max_fields) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (out.size() + 1 < max_fields) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) break;
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  out.push_back(line.substr(start));
  return out;
}

double parse_double(const std::string& s) { return s == "nan" ? kNaN : std::stod(s); }

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::size_t max_fields, std::string* header) {
  std::ifstream in(path);
  if (!in) throw PipelineError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::getline(in, line);  // column names
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(csv_fields(line, max_fields));
  }
  return rows;
}

std::string header_field(const std::string& header, const std::string& key) {
  const auto at = header.find(key + "=");
  if (at == std::string::npos) return {};
  const auto begin = at + key.size() + 1;
  return header.substr(begin, header.find(',', begin) - begin);
}
}  // namespace

void save_pairs(const fs::path& dir, const std::vector<data::LabelMask>& masks, const std::vector<data::ImageChip>& images) {
  if (masks.size() != images.size()) throw ArgumentError("save_pairs: mask and image counts differ");
  for (std::size_t i = 0; i < masks.size(); ++i) {
    data::write_mask_png(dir / "masks" / pair_name(i), masks[i]);
    data::write_image_png(dir / "images" / pair_name(i), images[i]);
  }
}

SynthesisResult load_pairs(const fs::path& dir) {
  SynthesisResult out;
  if (!fs::is_directory(dir / "masks")) throw DataError("no pairs under " + dir.string());
  for (std::size_t i = 0; fs::exists(dir / "masks" / pair_name(i)); ++i) {
    out.masks.push_back(data::read_mask_png(dir / "masks" / pair_name(i)));
    out.images.push_back(data::read_image_png(dir / "images" / pair_name(i)));
  }
  return out;
}

RunReport read_report(const fs::path& dir) {
  RunReport r;
  std::string header;
  for (const auto& f : read_csv(dir / "subsets.csv", 10, &header)) {
    SubsetInfo s;
    s.index = std::stoi(f.at(0));
    s.tiles = std::stoi(f.at(1));
    s.chips = std::stoi(f.at(3));
    s.vehicles = std::stoi(f.at(4));
    s.pool_size = std::stoi(f.at(5));
    s.acceptance_rate = parse_double(f.at(6));
    s.fid = parse_double(f.at(7));
    s.pool_digest = f.at(8);
    s.synthesis_error = unquoted(f.at(9));
    r.subsets.push_back(std::move(s));
  }
  r.config_hash = header_field(header, "config_hash");
  r.extractor = header_field(header, "extractor");
  for (const auto& f : read_csv(dir / "cells.csv", 14, nullptr)) {
    CellResult c;
    c.subset = std::stoi(f.at(0));
    c.ratio = parse_double(f.at(4));
    c.replicate = std::stoi(f.at(5));
    c.seed = std::stoull(f.at(6));
    c.synthetic_used = std::stoi(f.at(7));
    c.map = parse_double(f.at(8));
    c.recall = parse_double(f.at(9));
    c.baseline_map = parse_double(f.at(10));
    c.baseline_recall = parse_double(f.at(11));
    c.relative_change = parse_double(f.at(12));
    r.seeds = std::max(r.seeds, c.replicate + 1);
    if (std::find(r.ratios.begin(), r.ratios.end(), c.ratio) == r.ratios.end()) r.ratios.push_back(c.ratio);
    r.cells.push_back(c);
  }
  for (const auto& f : read_csv(dir / "failures.csv", 4, nullptr)) {
    const double ratio = parse_double(f.at(1));
    r.failures.push_back({std::stoi(f.at(0)), ratio, std::stoi(f.at(2)), unquoted(f.at(3))});
    r.seeds = std::max(r.seeds, std::stoi(f.at(2)) + 1);
    if (std::find(r.ratios.begin(), r.ratios.end(), ratio) == r.ratios.end()) r.ratios.push_back(ratio);
  }
  std::sort(r.ratios.begin(), r.ratios.end());
  return r;
}

}  // namespace synthaug::pipeline
