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

// synthaug command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>

#include "synthaug/common/error.hpp"
#include "synthaug/common/util.hpp"
#include "synthaug/dataset/io.hpp"
#include "synthaug/metrics/detection.hpp"
#include "synthaug/pipeline/grad_suite.hpp"
#include "synthaug/pipeline/pipeline.hpp"

namespace {

using namespace synthaug;
namespace fs = std::filesystem;

// Config sources for one subcommand, applied in order: file, --set, then
// the per-key flags.
struct ConfigSources {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flags;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

void add_config_options(CLI::App* cmd, ConfigSources& src, bool stochastic) {
  cmd->add_option("--config", src.file, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", src.sets, "override one key, key=value (repeatable)");
  auto* group = cmd->add_option_group("config keys", "every config key as a flag");
  for (const auto& k : pipeline::config_keys()) {
    if (k.name == "seed") continue;
    group->add_option_function<std::string>("--" + k.name, [&src, name = k.name](const std::string& v) { src.flags[name] = v; },
                                            k.help);
  }
  // Deterministic commands still take a seed: toy tiles are generated from it.
  auto* seed = cmd->add_option("--seed", src.seed, stochastic ? "base seed" : "base seed (selects toy tiles)")
                   ->each([&src](const std::string&) { src.has_seed = true; });
  if (stochastic) seed->required();
}

pipeline::RunConfig resolve(const ConfigSources& src) {
  pipeline::RunConfig cfg;
  if (!src.file.empty()) pipeline::apply_config_file(cfg, src.file);
  for (const auto& s : src.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    pipeline::apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : src.flags) pipeline::apply_override(cfg, k, v);
  if (src.has_seed) cfg.seed = src.seed;
  cfg.validate();
  return cfg;
}

std::string header(const pipeline::RunConfig& cfg, const std::string& extractor = "none") {
  return report_header(pipeline::config_hash(cfg), extractor);
}

void write_config(const fs::path& dir, const pipeline::RunConfig& cfg) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << pipeline::format_config(cfg);
}

// Training tiles of the first `tiles` entries of the seeded subset order; 0
// means all of them.
std::vector<data::Tile> training_tiles(const pipeline::RunConfig& cfg, int tiles) {
  const auto split = pipeline::prepare_split(cfg);
  auto order = pipeline::subset_order(split.train, cfg.seed);
  if (tiles > 0) {
    if (tiles > int(order.size())) throw ConfigError("--tiles exceeds the " + std::to_string(order.size()) + " training tiles");
    order.resize(tiles);
  }
  return order;
}

std::vector<detector::LabeledChip> test_chips(const pipeline::RunConfig& cfg) {
  const auto split = pipeline::prepare_split(cfg);
  return pipeline::label_chips(pipeline::chip_tiles(split.test, cfg.data.chip_side, cfg.data.chip_stride), "test_");
}

// ------------------------------------------------------------- commands

int cmd_toy_data(const pipeline::RunConfig& cfg, const fs::path& out) {
  pipeline::RunConfig c = cfg;
  c.data.source = "toy";
  const auto split = pipeline::prepare_split(c);
  data::SplitManifest manifest;
  for (const auto& t : split.train) data::save_tile(out, t), manifest.train.push_back(t.id);
  for (const auto& t : split.test) data::save_tile(out, t), manifest.test.push_back(t.id);
  std::ofstream(out / "manifest.txt") << data::format_manifest(manifest);
  std::cout << "wrote " << split.train.size() << " training and " << split.test.size() << " test tiles to " << out << "\n";
  return 0;
}

int cmd_prepare_data(const pipeline::RunConfig& cfg, const fs::path& out) {
  const auto split = pipeline::prepare_split(cfg);
  std::ofstream counts;
  fs::create_directories(out);
  counts.open(out / "chips.csv");
  counts << header(cfg) << "\nsplit,tile,chips,vehicles\n";
  for (const auto* part : {&split.train, &split.test}) {
    const std::string name = part == &split.train ? "train" : "test";
    for (const auto& t : *part) {
      const auto chips = data::chip(t, cfg.data.chip_side, cfg.data.chip_stride);
      data::save_chips(out / name, t.id, chips);
      int vehicles = 0;
      for (const auto& c : chips) vehicles += data::count_vehicles(c.mask);
      counts << name << "," << t.id << "," << chips.size() << "," << vehicles << "\n";
    }
  }
  std::cout << "chipped " << split.train.size() << " training and " << split.test.size() << " test tiles into " << out << "\n";
  return 0;
}

int cmd_train_pgan(const pipeline::RunConfig& cfg, int tiles, const fs::path& out) {
  const auto chips = pipeline::chip_tiles(training_tiles(cfg, tiles), cfg.data.chip_side, cfg.data.chip_stride);
  std::vector<data::LabelMask> masks;
  for (const auto& c : chips) masks.push_back(c.mask);
  pgan::PganConfig pc = cfg.pgan;
  pc.seed = cfg.seed;
  pgan::Pgan model = pgan::build_pgan(pc);
  const auto result = pgan::train_pgan(model, pipeline::pgan_training_set(masks, cfg.synth.d4_gan_data));
  nn::save_checkpoint(out / "pgan.ckpt", pgan::make_pgan_checkpoint(model));
  pgan::write_trace_csv(out / "pgan_trace.csv", result, header(cfg));
  write_config(out, cfg);
  std::cout << "PGAN trained on " << masks.size() << " masks; " << result.trace.size() << " steps\n";
  return 0;
}

int cmd_train_cgan(const pipeline::RunConfig& cfg, int tiles, const fs::path& out) {
  cgan::CganConfig cc = cfg.cgan;
  cc.seed = cfg.seed;
  cgan::Cgan model = cgan::build_cgan(cc);
  const auto crops = pipeline::cgan_training_crops(training_tiles(cfg, tiles), cfg, derive_seed(cfg.seed, 1));
  const auto trace = cgan::train_cgan(model, cgan::make_pairs(crops));
  nn::save_checkpoint(out / "cgan.ckpt", cgan::make_cgan_checkpoint(model));
  cgan::write_trace_csv(out / "cgan_trace.csv", trace, header(cfg));
  write_config(out, cfg);
  std::cout << "CGAN trained on " << crops.size() << " crops; " << trace.size() << " steps\n";
  return 0;
}

int cmd_synth(const pipeline::RunConfig& cfg, const fs::path& pgan_path, const fs::path& cgan_path, int n,
              const fs::path& out) {
  const auto p = pgan::load_pgan(nn::load_checkpoint(pgan_path));
  const auto c = cgan::load_cgan(nn::load_checkpoint(cgan_path));
  const auto s = pipeline::run_joint_synthesis(p, c, n, cfg.purity, cfg.seed, cfg.synth);
  pipeline::save_pairs(out, s.masks, s.images);
  std::ofstream stats(out / "synthesis.csv");
  stats << header(cfg) << "\nrequested,emitted,raw_sampled,acceptance_rate\n"
        << n << "," << s.masks.size() << "," << s.raw_sampled << "," << s.acceptance_rate << "\n";
  std::cout << "emitted " << s.masks.size() << " pairs; acceptance rate " << s.acceptance_rate << "\n";
  return 0;
}

int cmd_fid_study(const pipeline::RunConfig& cfg, int tiles, const std::vector<std::string>& pools, const fs::path& out) {
  const auto real = pipeline::label_chips(
      pipeline::chip_tiles(training_tiles(cfg, tiles), cfg.data.chip_side, cfg.data.chip_stride), "real_");
  std::vector<pipeline::FidInput> inputs;
  for (const auto& spec : pools) {
    // name=dir[:images:vehicles]
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ArgumentError("--pool expects name=dir, got '" + spec + "'");
    pipeline::FidInput in;
    in.subset = spec.substr(0, eq);
    in.pool = pipeline::load_pairs(spec.substr(eq + 1)).images;
    in.images = static_cast<int>(real.size());
    in.vehicles = pipeline::count_vehicles(real);
    inputs.push_back(std::move(in));
  }
  const auto extractor = metrics::make_extractor(cfg.extractor);
  const auto rows = pipeline::fid_study(pipeline::images_of(real), inputs, *extractor);
  pipeline::write_fid_csv(out, rows, header(cfg, extractor->id()));
  for (const auto& r : rows) std::cout << r.subset << "  " << r.counts() << "  FID " << r.fid << "\n";
  return 0;
}

int cmd_train_detector(const pipeline::RunConfig& cfg, int tiles, const std::string& synthetic, double ratio,
                       const fs::path& out) {
  detector::TrainingMix mix;
  mix.real = pipeline::label_chips(
      pipeline::chip_tiles(training_tiles(cfg, tiles), cfg.data.chip_side, cfg.data.chip_stride), "real_");
  if (!synthetic.empty()) mix.synthetic = pipeline::label_synthetic(pipeline::load_pairs(synthetic), "synth_");
  mix.synthetic_ratio = ratio;
  detector::DetectorConfig dc = cfg.detector;
  dc.seed = cfg.seed;
  const auto trained = detector::train_detector(mix, dc);
  nn::save_checkpoint(out / "detector.ckpt", detector::make_detector_checkpoint(trained.net));
  detector::write_train_log(out / "detector_log.csv", trained.log, header(cfg));
  write_config(out, cfg);
  std::cout << "detector trained on " << mix.real.size() << " real and " << trained.synthetic_used.size()
            << " synthetic chips; final loss " << trained.log.back().loss << "\n";
  return 0;
}

int cmd_evaluate(const pipeline::RunConfig& cfg, const fs::path& ckpt, const fs::path& out) {
  const auto net = detector::load_detector(nn::load_checkpoint(ckpt));
  const auto chips = test_chips(cfg);
  const auto results = detector::evaluate(net, chips);
  const double ap = metrics::average_precision(results, cfg.eval.iou);
  const double ar = metrics::average_recall(results, cfg.eval.iou, cfg.eval.max_dets);
  std::vector<std::vector<Detection>> dets;
  for (const auto& r : results) dets.push_back(r.detections);
  detector::write_detections_csv(out / "detections.csv", chips, dets, header(cfg));
  std::ofstream m(out / "metrics.csv");
  m << header(cfg) << "\nchips,vehicles,iou,map,average_recall,max_dets,score_thresh,nms_iou\n"
    << chips.size() << "," << pipeline::count_vehicles(chips) << "," << cfg.eval.iou << "," << std::setprecision(9) << ap
    << "," << ar << "," << cfg.eval.max_dets << "," << net.config().score_thresh << "," << net.config().nms_iou << "\n";
  std::cout << "mAP@" << cfg.eval.iou << " = " << ap << ", AR = " << ar << "\n";
  return 0;
}

int cmd_plot_data(const fs::path& report_dir, const fs::path& out) {
  const auto report = pipeline::read_report(report_dir);
  const auto series = pipeline::emit_plot_data(report);
  pipeline::write_plot_csv(out, series, report_header(report.config_hash, report.extractor));
  std::cout << "wrote " << series.size() << " series to " << out << "\n";
  return 0;
}

int cmd_sweep(const pipeline::RunConfig& cfg, const fs::path& out, bool reuse) {
  fs::create_directories(out);
  write_config(out, cfg);
  const auto report = pipeline::augmentation_sweep(cfg, {out / "work", reuse, true});
  const auto extractor = metrics::make_extractor(cfg.extractor);
  const std::string h = header(cfg, extractor->id());
  pipeline::write_report(out, report, h);
  std::vector<pipeline::FidRow> fid_rows;
  for (const auto& s : report.subsets) {
    fid_rows.push_back({std::to_string(s.tiles) + " tiles", s.chips, s.vehicles, s.pool_size, s.fid});
  }
  pipeline::write_fid_csv(out / "fid.csv", fid_rows, h);
  if (report.failures.empty()) {
    pipeline::write_plot_csv(out / "plot_data.csv", pipeline::emit_plot_data(report), h);
  }
  std::cout << report.cells.size() << " cells done, " << report.failures.size() << " failed; report in " << out << "\n";
  for (const auto& f : report.failures) {
    std::cerr << "failed cell subset=" << f.subset << " ratio=" << f.ratio << " replicate=" << f.replicate << ": " << f.error
              << "\n";
  }
  return report.failures.empty() ? 0 : 3;
}

int cmd_sample_grid(const fs::path& pairs, int rows, int cols, const fs::path& out) {
  const auto p = pipeline::load_pairs(pairs);
  pipeline::write_sample_sheet(out, "samples", pipeline::emit_sample_grids(p.masks, p.images, rows, cols));
  std::cout << "wrote " << rows << "x" << cols << " sample sheets to " << out << "\n";
  return 0;
}

int cmd_grad_check(std::uint64_t seed) {
  const auto rows = pipeline::run_grad_suite(seed);
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << (r.passed ? "ok   " : "FAIL ") << std::left << std::setw(28) << r.name << std::setw(10) << r.kind
              << " max_rel_error=" << std::setprecision(3) << r.max_rel_error << " tol=" << r.tolerance << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthaug: synthetic label/image augmentation for small-data vehicle detection"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress logging");
  app.set_version_flag("--version", std::string(tool_version()));

  std::map<std::string, ConfigSources> sources;
  const auto configured = [&](CLI::App* cmd, bool stochastic) {
    add_config_options(cmd, sources[cmd->get_name()], stochastic);
    return cmd;
  };

  fs::path out, pgan_path, cgan_path, ckpt, pairs, report_dir;
  int tiles = 0, n = 0, rows = 2, cols = 3;
  double ratio = 0.0;
  std::string synthetic;
  std::vector<std::string> pools;
  bool no_reuse = false;
  std::uint64_t grad_seed = 0;

  auto* toy = configured(app.add_subcommand("toy-data", "write procedural toy tiles and a split manifest"), true);
  toy->add_option("--out", out, "output directory")->required();

  auto* prep = configured(app.add_subcommand("prepare-data", "downsample and chip tiles from data.dir"), false);
  prep->add_option("--out", out, "output directory")->required();

  auto* tp = configured(app.add_subcommand("train-pgan", "train the label PGAN"), true);
  tp->add_option("--tiles", tiles, "training tiles to use (0: all)");
  tp->add_option("--out", out, "output directory")->required();

  auto* tc = configured(app.add_subcommand("train-cgan", "train the label-to-image CGAN"), true);
  tc->add_option("--tiles", tiles, "training tiles to use (0: all)");
  tc->add_option("--out", out, "output directory")->required();

  auto* sy = configured(app.add_subcommand("synth", "sample, filter and translate synthetic pairs"), true);
  sy->add_option("--pgan", pgan_path, "PGAN checkpoint")->required()->check(CLI::ExistingFile);
  sy->add_option("--cgan", cgan_path, "CGAN checkpoint")->required()->check(CLI::ExistingFile);
  sy->add_option("-n,--pairs", n, "pairs to emit")->required();
  sy->add_option("--out", out, "output directory")->required();

  auto* fs_cmd = configured(app.add_subcommand("fid-study", "FID of synthetic pools against real chips"), false);
  fs_cmd->add_option("--tiles", tiles, "real training tiles (0: all)");
  fs_cmd->add_option("--pool", pools, "name=pairs_dir (repeatable)")->required();
  fs_cmd->add_option("--out", out, "output CSV")->required();

  auto* td = configured(app.add_subcommand("train-detector", "train a detector on real plus synthetic chips"), true);
  td->add_option("--tiles", tiles, "real training tiles (0: all)");
  td->add_option("--synthetic", synthetic, "synthetic pairs directory");
  td->add_option("--ratio", ratio, "synthetic to real ratio");
  td->add_option("--out", out, "output directory")->required();

  auto* ev = configured(app.add_subcommand("evaluate", "mAP and average recall on the test chips"), false);
  ev->add_option("--detector", ckpt, "detector checkpoint")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", out, "output directory")->required();

  auto* sw = configured(app.add_subcommand("sweep", "full augmentation sweep over subsets, ratios and seeds"), true);
  sw->add_option("--out", out, "output directory")->required();
  sw->add_flag("--no-reuse", no_reuse, "retrain cached GAN checkpoints");

  auto* pd = app.add_subcommand("plot-data", "per-ratio series from a sweep report");
  pd->add_option("--report", report_dir, "sweep output directory")->required()->check(CLI::ExistingDirectory);
  pd->add_option("--out", out, "output CSV")->required();

  auto* sg = app.add_subcommand("sample-grid", "contact sheets of synthetic pairs");
  sg->add_option("--pairs", pairs, "pairs directory")->required()->check(CLI::ExistingDirectory);
  sg->add_option("--rows", rows, "rows");
  sg->add_option("--cols", cols, "columns");
  sg->add_option("--out", out, "output directory")->required();

  auto* gc = app.add_subcommand("grad-check", "autodiff against finite differences for every op and loss");
  gc->add_option("--seed", grad_seed, "seed for the random inputs and networks")->required();

  CLI11_PARSE(app, argc, argv);
  set_verbose(verbose);

  try {
    const auto cfg = [&](CLI::App* cmd) { return resolve(sources.at(cmd->get_name())); };
    if (toy->parsed()) return cmd_toy_data(cfg(toy), out);
    if (prep->parsed()) return cmd_prepare_data(cfg(prep), out);
    if (tp->parsed()) return cmd_train_pgan(cfg(tp), tiles, out);
    if (tc->parsed()) return cmd_train_cgan(cfg(tc), tiles, out);
    if (sy->parsed()) return cmd_synth(cfg(sy), pgan_path, cgan_path, n, out);
    if (fs_cmd->parsed()) return cmd_fid_study(cfg(fs_cmd), tiles, pools, out);
    if (td->parsed()) return cmd_train_detector(cfg(td), tiles, synthetic, ratio, out);
    if (ev->parsed()) return cmd_evaluate(cfg(ev), ckpt, out);
    if (sw->parsed()) return cmd_sweep(cfg(sw), out, !no_reuse);
    if (pd->parsed()) return cmd_plot_data(report_dir, out);
    if (sg->parsed()) return cmd_sample_grid(pairs, rows, cols, out);
    if (gc->parsed()) return cmd_grad_check(grad_seed);
  } catch (const TrainingError& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
