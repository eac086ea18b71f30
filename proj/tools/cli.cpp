/*
 * Copyright 2026 The AdaCoF-CPP Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "adacof/checkpoint.hpp"
#include "adacof/datagen.hpp"
#include "adacof/errors.hpp"
#include "adacof/flow.hpp"
#include "adacof/gradcheck.hpp"
#include "adacof/image_io.hpp"
#include "adacof/metrics.hpp"
#include "adacof/parallel.hpp"
#include "adacof/trainer.hpp"
#include "adacof/warp.hpp"
#include "adacof/warp_io.hpp"

namespace adacof::cli {
namespace {

void print(std::ostream& os, const std::string& s) { os << s << '\n'; }

std::vector<Triplet> load_validation(const TrainConfig& config, const std::vector<Triplet>& train_set,
                                     std::ostream& err) {
  if (!config.val_dir.empty()) return read_dataset(config.val_dir);
  print(err, "note: no val_dir in the config; metrics are measured on the training set");
  return train_set;
}

TrainOptions logging_options(std::ostream& err) {
  TrainOptions o;
  o.log = [&err](const std::string& line) { print(err, line); };
  return o;
}

// ---- gen-data ---------------------------------------------------------------

struct GenData {
  std::string out;
  std::size_t count = 512;
  std::size_t size = 32;
  double max_disp = 3.0;
  std::uint64_t seed = 0;
};

int gen_data(const GenData& o, std::ostream& out) {
  const auto set = generate_dataset(o.count, o.size, o.max_disp, o.seed);
  write_dataset(o.out, set);
  print(out, fmt::format("wrote {} triplets of {}x{} to {}", set.size(), o.size, o.size, o.out));
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

int train_cmd(const std::string& config_path, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  const TrainConfig config = load_train_config(config_path);
  const auto train_set = read_dataset(config.dataset_dir);
  const std::vector<Triplet> val = config.val_dir.empty() ? std::vector<Triplet>{}
                                                          : read_dataset(config.val_dir);
  TrainOptions opt = logging_options(err);
  opt.out_dir = out_dir;
  const TrainResult r = train(config, train_set, val, opt);
  print(out, epoch_csv_header());
  for (const auto& e : r.epochs) print(out, to_csv(e));
  return kExitOk;
}

// ---- interp / warp ------------------------------------------------------------

struct Interp {
  std::string ckpt, frame0, frame1, out, dump;
};

int interp(const Interp& o, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint(o.ckpt);
  const Frame a = read_image(o.frame0);
  const Frame b = read_image(o.frame1);
  ModelOutput<float> params;
  const Frame mid = interpolate(ckpt.params, ckpt.config, a, b, &params);
  write_image(o.out, mid);
  if (!o.dump.empty()) {
    ParamBundle bundle;
    bundle.directions = {params.fwd, params.bwd};
    // A disabled occlusion head blends with the plain average, which is
    // V = 0.5 exactly.
    bundle.occlusion = ckpt.config.use_occlusion
                           ? params.occlusion
                           : OcclusionMap<float>::filled(mid.height(), mid.width(), 0.5F);
    write_acof(o.dump, bundle);
  }
  print(out, fmt::format("wrote {}", o.out));
  return kExitOk;
}

struct Warp {
  std::string params, input, second, out;
  std::size_t direction = 0;
};

int warp_cmd(const Warp& o, std::ostream& out) {
  const ParamBundle bundle = read_acof(o.params);
  const Frame a = read_image(o.input);
  Tensor result;
  if (!o.second.empty()) {
    if (bundle.directions.size() != 2) {
      throw ConfigError("--second needs a parameter file with two warp directions");
    }
    const Frame b = read_image(o.second);
    const Tensor wa = forward_warp(a.pixels(), bundle.directions[0]);
    const Tensor wb = forward_warp(b.pixels(), bundle.directions[1]);
    result = occlusion_blend(wa, wb, bundle.occlusion);
  } else {
    if (o.direction >= bundle.directions.size()) {
      throw ConfigError(fmt::format("--direction {} but the file holds {} direction(s)", o.direction,
                                    bundle.directions.size()));
    }
    result = forward_warp(a.pixels(), bundle.directions[o.direction]);
  }
  write_image(o.out, to_frame(result));
  print(out, fmt::format("wrote {}", o.out));
  return kExitOk;
}

// ---- gradcheck ------------------------------------------------------------------

int gradcheck_cmd(const std::string& module, std::uint64_t seed, bool verbose, std::ostream& out) {
  std::vector<GradcheckModule> modules;
  if (module.empty()) {
    modules = {GradcheckModule::adacof, GradcheckModule::losses, GradcheckModule::network};
  } else {
    const auto m = parse_gradcheck_module(module);
    if (!m) throw CLI::ValidationError("--module", "expected adacof, network or losses");
    modules = {*m};
  }
  bool ok = true;
  for (GradcheckModule m : modules) {
    const GradcheckReport r = run_gradcheck(m, seed);
    if (verbose) {
      for (const auto& b : r.blocks) {
        print(out, fmt::format("  {:<40} {:.3e} ({} entries)", b.name, b.max_rel_error, b.entries));
      }
    }
    print(out, fmt::format("{} max_rel_error {:.3e} threshold {:.0e} {}", to_string(m),
                           r.max_rel_error(), r.threshold, r.passed() ? "PASS" : "FAIL"));
    ok = ok && r.passed();
  }
  return ok ? kExitOk : kExitFailure;
}

// ---- visualize ------------------------------------------------------------------

int visualize(const std::string& params, const std::string& prefix, bool include_grid,
              std::ostream& out) {
  const ParamBundle bundle = read_acof(params);
  const bool two = bundle.directions.size() == 2;
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const Frame& f) {
    const std::string path = prefix + "_" + name + ".ppm";
    write_ppm(path, f);
    written.push_back(path);
  };
  for (std::size_t d = 0; d < bundle.directions.size(); ++d) {
    const std::string suffix = two ? (d == 0 ? "_fwd" : "_bwd") : "";
    const auto& p = bundle.directions[d];
    emit("meanflow" + suffix, render_flow(mean_flow(p, include_grid)));
    emit("varflow" + suffix, render_magnitude(variance_flow(p, include_grid).trace));
  }
  emit("occlusion", render_occlusion(bundle.occlusion));
  for (const auto& w : written) print(out, fmt::format("wrote {}", w));
  return kExitOk;
}

// ---- ablate / sweep ---------------------------------------------------------------

struct Variant {
  std::string label;
  TrainConfig config;
};

int run_variants(const std::string& column, const std::vector<Variant>& variants,
                 const std::vector<Triplet>& train_set, const std::vector<Triplet>& val,
                 std::ostream& out, std::ostream& err) {
  std::vector<std::string> rows;
  for (const auto& v : variants) {
    print(err, fmt::format("== {} {}", column, v.label));
    const TrainResult r = train(v.config, train_set, val, logging_options(err));
    const SetMetrics m = evaluate_model(r.checkpoint.params, r.checkpoint.config, val);
    rows.push_back(fmt::format("{},{:.6g},{:.6g},{:.6g}", v.label, m.psnr_db, m.ssim, m.ie));
  }
  const SetMetrics base = evaluate_frame_average(val);
  print(out, column + ",psnr_db,ssim,ie");
  for (const auto& r : rows) print(out, r);
  print(out, fmt::format("frame_average,{:.6g},{:.6g},{:.6g}", base.psnr_db, base.ssim, base.ie));
  return kExitOk;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

int ablate(const std::string& config_path, const std::string& modes, std::ostream& out,
           std::ostream& err) {
  const TrainConfig base = load_train_config(config_path);
  std::vector<Variant> variants;
  for (const auto& tag : split(modes, ',')) {
    TrainConfig c = base;
    if (tag == "woocc") {
      c.model.warp_mode = WarpMode::adacof;
      c.model.use_occlusion = false;
    } else {
      const auto m = parse_warp_mode(tag);
      if (!m) throw CLI::ValidationError("--modes", "unknown mode '" + tag + "'");
      c.model.warp_mode = *m;
      c.model.use_occlusion = true;
    }
    variants.push_back({tag, c});
  }
  if (variants.empty()) throw CLI::ValidationError("--modes", "no modes given");
  const auto train_set = read_dataset(base.dataset_dir);
  const auto val = load_validation(base, train_set, err);
  return run_variants("mode", variants, train_set, val, out, err);
}

int sweep(const std::string& config_path, const std::string& spec, std::ostream& out,
          std::ostream& err) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) throw CLI::ValidationError("--param", "expected NAME=v1,v2,...");
  const std::string name = spec.substr(0, eq);
  if (name != "F" && name != "d") throw CLI::ValidationError("--param", "sweepable parameters are F and d");
  const TrainConfig base = load_train_config(config_path);
  std::vector<Variant> variants;
  for (const auto& v : split(spec.substr(eq + 1), ',')) {
    int value = 0;
    try {
      std::size_t used = 0;
      value = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--param", "not an integer: '" + v + "'");
    }
    TrainConfig c = base;
    (name == "F" ? c.model.kernel_size : c.model.dilation) = value;
    c.validate();
    variants.push_back({v, c});
  }
  if (variants.empty()) throw CLI::ValidationError("--param", "no values given");
  const auto train_set = read_dataset(base.dataset_dir);
  const auto val = load_validation(base, train_set, err);
  return run_variants(name, variants, train_set, val, out, err);
}

// ---- bench ------------------------------------------------------------------------

struct Bench {
  std::string size = "256x256";
  int kernel = 5;
  int dilation = 1;
  int iters = 5;
  std::uint64_t seed = 0;
};

int bench(const Bench& o, std::ostream& out) {
  std::size_t h = 0;
  std::size_t w = 0;
  {
    const auto parts = split(o.size, 'x');
    if (parts.size() != 2) throw CLI::ValidationError("--size", "expected HxW");
    try {
      h = std::stoul(parts[0]);
      w = std::stoul(parts[1]);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--size", "expected HxW");
    }
    if (h == 0 || w == 0) throw CLI::ValidationError("--size", "extents must be positive");
  }
  if (o.kernel < 1 || o.dilation < 0 || o.iters < 1) {
    throw CLI::ValidationError("bench", "need F >= 1, d >= 0, iters >= 1");
  }
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<float> unit(0.0F, 1.0F);
  std::uniform_real_distribution<float> offset(-2.0F, 2.0F);
  Tensor input({3, h, w});
  for (float& v : input.values()) v = unit(rng);
  WarpParams<float> p;
  p.kernel_size = o.kernel;
  p.dilation = o.dilation;
  const std::size_t taps = p.taps();
  p.weights = Tensor({taps, h, w}, 1.0F / static_cast<float>(taps));
  p.alpha = Tensor({taps, h, w});
  p.beta = Tensor({taps, h, w});
  for (float& v : p.alpha.values()) v = offset(rng);
  for (float& v : p.beta.values()) v = offset(rng);
  Tensor up({3, h, w});
  for (float& v : up.values()) v = unit(rng) - 0.5F;

  using clock = std::chrono::steady_clock;
  auto time = [&](const std::function<void()>& fn) {
    fn();  // warm-up
    const auto t0 = clock::now();
    for (int i = 0; i < o.iters; ++i) fn();
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count() / o.iters;
  };
  const double fwd_ms = time([&] { (void)forward_warp(input, p); });
  const double bwd_ms = time([&] { (void)backward_warp_vjp(input, p, up); });
  const double mpix = static_cast<double>(h * w) / 1e6;
  print(out, "height,width,F,d,threads,forward_ms,backward_ms,forward_mpix_per_s,backward_mpix_per_s");
  print(out, fmt::format("{},{},{},{},{},{:.4g},{:.4g},{:.4g},{:.4g}", h, w, o.kernel, o.dilation,
                         num_threads(), fwd_ms, bwd_ms, mpix / (fwd_ms / 1e3), mpix / (bwd_ms / 1e3)));
  return kExitOk;
}

// ---- eval -------------------------------------------------------------------------

int eval_cmd(const std::string& ckpt_path, const std::string& data, bool baseline, std::ostream& out) {
  const Checkpoint ckpt = read_checkpoint(ckpt_path);
  const auto set = read_dataset(data);
  std::vector<MetricRow> rows;
  const SetMetrics m = evaluate_model(ckpt.params, ckpt.config, set, &rows);
  print(out, metric_csv_header());
  for (const auto& r : rows) print(out, to_csv(r));
  print(out, to_csv(MetricRow{"mean", m.psnr_db, m.ssim, m.ie}));
  if (baseline) {
    const SetMetrics b = evaluate_frame_average(set);
    print(out, to_csv(MetricRow{"frame_average_mean", b.psnr_db, b.ssim, b.ie}));
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Adaptive collaboration of flows: frame interpolation toolkit", "adacof"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: ADACOF_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);

  std::function<int()> action;

  GenData gd;
  auto* c_gen = app.add_subcommand("gen-data", "Write a synthetic triplet dataset");
  c_gen->add_option("--out", gd.out, "Output directory")->required();
  c_gen->add_option("--count", gd.count, "Number of triplets")->check(CLI::PositiveNumber);
  c_gen->add_option("--size", gd.size, "Frame side in pixels (>= 16)");
  c_gen->add_option("--max-disp", gd.max_disp, "Largest displacement in pixels")->check(CLI::NonNegativeNumber);
  c_gen->add_option("--seed", gd.seed, "Random seed");
  c_gen->callback([&] { action = [&] { return gen_data(gd, out); }; });

  std::string config_path, out_dir;
  auto* c_train = app.add_subcommand("train", "Train a model from train.json");
  c_train->add_option("--config", config_path, "train.json")->required();
  c_train->add_option("--out", out_dir, "Checkpoint and log directory")->required();
  c_train->callback([&] { action = [&] { return train_cmd(config_path, out_dir, out, err); }; });

  Interp ip;
  auto* c_interp = app.add_subcommand("interp", "Synthesize the middle frame");
  c_interp->add_option("--ckpt", ip.ckpt, "Checkpoint (.ackp)")->required();
  c_interp->add_option("--frame0", ip.frame0, "First frame")->required();
  c_interp->add_option("--frame1", ip.frame1, "Second frame")->required();
  c_interp->add_option("--out", ip.out, "Output image")->required();
  c_interp->add_option("--dump-params", ip.dump, "Write the estimated warp parameters (.acof)");
  c_interp->callback([&] { action = [&] { return interp(ip, out); }; });

  Warp wp;
  auto* c_warp = app.add_subcommand("warp", "Apply warp parameters to an image");
  c_warp->add_option("--params", wp.params, "Parameters (.acof)")->required();
  c_warp->add_option("--input", wp.input, "Input image")->required();
  c_warp->add_option("--second", wp.second, "Second image: warp both and blend by the occlusion map");
  c_warp->add_option("--direction", wp.direction, "Which warp direction to apply (0 or 1)");
  c_warp->add_option("--out", wp.out, "Output image")->required();
  c_warp->callback([&] { action = [&] { return warp_cmd(wp, out); }; });

  std::string gc_module;
  std::uint64_t gc_seed = 0;
  bool gc_verbose = false;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  c_gc->add_option("--module", gc_module, "adacof, network or losses (default: all)");
  c_gc->add_option("--seed", gc_seed, "Random seed");
  c_gc->add_flag("--verbose", gc_verbose, "Print every checked block");
  c_gc->callback([&] { action = [&] { return gradcheck_cmd(gc_module, gc_seed, gc_verbose, out); }; });

  std::string vz_params, vz_prefix;
  bool vz_grid = false;
  auto* c_vz = app.add_subcommand("visualize", "Render mean flow, variance flow and occlusion maps");
  c_vz->add_option("--params", vz_params, "Parameters (.acof)")->required();
  c_vz->add_option("--out-prefix", vz_prefix, "Output path prefix")->required();
  c_vz->add_flag("--include-grid", vz_grid, "Add the base-grid positions to the offsets");
  c_vz->callback([&] { action = [&] { return visualize(vz_params, vz_prefix, vz_grid, out); }; });

  std::string ab_config, ab_modes = "fb,kb,ws,woocc,sdc,adacof";
  auto* c_ab = app.add_subcommand("ablate", "Train every warp mode and report metrics as CSV");
  c_ab->add_option("--config", ab_config, "train.json")->required();
  c_ab->add_option("--modes", ab_modes, "Comma-separated: fb,kb,ws,woocc,sdc,adacof");
  c_ab->callback([&] { action = [&] { return ablate(ab_config, ab_modes, out, err); }; });

  std::string sw_config, sw_param;
  auto* c_sw = app.add_subcommand("sweep", "Train over kernel sizes or dilations and report CSV");
  c_sw->add_option("--config", sw_config, "train.json")->required();
  c_sw->add_option("--param", sw_param, "F=1,3,5,7 or d=0,1,2")->required();
  c_sw->callback([&] { action = [&] { return sweep(sw_config, sw_param, out, err); }; });

  Bench bn;
  auto* c_bn = app.add_subcommand("bench", "Warp operator throughput");
  c_bn->add_option("--size", bn.size, "HxW");
  c_bn->add_option("--F", bn.kernel, "Kernel size");
  c_bn->add_option("--d", bn.dilation, "Dilation");
  c_bn->add_option("--iters", bn.iters, "Timed iterations");
  c_bn->add_option("--seed", bn.seed, "Random seed");
  c_bn->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);
  c_bn->callback([&] { action = [&] { return bench(bn, out); }; });

  std::string ev_ckpt, ev_data;
  bool ev_baseline = false;
  auto* c_ev = app.add_subcommand("eval", "PSNR/SSIM/IE of a checkpoint on a dataset");
  c_ev->add_option("--ckpt", ev_ckpt, "Checkpoint (.ackp)")->required();
  c_ev->add_option("--data", ev_data, "Dataset directory")->required();
  c_ev->add_flag("--baseline", ev_baseline, "Also report the frame-average baseline");
  c_ev->callback([&] { action = [&] { return eval_cmd(ev_ckpt, ev_data, ev_baseline, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (threads > 0) set_num_threads(threads);
    return action();
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace adacof::cli
