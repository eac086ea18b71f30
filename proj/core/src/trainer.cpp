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

#include "adacof/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "adacof/errors.hpp"
#include "adacof/optim.hpp"
#include "adacof/parallel.hpp"
#include "json.hpp"

namespace adacof {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kAugmentStream = 2;
constexpr std::uint64_t kDiscriminatorStream = 3;

template <typename V>
V required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(fmt::format("train config: missing required key '{}'", key));
  try {
    return j.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("train config: bad value for '{}': {}", key, e.what()));
  }
}

template <typename V>
V optional(const json& j, const char* key, V fallback) {
  if (!j.contains(key)) return fallback;
  return required<V>(j, key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void append_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << text;
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
}

void check_set(const std::vector<Triplet>& set, const TrainConfig& config, const char* what) {
  const std::size_t mult = config.model.size_multiple();
  for (std::size_t i = 0; i < set.size(); ++i) {
    const Frame& f = set[i].first;
    if (f.channels() != static_cast<std::size_t>(config.model.frame_channels)) {
      throw ConfigError(fmt::format("{} triplet {} has {} channels, the model expects {}", what, i,
                                    f.channels(), config.model.frame_channels));
    }
    const std::size_t side = config.crop == 0 ? std::min(f.height(), f.width()) : config.crop;
    if (f.height() % mult != 0 || f.width() % mult != 0 || side % mult != 0) {
      throw ConfigError(fmt::format("{} triplet {} is {}x{}; sizes must be multiples of {}", what,
                                    i, f.height(), f.width(), mult));
    }
  }
}

double capped(double psnr_db) { return std::min(psnr_db, kPsnrCap); }

Triplet training_sample(const Triplet& t, const TrainConfig& config, int epoch, std::size_t index) {
  if (!config.augment && config.crop == 0) return t;
  AugmentOptions opt;
  opt.crop = config.crop;
  if (!config.augment) opt.p_hflip = opt.p_vflip = opt.p_swap = 0.0;
  const std::uint64_t s = derive_seed(derive_seed(config.seed, kAugmentStream),
                                      static_cast<std::uint64_t>(epoch) * 1000003ULL + index);
  return augment(t, s, opt);
}

struct BatchResult {
  double loss = 0.0;
  ParameterSet<float> grads;
};

// Distortion-loss gradient of the batch mean.
BatchResult distortion_batch(const ParameterSet<float>& params, const TrainConfig& config,
                             const std::vector<Triplet>& batch) {
  const std::size_t n = batch.size();
  std::vector<SynthesisTape<float>> tapes(n);
  std::vector<Tensor> grads(n);
  std::vector<double> losses(n);
  parallel_for(0, n, [&](std::size_t i) {
    const Triplet& t = batch[i];
    const auto s = synthesize(params, config.model, t.first.pixels(), t.last.pixels(), &tapes[i]);
    auto l = charbonnier_l1(s.output, t.middle.pixels(), config.loss.epsilon);
    losses[i] = l.value;
    l.grad *= 1.0F / static_cast<float>(n);
    grads[i] = std::move(l.grad);
  });
  BatchResult r;
  r.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  if (!std::isfinite(r.loss)) return r;
  r.grads = batch_backward<float>(tapes, params, grads);
  return r;
}

struct AdversarialState {
  Discriminator<float> disc;
  AdamaxState<float> opt;
};

// One discriminator step followed by one generator step on the perceptual
// objective, both on the same batch.
BatchResult adversarial_batch(const ParameterSet<float>& params, const TrainConfig& config,
                              const std::vector<Triplet>& batch, AdversarialState& adv) {
  const std::size_t n = batch.size();
  const float inv_n = 1.0F / static_cast<float>(n);
  std::vector<SynthesisTape<float>> tapes(n);
  parallel_for(0, n, [&](std::size_t i) {
    synthesize(params, config.model, batch[i].first.pixels(), batch[i].last.pixels(), &tapes[i]);
  });

  // Discriminator: -log C([I_n, I_out]) - log(1 - C([I_out, I_n+1])).
  std::vector<ParameterSet<float>> dgrads(n);
  parallel_for(0, n, [&](std::size_t i) {
    const Tensor& out = tapes[i].result.output;
    typename Discriminator<float>::Tape t1;
    typename Discriminator<float>::Tape t2;
    const double c1 = adv.disc.forward(batch[i].first.pixels(), out, &t1);
    const double c2 = adv.disc.forward(out, batch[i].last.pixels(), &t2);
    const AdversarialTerm term = discriminator_loss(c1, c2);
    auto g = adv.disc.backward(t1, term.d_first * inv_n).params;
    g.accumulate(adv.disc.backward(t2, term.d_second * inv_n).params);
    dgrads[i] = std::move(g);
  });
  ParameterSet<float> dsum = adv.disc.params().zeros_like();
  for (const auto& g : dgrads) dsum.accumulate(g);
  adamax_step(adv.opt, adv.disc.params(), dsum);

  // Generator on lambda_1 L1 + lambda_vgg Lvgg + lambda_adv Ladv.
  const GradientFilterBank<float> bank(static_cast<std::size_t>(config.model.frame_channels));
  std::vector<Tensor> grads(n);
  std::vector<double> losses(n);
  parallel_for(0, n, [&](std::size_t i) {
    const Tensor& out = tapes[i].result.output;
    const Tensor& gt = batch[i].middle.pixels();
    LossComponents<float> parts;
    parts.l1 = charbonnier_l1(out, gt, config.loss.epsilon);
    if (config.loss.lambda_vgg != 0.0) parts.perceptual = perceptual_loss(out, gt, bank);
    if (config.loss.lambda_adv != 0.0) {
      typename Discriminator<float>::Tape t1;
      typename Discriminator<float>::Tape t2;
      const double c1 = adv.disc.forward(batch[i].first.pixels(), out, &t1);
      const double c2 = adv.disc.forward(out, batch[i].last.pixels(), &t2);
      const AdversarialTerm term = generator_entropy_loss(c1, c2, config.loss.binary_entropy);
      Tensor g = adv.disc.backward(t1, term.d_first).second;
      g += adv.disc.backward(t2, term.d_second).first;
      parts.adversarial = ScalarLoss<float>{term.value, std::move(g)};
    }
    auto total = combined_loss(config.loss, parts);
    losses[i] = total.value;
    total.grad *= inv_n;
    grads[i] = std::move(total.grad);
  });
  BatchResult r;
  r.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(n);
  if (!std::isfinite(r.loss)) return r;
  r.grads = batch_backward<float>(tapes, params, grads);
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be finite and >= 0");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (epochs < 0 || finetune_epochs < 0) throw ConfigError("epoch counts must be nonnegative");
  if (halving_period <= 0) throw ConfigError("LR halving period must be positive");
  if (crop != 0 && crop % model.size_multiple() != 0) {
    throw ConfigError(fmt::format("crop {} must be a multiple of {}", crop, model.size_multiple()));
  }
}

TrainConfig parse_train_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("train config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  static const std::set<std::string> known = {
      "dataset_dir", "F", "d", "depth", "widths", "lr", "batch", "epochs", "seed", "mode",
      "lambda_1", "lambda_vgg", "lambda_adv", "val_dir", "warp_mode", "use_occlusion",
      "head_width", "finetune_epochs", "crop", "augment", "halving_period", "binary_entropy"};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) {
      throw ConfigError(fmt::format("train config: unknown key '{}'", item.key()));
    }
  }

  TrainConfig c;
  c.dataset_dir = resolve(base_dir, required<std::string>(j, "dataset_dir"));
  c.val_dir = resolve(base_dir, optional<std::string>(j, "val_dir", ""));
  c.model.kernel_size = required<int>(j, "F");
  c.model.dilation = required<int>(j, "d");
  c.model.depth = required<int>(j, "depth");
  c.model.widths = required<std::vector<int>>(j, "widths");
  c.model.head_width = optional<int>(j, "head_width", c.model.head_width);
  c.model.use_occlusion = optional<bool>(j, "use_occlusion", true);
  const auto warp = optional<std::string>(j, "warp_mode", "adacof");
  const auto wm = parse_warp_mode(warp);
  if (!wm) throw ConfigError(fmt::format("train config: unknown warp_mode '{}'", warp));
  c.model.warp_mode = *wm;
  c.lr = required<double>(j, "lr");
  const auto batch = required<long long>(j, "batch");
  if (batch <= 0) throw ConfigError("train config: batch must be positive");
  c.batch = static_cast<std::size_t>(batch);
  c.epochs = required<int>(j, "epochs");
  c.seed = required<std::uint64_t>(j, "seed");
  c.model.seed = c.seed;
  const auto mode = required<std::string>(j, "mode");
  const auto lm = parse_loss_mode(mode);
  if (!lm) throw ConfigError(fmt::format("train config: unknown loss mode '{}'", mode));
  c.loss.mode = *lm;
  c.loss.lambda_1 = required<double>(j, "lambda_1");
  c.loss.lambda_vgg = required<double>(j, "lambda_vgg");
  c.loss.lambda_adv = required<double>(j, "lambda_adv");
  c.loss.binary_entropy = optional<bool>(j, "binary_entropy", false);
  c.finetune_epochs = optional<int>(j, "finetune_epochs", c.finetune_epochs);
  const auto crop = optional<long long>(j, "crop", 0);
  if (crop < 0) throw ConfigError("train config: crop must be nonnegative");
  c.crop = static_cast<std::size_t>(crop);
  c.augment = optional<bool>(j, "augment", true);
  c.halving_period = optional<int>(j, "halving_period", c.halving_period);
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open train config {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), path.parent_path());
}

std::string epoch_csv_header() { return "epoch,phase,loss,val_psnr,val_ssim"; }

std::string to_csv(const EpochRecord& r) {
  return fmt::format("{},{},{:.6g},{:.6g},{:.6g}", r.epoch, r.phase, r.loss, r.val_psnr, r.val_ssim);
}

Frame interpolate(const ParameterSet<float>& params, const ModelConfig& config, const Frame& first,
                  const Frame& last, ModelOutput<float>* params_out) {
  auto s = synthesize(params, config, first.pixels(), last.pixels());
  if (params_out) *params_out = std::move(s.params);
  return to_frame(s.output);
}

Frame frame_average(const Frame& first, const Frame& last) {
  require_same_shape(first.pixels().shape(), last.pixels().shape(), "frame_average");
  Tensor t = first.pixels();
  t += last.pixels();
  t *= 0.5F;
  return Frame(std::move(t));
}

namespace {

SetMetrics summarize(const std::vector<MetricRow>& rows) {
  SetMetrics m;
  if (rows.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  for (const auto& r : rows) {
    m.psnr_db += capped(r.psnr_db);
    m.ssim += r.ssim;
    m.ie += r.ie;
  }
  const auto n = static_cast<double>(rows.size());
  return {m.psnr_db / n, m.ssim / n, m.ie / n};
}

template <typename Fn>
SetMetrics evaluate_with(const std::vector<Triplet>& set, std::vector<MetricRow>* rows, Fn synth) {
  std::vector<MetricRow> local(set.size());
  parallel_for(0, set.size(), [&](std::size_t i) {
    local[i] = evaluate_pair(fmt::format("{:04d}", i), synth(set[i]), set[i].middle);
  });
  const SetMetrics m = summarize(local);
  if (rows) *rows = std::move(local);
  return m;
}

}  // namespace

SetMetrics evaluate_model(const ParameterSet<float>& params, const ModelConfig& config,
                          const std::vector<Triplet>& set, std::vector<MetricRow>* rows) {
  return evaluate_with(set, rows, [&](const Triplet& t) {
    return interpolate(params, config, t.first, t.last);
  });
}

SetMetrics evaluate_frame_average(const std::vector<Triplet>& set, std::vector<MetricRow>* rows) {
  return evaluate_with(set, rows, [](const Triplet& t) { return frame_average(t.first, t.last); });
}

TrainResult train(const TrainConfig& config, const std::vector<Triplet>& train_set,
                  const std::vector<Triplet>& val_set, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) throw ConfigError("training set is empty");
  check_set(train_set, config, "training");
  check_set(val_set, config, "validation");
  auto log = [&](const std::string& line) {
    if (options.log) options.log(line);
  };

  const bool write = !options.out_dir.empty();
  if (write) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", options.out_dir.string(), ec.message()));
    std::ofstream(options.out_dir / "metrics.csv", std::ios::trunc) << epoch_csv_header() << "\n";
    std::ofstream(options.out_dir / "quarters.csv", std::ios::trunc) << "epoch,quarter,loss\n";
  }

  TrainResult result;
  ModelConfig model = config.model;
  model.seed = config.seed;
  ParameterSet<float> params = init_parameters<float>(model);
  AdamaxSettings settings;
  settings.lr = config.lr;
  AdamaxState<float> opt = make_adamax_state(params, settings);
  const LrSchedule schedule{config.lr, config.halving_period};

  std::optional<AdversarialState> adv;
  const bool perception = config.loss.mode == LossMode::perception;
  const int total_epochs = config.epochs + (perception ? config.finetune_epochs : 0);
  if (perception && config.finetune_epochs > 0) {
    Discriminator<float> disc(model.frame_channels, derive_seed(config.seed, kDiscriminatorStream));
    AdamaxSettings ds;
    ds.lr = config.lr;
    auto dopt = make_adamax_state(disc.params(), ds);
    adv.emplace(AdversarialState{std::move(disc), std::move(dopt)});
  }

  const std::size_t n = train_set.size();
  const std::size_t batches = (n + config.batch - 1) / config.batch;
  std::vector<std::size_t> order(n);

  for (int epoch = 0; epoch < total_epochs; ++epoch) {
    const bool phase2 = epoch >= config.epochs;
    const double lr = schedule.lr_at(epoch);
    opt.settings.lr = lr;
    if (adv) adv->opt.settings.lr = lr;

    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(derive_seed(config.seed, kShuffleStream), static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> batch_losses(batches);
    std::vector<Triplet> batch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch;
      const std::size_t hi = std::min(n, lo + config.batch);
      batch.assign(hi - lo, Triplet{});
      for (std::size_t k = lo; k < hi; ++k) {
        batch[k - lo] = training_sample(train_set[order[k]], config, epoch, k);
      }
      BatchResult r = phase2 ? adversarial_batch(params, config, batch, *adv)
                             : distortion_batch(params, config, batch);
      if (!std::isfinite(r.loss)) {
        throw NumericError(fmt::format("non-finite training loss at epoch {}, batch {}", epoch, b));
      }
      adamax_step(opt, params, r.grads);
      batch_losses[b] = r.loss;
    }

    double epoch_loss = 0.0;
    for (double l : batch_losses) epoch_loss += l;
    epoch_loss /= static_cast<double>(batches);
    for (int q = 0; q < 4; ++q) {
      const std::size_t qlo = batches * static_cast<std::size_t>(q) / 4;
      const std::size_t qhi = batches * static_cast<std::size_t>(q + 1) / 4;
      if (qhi == qlo) continue;
      double s = 0.0;
      for (std::size_t b = qlo; b < qhi; ++b) s += batch_losses[b];
      result.quarters.push_back({epoch, q, s / static_cast<double>(qhi - qlo)});
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = phase2 ? "adversarial" : "distortion";
    rec.loss = epoch_loss;
    const SetMetrics vm = evaluate_model(params, model, val_set);
    rec.val_psnr = vm.psnr_db;
    rec.val_ssim = vm.ssim;
    result.epochs.push_back(rec);
    log(fmt::format("epoch {:3d} {:<11} lr {:.3g} loss {:.6g} val_psnr {:.4f} val_ssim {:.4f}", epoch,
                    rec.phase, lr, rec.loss, rec.val_psnr, rec.val_ssim));

    if (write) {
      append_file(options.out_dir / "metrics.csv", to_csv(rec) + "\n");
      std::string q;
      for (const auto& qr : result.quarters) {
        if (qr.epoch == epoch) q += fmt::format("{},{},{:.6g}\n", qr.epoch, qr.quarter, qr.loss);
      }
      append_file(options.out_dir / "quarters.csv", q);
      write_checkpoint(options.out_dir / fmt::format("epoch_{:03d}.ackp", epoch),
                       Checkpoint{model, params, opt});
    }
  }

  result.checkpoint = Checkpoint{model, std::move(params), std::move(opt)};
  if (write) write_checkpoint(options.out_dir / "final.ackp", result.checkpoint);
  return result;
}

}  // namespace adacof
