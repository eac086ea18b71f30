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

#include "adacof/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "adacof/errors.hpp"
#include "adacof/losses.hpp"
#include "adacof/synthnet.hpp"
#include "adacof/warp.hpp"

namespace adacof {
namespace {

using Rng = std::mt19937_64;

// Piecewise-linear blocks (bilinear sampling, convex combination) are exact
// under central differences, so a wide step keeps rounding out of the way.
// Weights must stay within the sum-to-one tolerance, hence the tiny step.
constexpr double kLinearStep = 1e-4;
constexpr double kWeightStep = 1e-7;
constexpr double kSmoothStep = 1e-6;
// Entries far below the block's largest gradient are judged against this
// fraction of it rather than their own magnitude.
constexpr double kFloorFraction = 1e-3;

TensorD uniform(Shape shape, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  TensorD t(std::move(shape));
  for (double& v : t.values()) v = dist(rng);
  return t;
}

// Projection of f's output onto r, differenced elementwise so untouched
// outputs contribute exactly zero.
double projected_difference(const TensorD& plus, const TensorD& minus, const TensorD& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r[i] * (plus[i] - minus[i]);
  return s;
}

std::vector<std::size_t> pick(std::size_t n, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (count >= n) return idx;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Compares analytic[i] with central(i, h) for every listed index.
GradcheckBlock check(std::string name, const TensorD& analytic,
                     const std::function<double(std::size_t, double)>& central, double h,
                     const std::vector<std::size_t>& indices) {
  std::vector<double> numeric(indices.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    numeric[k] = central(indices[k], h);
    scale = std::max({scale, std::abs(numeric[k]), std::abs(analytic[indices[k]])});
  }
  const double floor = std::max(kFloorFraction * scale, 1e-12);
  GradcheckBlock b{std::move(name), 0.0, indices.size()};
  for (std::size_t k = 0; k < indices.size(); ++k) {
    b.max_rel_error = std::max(b.max_rel_error, relative_error(analytic[indices[k]], numeric[k], floor));
  }
  return b;
}

// A kink inside [x - h, x + h] (ReLU, a bilinear cell border) shows up as
// disagreeing one-sided slopes; the step is then shrunk until it no longer
// straddles the kink.
constexpr int kMaxRefinements = 3;
constexpr double kKinkTolerance = 1e-3;

bool straddles_kink(double forward, double backward, double scale) {
  return std::abs(forward - backward) >
         kKinkTolerance * std::max({std::abs(forward), std::abs(backward), scale, 1e-12});
}

double analytic_scale(const TensorD& analytic, const std::vector<std::size_t>& indices) {
  double s = 0.0;
  for (std::size_t i : indices) s = std::max(s, std::abs(analytic[i]));
  return s;
}

// Central difference of a tensor-valued function projected onto r, taken
// with respect to entries of `x`.
GradcheckBlock check_tensor(std::string name, TensorD& x, const TensorD& analytic,
                            const std::function<TensorD()>& f, const TensorD& r, double h,
                            const std::vector<std::size_t>& indices) {
  const TensorD base = f();
  const double scale = analytic_scale(analytic, indices);
  std::function<double(std::size_t, double)> central = [&](std::size_t i, double step) {
    const double saved = x[i];
    x[i] = saved + step;
    const TensorD plus = f();
    x[i] = saved - step;
    const TensorD minus = f();
    x[i] = saved;
    const double fwd = projected_difference(plus, base, r) / step;
    const double bwd = projected_difference(base, minus, r) / step;
    if (straddles_kink(fwd, bwd, scale) && step > h * std::pow(0.1, kMaxRefinements - 0.5)) {
      return central(i, step * 0.1);
    }
    return projected_difference(plus, minus, r) / (2.0 * step);
  };
  return check(std::move(name), analytic, central, h, indices);
}

// Same for a scalar function.
GradcheckBlock check_scalar(std::string name, TensorD& x, const TensorD& analytic,
                            const std::function<double()>& f, double h,
                            const std::vector<std::size_t>& indices) {
  const double base = f();
  const double scale = analytic_scale(analytic, indices);
  std::function<double(std::size_t, double)> central = [&](std::size_t i, double step) {
    const double saved = x[i];
    x[i] = saved + step;
    const double plus = f();
    x[i] = saved - step;
    const double minus = f();
    x[i] = saved;
    if (straddles_kink((plus - base) / step, (base - minus) / step, scale) &&
        step > h * std::pow(0.1, kMaxRefinements - 0.5)) {
      return central(i, step * 0.1);
    }
    return (plus - minus) / (2.0 * step);
  };
  return check(std::move(name), analytic, central, h, indices);
}

std::vector<std::size_t> all(const TensorD& t) {
  std::vector<std::size_t> idx(t.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// Weights bounded away from zero, normalized per pixel.
TensorD random_weights(std::size_t taps, std::size_t h, std::size_t w, Rng& rng) {
  TensorD t = uniform({taps, h, w}, rng, 0.2, 1.0);
  const std::size_t n = h * w;
  for (std::size_t p = 0; p < n; ++p) {
    double s = 0.0;
    for (std::size_t k = 0; k < taps; ++k) s += t[k * n + p];
    for (std::size_t k = 0; k < taps; ++k) t[k * n + p] /= s;
  }
  return t;
}

// Nudges v so that base + v stays at least `margin` away from every integer
// (cell borders and the clamp limits 0 and H-1).
double off_grid(double base, double v, double margin = 0.1) {
  const double c = base + v;
  const double frac = c - std::floor(c);
  if (frac < margin) return v + margin;
  if (frac > 1.0 - margin) return v - margin;
  return v;
}

// Offsets in [-2.5, 2.5] px with off-grid sampling coordinates.
void jitter_offsets(WarpParams<double>& p, Rng& rng) {
  const std::size_t h = p.height();
  const std::size_t w = p.width();
  const int f = p.kernel_size;
  p.alpha = uniform({p.taps(), h, w}, rng, -2.5, 2.5);
  p.beta = uniform({p.taps(), h, w}, rng, -2.5, 2.5);
  for (int k = 0; k < f; ++k) {
    for (int l = 0; l < f; ++l) {
      const std::size_t t = static_cast<std::size_t>(k * f + l);
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          double& a = p.alpha.at(t, i, j);
          double& b = p.beta.at(t, i, j);
          a = off_grid(static_cast<double>(i) + p.grid_offset(k), a);
          b = off_grid(static_cast<double>(j) + p.grid_offset(l), b);
        }
      }
    }
  }
}

WarpParams<double> random_params(int f, int d, std::size_t h, std::size_t w, Rng& rng) {
  WarpParams<double> p;
  p.kernel_size = f;
  p.dilation = d;
  p.weights = random_weights(p.taps(), h, w, rng);
  jitter_offsets(p, rng);
  return p;
}

void check_warp(GradcheckReport& report, int f, int d, std::size_t c, std::size_t h, std::size_t w,
                Rng& rng) {
  const std::string tag = "F" + std::to_string(f) + "d" + std::to_string(d);
  TensorD input = uniform({c, h, w}, rng, 0.0, 1.0);
  WarpParams<double> p = random_params(f, d, h, w, rng);
  const TensorD r = uniform({c, h, w}, rng, -1.0, 1.0);
  const auto g = backward_warp_vjp(input, p, r, true);
  auto f_out = [&] { return forward_warp(input, p); };
  report.blocks.push_back(check_tensor("warp." + tag + ".input", input, g.input, f_out, r, kLinearStep, all(input)));
  report.blocks.push_back(check_tensor("warp." + tag + ".weights", p.weights, g.weights, f_out, r, kWeightStep, all(p.weights)));
  report.blocks.push_back(check_tensor("warp." + tag + ".alpha", p.alpha, g.alpha, f_out, r, kLinearStep, all(p.alpha)));
  report.blocks.push_back(check_tensor("warp." + tag + ".beta", p.beta, g.beta, f_out, r, kLinearStep, all(p.beta)));
}

void check_blend(GradcheckReport& report, bool enabled, Rng& rng) {
  const std::string tag = enabled ? "blend" : "blend_average";
  TensorD a = uniform({3, 6, 5}, rng, 0.0, 1.0);
  TensorD b = uniform({3, 6, 5}, rng, 0.0, 1.0);
  OcclusionMap<double> v{uniform({1, 6, 5}, rng, 0.1, 0.9)};
  const TensorD r = uniform({3, 6, 5}, rng, -1.0, 1.0);
  const auto g = occlusion_blend_vjp(a, b, v, r, enabled);
  auto f_out = [&] { return occlusion_blend(a, b, v, enabled); };
  report.blocks.push_back(check_tensor(tag + ".fwd", a, g.fwd, f_out, r, kLinearStep, all(a)));
  report.blocks.push_back(check_tensor(tag + ".bwd", b, g.bwd, f_out, r, kLinearStep, all(b)));
  report.blocks.push_back(check_tensor(tag + ".v", v.values, g.v, f_out, r, kLinearStep, all(v.values)));
}

void check_mode(GradcheckReport& report, WarpMode mode, Rng& rng) {
  const std::size_t c = 2;
  const std::size_t h = 6;
  const std::size_t w = 7;
  const int f = mode == WarpMode::flow_only ? 1 : 3;
  const int d = 1;
  TensorD input = uniform({c, h, w}, rng, 0.0, 1.0);
  RawHeads<double> raw;
  raw.kernel_size = f;
  raw.dilation = d;
  const std::size_t taps = static_cast<std::size_t>(f * f);
  raw.weights = random_weights(taps, h, w, rng);
  const std::size_t oc = offset_channels(mode, f);
  if (oc == taps) {
    WarpParams<double> tmp = random_params(f, d, h, w, rng);
    raw.alpha = tmp.alpha;
    raw.beta = tmp.beta;
  } else {
    // One shared vector: off-grid for every tap since the grid is integral.
    raw.alpha = uniform({oc, h, w}, rng, -2.5, 2.5);
    raw.beta = uniform({oc, h, w}, rng, -2.5, 2.5);
    for (double& v : raw.alpha.values()) v = off_grid(0.0, v);
    for (double& v : raw.beta.values()) v = off_grid(0.0, v);
  }
  const TensorD r = uniform({c, h, w}, rng, -1.0, 1.0);
  const auto params = make_mode_params(mode, raw);
  const auto wg = backward_warp_vjp(input, params, r, false);
  const auto g = make_mode_params_vjp(mode, raw, wg);
  auto f_out = [&] { return forward_warp(input, make_mode_params(mode, raw)); };
  const std::string tag = "mode." + std::string(to_string(mode));
  report.blocks.push_back(check_tensor(tag + ".weights", raw.weights, g.weights, f_out, r, kWeightStep, all(raw.weights)));
  report.blocks.push_back(check_tensor(tag + ".alpha", raw.alpha, g.alpha, f_out, r, kLinearStep, all(raw.alpha)));
  report.blocks.push_back(check_tensor(tag + ".beta", raw.beta, g.beta, f_out, r, kLinearStep, all(raw.beta)));
}

GradcheckReport adacof_suite(std::uint64_t seed) {
  GradcheckReport report;
  report.module = GradcheckModule::adacof;
  Rng rng(seed);
  check_warp(report, 3, 1, 2, 7, 7, rng);
  check_warp(report, 2, 2, 1, 8, 6, rng);
  check_warp(report, 1, 0, 3, 5, 5, rng);
  check_blend(report, true, rng);
  check_blend(report, false, rng);
  for (WarpMode m : {WarpMode::adacof, WarpMode::flow_only, WarpMode::kernel_only,
                     WarpMode::shared_weight, WarpMode::sdc}) {
    check_mode(report, m, rng);
  }
  return report;
}

GradcheckReport losses_suite(std::uint64_t seed) {
  GradcheckReport report;
  report.module = GradcheckModule::losses;
  Rng rng(seed);
  const Shape shape{3, 8, 8};

  {
    TensorD a = uniform(shape, rng, 0.0, 1.0);
    const TensorD b = uniform(shape, rng, 0.0, 1.0);
    const double eps = 1e-3;
    const auto l = charbonnier_l1(a, b, eps);
    report.blocks.push_back(check_scalar(
        "charbonnier", a, l.grad, [&] { return charbonnier_l1(a, b, eps).value; }, kSmoothStep, all(a)));
  }
  {
    const GradientFilterBank<double> bank(3);
    TensorD out = uniform(shape, rng, 0.0, 1.0);
    const TensorD gt = uniform(shape, rng, 0.0, 1.0);
    const auto l = perceptual_loss(out, gt, bank);
    report.blocks.push_back(check_scalar(
        "perceptual", out, l.grad, [&] { return perceptual_loss(out, gt, bank).value; }, kSmoothStep, all(out)));
  }
  for (bool binary : {false, true}) {
    TensorD c = uniform({2}, rng, 0.05, 0.95);
    const auto t = generator_entropy_loss(c[0], c[1], binary);
    const TensorD g({2}, std::vector<double>{t.d_first, t.d_second});
    report.blocks.push_back(check_scalar(
        binary ? "adversarial.binary_entropy" : "adversarial", c, g,
        [&] { return generator_entropy_loss(c[0], c[1], binary).value; }, kSmoothStep, all(c)));
  }
  {
    TensorD c = uniform({2}, rng, 0.05, 0.95);
    const auto t = discriminator_loss(c[0], c[1]);
    const TensorD g({2}, std::vector<double>{t.d_first, t.d_second});
    report.blocks.push_back(check_scalar(
        "discriminator_loss", c, g, [&] { return discriminator_loss(c[0], c[1]).value; }, kSmoothStep, all(c)));
  }
  {
    Discriminator<double> disc(3, rng(), 4);
    TensorD a = uniform(shape, rng, 0.0, 1.0);
    TensorD b = uniform(shape, rng, 0.0, 1.0);
    typename Discriminator<double>::Tape tape;
    disc.forward(a, b, &tape);
    const auto g = disc.backward(tape, 1.0);
    auto prob = [&] { return disc.forward(a, b); };
    report.blocks.push_back(check_scalar("discriminator.first", a, g.first, prob, kSmoothStep, all(a)));
    report.blocks.push_back(check_scalar("discriminator.second", b, g.second, prob, kSmoothStep, all(b)));
    for (std::size_t i = 0; i < disc.params().size(); ++i) {
      const std::string name = disc.params()[i].name;
      TensorD& x = disc.params().mutable_value(i);
      report.blocks.push_back(check_scalar("discriminator." + name, x, g.params[i].value, prob,
                                           kSmoothStep, all(x)));
    }
  }
  {
    // Full perceptual objective with the adversarial path through the
    // discriminator.
    const GradientFilterBank<double> bank(3);
    Discriminator<double> disc(3, rng(), 4);
    const TensorD first = uniform(shape, rng, 0.0, 1.0);
    const TensorD last = uniform(shape, rng, 0.0, 1.0);
    const TensorD gt = uniform(shape, rng, 0.0, 1.0);
    TensorD out = uniform(shape, rng, 0.0, 1.0);
    LossConfig cfg;
    cfg.mode = LossMode::perception;
    cfg.lambda_1 = 0.5;
    cfg.lambda_vgg = 1.0;
    cfg.lambda_adv = 0.5;
    auto total = [&](bool with_grad) {
      LossComponents<double> parts;
      parts.l1 = charbonnier_l1(out, gt, cfg.epsilon);
      parts.perceptual = perceptual_loss(out, gt, bank);
      typename Discriminator<double>::Tape t1;
      typename Discriminator<double>::Tape t2;
      const double c1 = disc.forward(first, out, &t1);
      const double c2 = disc.forward(out, last, &t2);
      const auto term = generator_entropy_loss(c1, c2);
      TensorD g(shape);
      if (with_grad) {
        g = disc.backward(t1, term.d_first).second;
        g += disc.backward(t2, term.d_second).first;
      }
      parts.adversarial = ScalarLoss<double>{term.value, std::move(g)};
      return combined_loss(cfg, parts);
    };
    const auto l = total(true);
    report.blocks.push_back(check_scalar(
        "combined.perception", out, l.grad, [&] { return total(false).value; }, kSmoothStep, all(out)));
  }
  return report;
}

GradcheckReport network_suite(std::uint64_t seed) {
  GradcheckReport report;
  report.module = GradcheckModule::network;
  Rng rng(seed);
  ModelConfig cfg;
  cfg.kernel_size = 3;
  cfg.dilation = 1;
  cfg.depth = 2;
  cfg.widths = {4, 6};
  cfg.head_width = 4;
  cfg.frame_channels = 3;
  cfg.seed = seed;

  // Random everywhere, including the final head layers that start at zero.
  ParameterSet<double> params = init_parameters<double>(cfg);
  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorD& t = params.mutable_value(i);
    double sd = 0.1;
    if (t.rank() == 4) sd = 1.0 / std::sqrt(static_cast<double>(t.dim(1) * t.dim(2) * t.dim(3)));
    std::normal_distribution<double> normal(0.0, sd);
    for (double& v : t.values()) v = normal(rng);
  }
  const TensorD first = uniform({3, 8, 8}, rng, 0.0, 1.0);
  const TensorD second = uniform({3, 8, 8}, rng, 0.0, 1.0);
  const TensorD r = uniform({3, 8, 8}, rng, -1.0, 1.0);

  SynthesisTape<double> tape;
  synthesize(params, cfg, first, second, &tape);
  const ParameterSet<double> grads = synthesize_backward(tape, params, r);

  constexpr std::size_t kPerTensor = 6;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const std::string name = params[i].name;
    const TensorD analytic = grads[i].value;
    const auto idx = pick(params[i].value.size(), kPerTensor, rng);
    TensorD& x = params.mutable_value(i);
    report.blocks.push_back(check_tensor(
        "network." + name, x, analytic, [&] { return synthesize(params, cfg, first, second).output; }, r,
        kSmoothStep, idx));
  }
  return report;
}

}  // namespace

std::string_view to_string(GradcheckModule module) {
  switch (module) {
    case GradcheckModule::adacof: return "adacof";
    case GradcheckModule::network: return "network";
    case GradcheckModule::losses: return "losses";
  }
  return "unknown";
}

std::optional<GradcheckModule> parse_gradcheck_module(std::string_view name) {
  if (name == "adacof") return GradcheckModule::adacof;
  if (name == "network") return GradcheckModule::network;
  if (name == "losses") return GradcheckModule::losses;
  return std::nullopt;
}

double GradcheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& b : blocks) m = std::max(m, b.max_rel_error);
  return m;
}

double gradcheck_threshold(GradcheckModule module) {
  return module == GradcheckModule::network ? 1e-3 : 1e-4;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  if (denom == 0.0) return 0.0;
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport run_gradcheck(GradcheckModule module, std::uint64_t seed) {
  GradcheckReport r;
  switch (module) {
    case GradcheckModule::adacof: r = adacof_suite(seed); break;
    case GradcheckModule::network: r = network_suite(seed); break;
    case GradcheckModule::losses: r = losses_suite(seed); break;
  }
  r.threshold = gradcheck_threshold(module);
  return r;
}

}  // namespace adacof
