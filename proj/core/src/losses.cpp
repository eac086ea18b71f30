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

#include "adacof/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "adacof/errors.hpp"
#include "adacof/nn.hpp"

namespace adacof {

std::string_view to_string(LossMode mode) {
  return mode == LossMode::distortion ? "distortion" : "perception";
}

std::optional<LossMode> parse_loss_mode(std::string_view name) {
  if (name == "distortion") return LossMode::distortion;
  if (name == "perception") return LossMode::perception;
  return std::nullopt;
}

void LossConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("Charbonnier epsilon must be positive");
  if (!(lambda_1 >= 0.0) || !(lambda_vgg >= 0.0) || !(lambda_adv >= 0.0)) {
    throw ConfigError("loss weights must be nonnegative");
  }
}

template <typename T>
ScalarLoss<T> charbonnier_l1(const BasicTensor<T>& a, const BasicTensor<T>& b, double epsilon) {
  require_same_shape(a.shape(), b.shape(), "charbonnier_l1");
  if (a.empty()) throw ConfigError("charbonnier_l1 on empty tensors");
  if (!(epsilon > 0.0)) throw ConfigError("Charbonnier epsilon must be positive");
  const double n = static_cast<double>(a.size());
  const double eps2 = epsilon * epsilon;
  ScalarLoss<T> loss{0.0, BasicTensor<T>(a.shape())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    const double phi = std::sqrt(x * x + eps2);
    loss.value += phi;
    loss.grad[i] = static_cast<T>(x / phi / n);
  }
  loss.value /= n;
  return loss;
}

template <typename T>
GradientFilterBank<T>::GradientFilterBank(std::size_t frame_channels)
    : weight_({8, frame_channels, 3, 3}), bias_({8}) {
  if (frame_channels == 0) throw ConfigError("feature extractor needs at least one channel");
  // Sobel pair; orientation k uses cos(k*45°)*Sx + sin(k*45°)*Sy.
  constexpr double sx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  constexpr double sy[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  const double inv_c = 1.0 / static_cast<double>(frame_channels);
  for (std::size_t k = 0; k < 8; ++k) {
    const double angle = static_cast<double>(k) * std::numbers::pi / 4.0;
    const double ca = std::cos(angle);
    const double sa = std::sin(angle);
    for (std::size_t c = 0; c < frame_channels; ++c) {
      for (std::size_t y = 0; y < 3; ++y) {
        for (std::size_t x = 0; x < 3; ++x) {
          weight_[((k * frame_channels + c) * 3 + y) * 3 + x] =
              static_cast<T>((ca * sx[y][x] + sa * sy[y][x]) * inv_c / 8.0);
        }
      }
    }
  }
}

template <typename T>
BasicTensor<T> GradientFilterBank<T>::extract(const BasicTensor<T>& frame) const {
  return nn::avg_pool2(nn::relu(nn::conv2d(frame, weight_, bias_)));
}

template <typename T>
BasicTensor<T> GradientFilterBank<T>::extract_vjp(const BasicTensor<T>& frame,
                                                  const BasicTensor<T>& upstream) const {
  const auto pre = nn::conv2d(frame, weight_, bias_);
  const auto d_act = nn::avg_pool2_vjp(pre.shape(), upstream);
  const auto d_pre = nn::relu_vjp(pre, d_act);
  return nn::conv2d_vjp(frame, weight_, d_pre).input;
}

template <typename T>
ScalarLoss<T> perceptual_loss(const BasicTensor<T>& out, const BasicTensor<T>& gt,
                              const FeatureExtractor<T>& extractor) {
  require_same_shape(out.shape(), gt.shape(), "perceptual_loss");
  const auto fo = extractor.extract(out);
  const auto fg = extractor.extract(gt);
  require_same_shape(fo.shape(), fg.shape(), "perceptual_loss features");
  const double n = static_cast<double>(fo.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < fo.size(); ++i) {
    const double d = static_cast<double>(fo[i]) - static_cast<double>(fg[i]);
    sq += d * d;
  }
  ScalarLoss<T> loss;
  loss.value = std::sqrt(sq / n);
  BasicTensor<T> d_features(fo.shape());
  if (loss.value > 0.0) {
    for (std::size_t i = 0; i < fo.size(); ++i) {
      d_features[i] = static_cast<T>((static_cast<double>(fo[i]) - static_cast<double>(fg[i])) / (n * loss.value));
    }
  }
  loss.grad = extractor.extract_vjp(out, d_features);
  return loss;
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

AdversarialTerm discriminator_loss(double c_real_first, double c_fake_first) {
  const double c1 = clamp_probability(c_real_first);
  const double c2 = clamp_probability(c_fake_first);
  return {-std::log(c1) - std::log(1.0 - c2), -1.0 / c1, 1.0 / (1.0 - c2)};
}

AdversarialTerm generator_entropy_loss(double c1_in, double c2_in, bool binary_entropy) {
  const double c1 = clamp_probability(c1_in);
  const double c2 = clamp_probability(c2_in);
  if (!binary_entropy) {
    return {c1 * std::log(c1) + c2 * std::log(c2), std::log(c1) + 1.0, std::log(c2) + 1.0};
  }
  auto neg_entropy = [](double c) { return c * std::log(c) + (1.0 - c) * std::log(1.0 - c); };
  auto slope = [](double c) { return std::log(c) - std::log(1.0 - c); };
  return {neg_entropy(c1) + neg_entropy(c2), slope(c1), slope(c2)};
}

template <typename T>
Discriminator<T>::Discriminator(int frame_channels, std::uint64_t seed, int width)
    : frame_channels_(frame_channels) {
  if (frame_channels <= 0 || width <= 0) throw ConfigError("invalid discriminator geometry");
  std::mt19937_64 rng(seed);
  auto he = [&](Shape shape, double fan_in) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
    BasicTensor<T> t(std::move(shape));
    for (auto& v : t.values()) v = static_cast<T>(normal(rng));
    return t;
  };
  const auto in = static_cast<std::size_t>(2 * frame_channels);
  const auto w = static_cast<std::size_t>(width);
  params_.add("conv1.weight", he({w, in, 3, 3}, static_cast<double>(in * 9)));
  params_.add("conv1.bias", BasicTensor<T>({w}));
  params_.add("conv2.weight", he({2 * w, w, 3, 3}, static_cast<double>(w * 9)));
  params_.add("conv2.bias", BasicTensor<T>({2 * w}));
  params_.add("fc.weight", he({2 * w}, static_cast<double>(2 * w)));
  params_.add("fc.bias", BasicTensor<T>({1}));
}

template <typename T>
double Discriminator<T>::forward(const BasicTensor<T>& first, const BasicTensor<T>& second,
                                 Tape* tape) const {
  Tape local;
  Tape& t = tape ? *tape : local;
  t.input = stack_frames(first, second);
  if (t.input.dim(0) != static_cast<std::size_t>(2 * frame_channels_)) {
    throw ConfigError("discriminator expects frames with " + std::to_string(frame_channels_) + " channels");
  }
  t.pre1 = nn::conv2d(t.input, params_.get("conv1.weight"), params_.get("conv1.bias"));
  t.pooled = nn::avg_pool2(nn::relu(t.pre1));
  t.pre2 = nn::conv2d(t.pooled, params_.get("conv2.weight"), params_.get("conv2.bias"));
  t.act2 = nn::relu(t.pre2);

  const std::size_t c = t.act2.dim(0);
  const std::size_t n = t.act2.dim(1) * t.act2.dim(2);
  t.pooled_features.assign(c, 0.0);
  const auto& fc = params_.get("fc.weight");
  double logit = static_cast<double>(params_.get("fc.bias")[0]);
  for (std::size_t k = 0; k < c; ++k) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) sum += static_cast<double>(t.act2[k * n + p]);
    t.pooled_features[k] = sum / static_cast<double>(n);
    logit += static_cast<double>(fc[k]) * t.pooled_features[k];
  }
  t.logit = logit;
  const double raw = 1.0 / (1.0 + std::exp(-logit));
  t.prob = clamp_probability(raw);
  t.clamped = t.prob != raw;
  return t.prob;
}

template <typename T>
typename Discriminator<T>::Grads Discriminator<T>::backward(const Tape& t, double d_prob) const {
  Grads g{params_.zeros_like(), {}, {}};
  const double d_logit = t.clamped ? 0.0 : d_prob * t.prob * (1.0 - t.prob);

  const std::size_t c = t.act2.dim(0);
  const std::size_t n = t.act2.dim(1) * t.act2.dim(2);
  const auto& fc = params_.get("fc.weight");
  BasicTensor<T> d_fc({c});
  BasicTensor<T> d_act2(t.act2.shape());
  for (std::size_t k = 0; k < c; ++k) {
    d_fc[k] = static_cast<T>(d_logit * t.pooled_features[k]);
    const T spread = static_cast<T>(d_logit * static_cast<double>(fc[k]) / static_cast<double>(n));
    for (std::size_t p = 0; p < n; ++p) d_act2[k * n + p] = spread;
  }
  g.params.mutable_value(g.params.index_of("fc.weight")) = std::move(d_fc);
  g.params.mutable_value(g.params.index_of("fc.bias")) = BasicTensor<T>({1}, static_cast<T>(d_logit));

  auto g2 = nn::conv2d_vjp(t.pooled, params_.get("conv2.weight"), nn::relu_vjp(t.pre2, d_act2));
  g.params.mutable_value(g.params.index_of("conv2.weight")) = std::move(g2.weight);
  g.params.mutable_value(g.params.index_of("conv2.bias")) = std::move(g2.bias);
  auto d_pre1 = nn::relu_vjp(t.pre1, nn::avg_pool2_vjp(t.pre1.shape(), g2.input));
  auto g1 = nn::conv2d_vjp(t.input, params_.get("conv1.weight"), d_pre1);
  g.params.mutable_value(g.params.index_of("conv1.weight")) = std::move(g1.weight);
  g.params.mutable_value(g.params.index_of("conv1.bias")) = std::move(g1.bias);
  auto [a, b] = nn::split_channels(g1.input, static_cast<std::size_t>(frame_channels_));
  g.first = std::move(a);
  g.second = std::move(b);
  return g;
}

template <typename T>
ScalarLoss<T> combined_loss(const LossConfig& config, const LossComponents<T>& parts) {
  config.validate();
  if (!parts.l1) throw ConfigError("combined_loss: the L1 component is required");
  if (config.mode == LossMode::distortion) return *parts.l1;

  struct Term {
    double weight;
    const std::optional<ScalarLoss<T>>* part;
    const char* name;
  };
  const Term terms[] = {{config.lambda_1, &parts.l1, "L1"},
                        {config.lambda_vgg, &parts.perceptual, "perceptual"},
                        {config.lambda_adv, &parts.adversarial, "adversarial"}};
  ScalarLoss<T> total{0.0, BasicTensor<T>(parts.l1->grad.shape())};
  for (const auto& term : terms) {
    if (term.weight == 0.0) continue;
    if (!term.part->has_value()) {
      throw ConfigError(std::string("combined_loss: perception mode needs the ") + term.name + " component");
    }
    const auto& p = **term.part;
    require_same_shape(p.grad.shape(), total.grad.shape(), "combined_loss gradient");
    total.value += term.weight * p.value;
    for (std::size_t i = 0; i < total.grad.size(); ++i) {
      total.grad[i] += static_cast<T>(term.weight * static_cast<double>(p.grad[i]));
    }
  }
  return total;
}

#define ADACOF_INSTANTIATE_LOSSES(T)                                                             \
  template ScalarLoss<T> charbonnier_l1(const BasicTensor<T>&, const BasicTensor<T>&, double);   \
  template class GradientFilterBank<T>;                                                          \
  template ScalarLoss<T> perceptual_loss(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                         const FeatureExtractor<T>&);                            \
  template class Discriminator<T>;                                                               \
  template ScalarLoss<T> combined_loss(const LossConfig&, const LossComponents<T>&);

ADACOF_INSTANTIATE_LOSSES(float)
ADACOF_INSTANTIATE_LOSSES(double)

#undef ADACOF_INSTANTIATE_LOSSES

}  // namespace adacof
