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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "adacof/synthnet.hpp"
#include "adacof/tensor.hpp"

namespace adacof {

enum class LossMode { distortion, perception };
std::string_view to_string(LossMode mode);
std::optional<LossMode> parse_loss_mode(std::string_view name);

struct LossConfig {
  double epsilon = 1e-3;  // Charbonnier
  double lambda_1 = 0.01;
  double lambda_vgg = 1.0;
  double lambda_adv = 0.005;
  LossMode mode = LossMode::distortion;
  // Replace the literal sum c*ln(c) adversarial term with negative binary
  // entropy, sum c*ln(c) + (1-c)*ln(1-c), whose minimum is at c = 0.5.
  bool binary_entropy = false;

  void validate() const;
};

// A scalar loss and its gradient with respect to the synthesized frame.
template <typename T>
struct ScalarLoss {
  double value = 0.0;
  BasicTensor<T> grad;
};

// Mean over all elements of sqrt((a-b)^2 + eps^2); gradient w.r.t. a.
template <typename T>
ScalarLoss<T> charbonnier_l1(const BasicTensor<T>& a, const BasicTensor<T>& b, double epsilon);

// Differentiable frame -> feature map.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual BasicTensor<T> extract(const BasicTensor<T>& frame) const = 0;
  virtual BasicTensor<T> extract_vjp(const BasicTensor<T>& frame, const BasicTensor<T>& upstream) const = 0;
};

template <typename T>
class IdentityExtractor final : public FeatureExtractor<T> {
 public:
  BasicTensor<T> extract(const BasicTensor<T>& frame) const override { return frame; }
  BasicTensor<T> extract_vjp(const BasicTensor<T>&, const BasicTensor<T>& upstream) const override {
    return upstream;
  }
};

// Fixed bank of eight oriented 3×3 derivative filters applied to the
// channel mean, followed by ReLU and 2×2 average pooling. Output is 8×H/2×W/2.
template <typename T>
class GradientFilterBank final : public FeatureExtractor<T> {
 public:
  explicit GradientFilterBank(std::size_t frame_channels = 3);
  BasicTensor<T> extract(const BasicTensor<T>& frame) const override;
  BasicTensor<T> extract_vjp(const BasicTensor<T>& frame, const BasicTensor<T>& upstream) const override;

 private:
  BasicTensor<T> weight_;  // 8×C×3×3
  BasicTensor<T> bias_;
};

// RMS feature distance sqrt(mean((F(out) - F(gt))^2)); gradient w.r.t. out
// (zero when the features coincide).
template <typename T>
ScalarLoss<T> perceptual_loss(const BasicTensor<T>& out, const BasicTensor<T>& gt,
                              const FeatureExtractor<T>& extractor);

inline constexpr double kProbabilityClamp = 1e-6;
double clamp_probability(double p);

// Loss value and its partial derivatives with respect to the two
// discriminator outputs.
struct AdversarialTerm {
  double value = 0.0;
  double d_first = 0.0;   // d/d C([I_n, I_out])
  double d_second = 0.0;  // d/d C([I_out, I_n+1])
};

// -log(c1) - log(1 - c2); c1 scores [I_n, I_out], c2 scores [I_out, I_n+1].
AdversarialTerm discriminator_loss(double c_real_first, double c_fake_first);

// c1*ln(c1) + c2*ln(c2), or the binary-entropy variant.
AdversarialTerm generator_entropy_loss(double c1, double c2, bool binary_entropy = false);

// Tiny temporal-pair classifier: conv3×3 + ReLU, 2×2 average pool,
// conv3×3 + ReLU, global average, linear, sigmoid, clamp to (δ, 1-δ).
// Input is the channel concatenation of two frames.
template <typename T>
class Discriminator {
 public:
  Discriminator(int frame_channels, std::uint64_t seed, int width = 8);

  struct Tape {
    BasicTensor<T> input, pre1, pooled, pre2, act2;
    std::vector<double> pooled_features;
    double logit = 0.0;
    double prob = 0.0;
    bool clamped = false;
  };

  double forward(const BasicTensor<T>& first, const BasicTensor<T>& second, Tape* tape = nullptr) const;

  struct Grads {
    ParameterSet<T> params;
    BasicTensor<T> first;
    BasicTensor<T> second;
  };
  Grads backward(const Tape& tape, double d_prob) const;

  const ParameterSet<T>& params() const { return params_; }
  ParameterSet<T>& params() { return params_; }
  int frame_channels() const { return frame_channels_; }

 private:
  int frame_channels_;
  ParameterSet<T> params_;
};

// Combined objective. Each present component carries its own gradient.
template <typename T>
struct LossComponents {
  std::optional<ScalarLoss<T>> l1;
  std::optional<ScalarLoss<T>> perceptual;
  std::optional<ScalarLoss<T>> adversarial;
};

// distortion: L1 alone. perception: lambda_1*L1 + lambda_vgg*Lvgg + lambda_adv*Ladv.
// A component with a nonzero weight must be present (ConfigError otherwise).
template <typename T>
ScalarLoss<T> combined_loss(const LossConfig& config, const LossComponents<T>& parts);

}  // namespace adacof
