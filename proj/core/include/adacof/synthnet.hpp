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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adacof/tensor.hpp"
#include "adacof/warp.hpp"

namespace adacof {

// Scaled-down U-Net: one 3×3 conv + ReLU per level, average-pool downsampling,
// bilinear upsampling with skip concatenation, then seven heads (weights,
// alpha, beta for each direction plus occlusion), each 3×3 conv + ReLU +
// 3×3 conv. Weight heads end in a softmax over taps, the occlusion head in a
// sigmoid, the offset heads are unconstrained.
struct ModelConfig {
  int kernel_size = 5;  // F
  int dilation = 1;     // d
  int depth = 3;        // number of 2× poolings
  std::vector<int> widths{16, 32, 64};
  int head_width = 16;
  int frame_channels = 3;
  WarpMode warp_mode = WarpMode::adacof;
  bool use_occlusion = true;
  std::uint64_t seed = 0;

  // Kernel size actually used by the heads (1 in flow_only mode).
  int effective_kernel_size() const { return warp_mode == WarpMode::flow_only ? 1 : kernel_size; }
  std::size_t size_multiple() const { return std::size_t{1} << depth; }
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Head : std::size_t {
  weights_fwd, alpha_fwd, beta_fwd, weights_bwd, alpha_bwd, beta_bwd, occlusion,
};
inline constexpr std::size_t kHeadCount = 7;
std::string_view head_name(Head head);
std::size_t head_channels(const ModelConfig& config, Head head);

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> value;
};

// Ordered named tensors. Every copy gets a fresh identity and each mutable
// access bumps the revision, which is how stale tapes are detected.
template <typename T>
class ParameterSet {
 public:
  ParameterSet();
  ParameterSet(const ParameterSet& other);
  ParameterSet(ParameterSet&& other) noexcept;
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet& operator=(ParameterSet&& other) noexcept;

  void add(std::string name, BasicTensor<T> value);
  std::size_t size() const { return entries_.size(); }
  std::size_t element_count() const;
  const NamedTensor<T>& operator[](std::size_t i) const { return entries_[i]; }
  BasicTensor<T>& mutable_value(std::size_t i);
  const BasicTensor<T>& get(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  // Zero-valued tensors with the same names and shapes.
  ParameterSet zeros_like() const;
  // Elementwise sum; names and shapes must agree.
  void accumulate(const ParameterSet& other);
  void scale(T factor);
  bool congruent_with(const ParameterSet& other) const;

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& e : entries_) out.add(e.name, e.value.template cast<U>());
    return out;
  }

  std::uint64_t id() const { return id_; }
  std::uint64_t revision() const { return revision_; }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      if (a.entries_[i].name != b.entries_[i].name || !(a.entries_[i].value == b.entries_[i].value)) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<NamedTensor<T>> entries_;
  std::uint64_t id_;
  std::uint64_t revision_ = 0;
};

// He-normal conv kernels (fan-in), zero biases, zero final head layers so an
// untrained model emits uniform weights, zero offsets and V = 0.5.
template <typename T>
ParameterSet<T> init_parameters(const ModelConfig& config);

template <typename T>
struct ModelOutput {
  RawHeads<T> raw_fwd;
  RawHeads<T> raw_bwd;
  WarpParams<T> fwd;  // applied to the first frame
  WarpParams<T> bwd;  // applied to the second frame
  OcclusionMap<T> occlusion;
};

// Activations recorded by model_forward for model_backward.
template <typename T>
struct Tape {
  std::uint64_t params_id = 0;
  std::uint64_t params_revision = 0;
  ModelConfig config;
  Shape input_shape;

  std::vector<BasicTensor<T>> enc_in, enc_pre, skips;
  BasicTensor<T> bottleneck_in, bottleneck_pre;
  std::vector<Shape> dec_up_shape;        // shape before upsampling, per decoder level
  std::vector<BasicTensor<T>> dec_in, dec_pre;  // concat input and pre-activation
  BasicTensor<T> features;
  std::array<BasicTensor<T>, kHeadCount> head_pre, head_hidden, head_out;
  ModelOutput<T> output;
  bool valid = false;
};

// Stacks two C×H×W frames into a 2C×H×W network input.
template <typename T>
BasicTensor<T> stack_frames(const BasicTensor<T>& first, const BasicTensor<T>& second);

template <typename T>
ModelOutput<T> model_forward(const ParameterSet<T>& params, const ModelConfig& config,
                             const BasicTensor<T>& frames, Tape<T>* tape = nullptr);

// Upstream gradients on the three outputs. Only weights/alpha/beta of the
// WarpGrads are read.
template <typename T>
struct OutputGrads {
  WarpGrads<T> fwd;
  WarpGrads<T> bwd;
  BasicTensor<T> occlusion;  // 1×H×W
};

template <typename T>
ParameterSet<T> model_backward(const Tape<T>& tape, const ParameterSet<T>& params,
                               const OutputGrads<T>& upstream);

// Full frame synthesis: forward warps of both frames blended by V (or
// averaged when the config disables occlusion). Non-finite network outputs
// raise NumericError.
template <typename T>
struct Synthesis {
  ModelOutput<T> params;
  BasicTensor<T> warped_first;
  BasicTensor<T> warped_second;
  BasicTensor<T> output;
};

template <typename T>
struct SynthesisTape {
  Tape<T> model;
  BasicTensor<T> first;
  BasicTensor<T> second;
  Synthesis<T> result;
};

template <typename T>
Synthesis<T> synthesize(const ParameterSet<T>& params, const ModelConfig& config,
                        const BasicTensor<T>& first, const BasicTensor<T>& second,
                        SynthesisTape<T>* tape = nullptr);

// Gradients of all network parameters given d(loss)/d(output frame).
template <typename T>
ParameterSet<T> synthesize_backward(const SynthesisTape<T>& tape, const ParameterSet<T>& params,
                                    const BasicTensor<T>& grad_output);

// Sums per-sample gradients of a batch in sample order. `grad_outputs[i]`
// is d(loss)/d(output) for sample i.
template <typename T>
ParameterSet<T> batch_backward(std::span<const SynthesisTape<T>> tapes,
                               const ParameterSet<T>& params,
                               std::span<const BasicTensor<T>> grad_outputs);

}  // namespace adacof
