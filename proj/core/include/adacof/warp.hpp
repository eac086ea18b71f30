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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "adacof/tensor.hpp"

namespace adacof {

// Per-pixel parameters of one adaptive warp. Tap t = k * F + l, where k walks
// the vertical axis of the F×F base grid and l the horizontal one. Output
// pixel (i, j) samples the input at
//   (i + d*(k - (F-1)/2) + alpha[t](i,j),  j + d*(l - (F-1)/2) + beta[t](i,j))
// and combines the F² samples with weights[t](i,j).
template <typename T>
struct WarpParams {
  BasicTensor<T> weights;  // F²×H×W, nonnegative, sum to 1 over taps
  BasicTensor<T> alpha;    // F²×H×W vertical offsets in pixels
  BasicTensor<T> beta;     // F²×H×W horizontal offsets in pixels
  int kernel_size = 1;
  int dilation = 0;

  std::size_t taps() const { return static_cast<std::size_t>(kernel_size) * kernel_size; }
  std::size_t height() const { return weights.dim(1); }
  std::size_t width() const { return weights.dim(2); }

  // Position of grid row/column k relative to the output pixel.
  T grid_offset(int k) const {
    return static_cast<T>(dilation) * (static_cast<T>(k) - static_cast<T>(kernel_size - 1) / 2);
  }

  // Shape, finiteness and the convex-weight invariant. Throws ConfigError.
  void validate() const;

  // F = 1 warp that copies the input.
  static WarpParams identity(std::size_t height, std::size_t width);
  // F = 1 warp sampling every pixel at (i + dy, j + dx).
  static WarpParams translation(std::size_t height, std::size_t width, T dy, T dx);
};

// Blend weights between the forward and backward warps, one plane (1×H×W).
// V = 1 keeps only the warp of the first frame, V = 0 only the second.
template <typename T>
struct OcclusionMap {
  BasicTensor<T> values;

  std::size_t height() const { return values.dim(1); }
  std::size_t width() const { return values.dim(2); }
  void validate() const;
  static OcclusionMap filled(std::size_t height, std::size_t width, T value);
};

// Lower-DoF operator families, all evaluated through forward_warp.
enum class WarpMode {
  adacof,         // full per-pixel weights and offsets
  flow_only,      // F = 1: one flow vector per pixel
  kernel_only,    // offsets forced to zero: adaptive convolution on the base grid
  shared_weight,  // one weight vector shared by every pixel
  sdc,            // one flow vector per pixel plus an adaptive rigid F×F kernel at its target
};

std::string_view to_string(WarpMode mode);
// Accepts the long names above and the short ablation tags fb, kb, ws, sdc.
std::optional<WarpMode> parse_warp_mode(std::string_view name);

template <typename T>
BasicTensor<T> forward_warp(const BasicTensor<T>& input, const WarpParams<T>& params);
Frame forward_warp(const Frame& input, const WarpParams<float>& params);

template <typename T>
struct WarpGrads {
  BasicTensor<T> input;  // empty unless requested
  BasicTensor<T> weights;
  BasicTensor<T> alpha;
  BasicTensor<T> beta;
};

// Vector-Jacobian product of forward_warp. `upstream` has the output's shape.
template <typename T>
WarpGrads<T> backward_warp_vjp(const BasicTensor<T>& input, const WarpParams<T>& params,
                               const BasicTensor<T>& upstream, bool need_input_grad = true);

// V⊙fwd + (1-V)⊙bwd, or the plain average when `enabled` is false.
template <typename T>
BasicTensor<T> occlusion_blend(const BasicTensor<T>& fwd, const BasicTensor<T>& bwd,
                               const OcclusionMap<T>& v, bool enabled = true);
Frame occlusion_blend(const Frame& fwd, const Frame& bwd, const OcclusionMap<float>& v,
                      bool enabled = true);

template <typename T>
struct BlendGrads {
  BasicTensor<T> fwd;
  BasicTensor<T> bwd;
  BasicTensor<T> v;  // 1×H×W, summed over channels
};

template <typename T>
BlendGrads<T> occlusion_blend_vjp(const BasicTensor<T>& fwd, const BasicTensor<T>& bwd,
                                  const OcclusionMap<T>& v, const BasicTensor<T>& upstream,
                                  bool enabled = true);

// Unconstrained head outputs before the mode's structural constraint.
// weights is F²×H×W (already softmax-normalized). alpha/beta are F²×H×W, or
// 1×H×W in sdc mode where they carry the single flow vector.
template <typename T>
struct RawHeads {
  BasicTensor<T> weights;
  BasicTensor<T> alpha;
  BasicTensor<T> beta;
  int kernel_size = 1;
  int dilation = 0;
};

// Number of offset channels a head must emit for the mode.
std::size_t offset_channels(WarpMode mode, int kernel_size);

template <typename T>
WarpParams<T> make_mode_params(WarpMode mode, const RawHeads<T>& raw);

// Pulls gradients on the emitted WarpParams back onto the raw heads.
template <typename T>
RawHeads<T> make_mode_params_vjp(WarpMode mode, const RawHeads<T>& raw,
                                 const WarpGrads<T>& grads);

}  // namespace adacof
