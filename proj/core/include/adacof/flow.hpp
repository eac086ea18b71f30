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

#include "adacof/tensor.hpp"
#include "adacof/warp.hpp"

namespace adacof {

// 2×H×W displacement field: plane 0 vertical, plane 1 horizontal (pixels).
template <typename T>
struct FlowMap {
  BasicTensor<T> vectors;

  std::size_t height() const { return vectors.dim(1); }
  std::size_t width() const { return vectors.dim(2); }
  T dy(std::size_t y, std::size_t x) const { return vectors.at(0, y, x); }
  T dx(std::size_t y, std::size_t x) const { return vectors.at(1, y, x); }
};

// Weighted mean of the per-tap offsets (alpha, beta). With `include_grid`
// each tap's centered base-grid position is added first, which gives the
// total displacement rather than the learned part alone.
template <typename T>
FlowMap<T> mean_flow(const WarpParams<T>& params, bool include_grid = false);

template <typename T>
struct VarianceFlow {
  FlowMap<T> components;  // weighted variance per axis, >= 0
  BasicTensor<T> trace;   // 1×H×W, sum of the two components
};

template <typename T>
VarianceFlow<T> variance_flow(const WarpParams<T>& params, bool include_grid = false);

// Color-wheel rendering: hue follows direction, saturation grows with
// magnitude normalized by the 99th-percentile magnitude, value is 1. Zero
// flow is white.
Frame render_flow(const FlowMap<float>& flow);

// Red for V = 1 (only the first frame sees the pixel), green for 0.5, blue
// for V = 0, linear in between.
Frame render_occlusion(const OcclusionMap<float>& v);

// Grayscale ramp of a nonnegative 1×H×W map normalized by its 99th
// percentile, emitted as three channels.
Frame render_magnitude(const Tensor& map);

}  // namespace adacof
