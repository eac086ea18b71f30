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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "adacof/errors.hpp"
#include "adacof/tensor.hpp"

namespace adacof {

// Bilinear sampling with a replicate (clamp) boundary: coordinates are clamped
// to [0, H-1]×[0, W-1] before the corner lookup. Coordinate derivatives are
// taken from the cell [floor(y), floor(y)+1) and vanish in the clamped region.

template <typename T>
struct CornerTap {
  std::size_t index = 0;  // y * width + x within the plane
  T weight{};
};

// Everything needed to sample one (y, x) location in any plane of a given
// size: the four corner indices, their interpolation weights, and the
// derivative of those weights with respect to y and x.
template <typename T>
struct BilinearStencil {
  std::array<std::size_t, 4> index{};
  std::array<T, 4> weight{};
  std::array<T, 4> d_dy{};
  std::array<T, 4> d_dx{};

  T sample(const T* plane) const {
    return weight[0] * plane[index[0]] + weight[1] * plane[index[1]] +
           weight[2] * plane[index[2]] + weight[3] * plane[index[3]];
  }
  T derivative_y(const T* plane) const {
    return d_dy[0] * plane[index[0]] + d_dy[1] * plane[index[1]] + d_dy[2] * plane[index[2]] +
           d_dy[3] * plane[index[3]];
  }
  T derivative_x(const T* plane) const {
    return d_dx[0] * plane[index[0]] + d_dx[1] * plane[index[1]] + d_dx[2] * plane[index[2]] +
           d_dx[3] * plane[index[3]];
  }
};

template <typename T>
BilinearStencil<T> make_stencil(std::size_t height, std::size_t width, T y, T x) {
  if (!std::isfinite(y) || !std::isfinite(x)) {
    throw InvalidOffsetError("non-finite sampling coordinate");
  }
  const T y_max = static_cast<T>(height - 1);
  const T x_max = static_cast<T>(width - 1);
  const T yc = std::clamp(y, T{0}, y_max);
  const T xc = std::clamp(x, T{0}, x_max);
  const auto y0 = static_cast<std::size_t>(std::floor(yc));
  const auto x0 = static_cast<std::size_t>(std::floor(xc));
  const std::size_t y1 = std::min(y0 + 1, height - 1);
  const std::size_t x1 = std::min(x0 + 1, width - 1);
  const T fy = yc - static_cast<T>(y0);
  const T fx = xc - static_cast<T>(x0);
  const T ay = (y >= T{0} && y < y_max) ? T{1} : T{0};
  const T ax = (x >= T{0} && x < x_max) ? T{1} : T{0};

  BilinearStencil<T> s;
  s.index = {y0 * width + x0, y0 * width + x1, y1 * width + x0, y1 * width + x1};
  s.weight = {(1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
  s.d_dy = {-ay * (1 - fx), -ay * fx, ay * (1 - fx), ay * fx};
  s.d_dx = {-ax * (1 - fy), ax * (1 - fy), -ax * fy, ax * fy};
  return s;
}

template <typename T>
T bilinear_sample(PlaneView<T> image, T y, T x) {
  if (image.empty()) throw ConfigError("bilinear_sample on an empty image");
  return make_stencil(image.height, image.width, y, x).sample(image.values.data());
}

template <typename T>
struct SampleGrad {
  T grad_y{};
  T grad_x{};
  // d(sample)/d(corner pixel) scaled by upstream; the weights sum to upstream.
  std::array<CornerTap<T>, 4> corners{};
};

template <typename T>
SampleGrad<T> bilinear_sample_grad(PlaneView<T> image, T y, T x, T upstream) {
  if (image.empty()) throw ConfigError("bilinear_sample_grad on an empty image");
  const auto s = make_stencil(image.height, image.width, y, x);
  const T* p = image.values.data();
  SampleGrad<T> g;
  g.grad_y = upstream * s.derivative_y(p);
  g.grad_x = upstream * s.derivative_x(p);
  for (std::size_t k = 0; k < 4; ++k) g.corners[k] = {s.index[k], upstream * s.weight[k]};
  return g;
}

}  // namespace adacof
