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

// Reference implementations written independently of the library kernels:
// plain loops, double precision, no shared helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "adacof/flow.hpp"
#include "adacof/tensor.hpp"
#include "adacof/warp.hpp"

namespace oracle {

using adacof::Tensor;
using adacof::TensorD;

// Four-corner bilinear read with coordinates clamped to the image.
template <typename T>
double bilinear4(const adacof::BasicTensor<T>& img, std::size_t c, double y, double x) {
  const double h = static_cast<double>(img.dim(1));
  const double w = static_cast<double>(img.dim(2));
  y = std::min(std::max(y, 0.0), h - 1);
  x = std::min(std::max(x, 0.0), w - 1);
  const double fy0 = std::floor(y);
  const double fx0 = std::floor(x);
  const auto y0 = static_cast<std::size_t>(fy0);
  const auto x0 = static_cast<std::size_t>(fx0);
  const std::size_t y1 = std::min(y0 + 1, img.dim(1) - 1);
  const std::size_t x1 = std::min(x0 + 1, img.dim(2) - 1);
  const double ty = y - fy0;
  const double tx = x - fx0;
  const double a = static_cast<double>(img.at(c, y0, x0));
  const double b = static_cast<double>(img.at(c, y0, x1));
  const double cc = static_cast<double>(img.at(c, y1, x0));
  const double d = static_cast<double>(img.at(c, y1, x1));
  return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * cc + tx * d);
}

// out(i,j) = sum_k sum_l W_kl(i,j) I(i + d(k - (F-1)/2) + a_kl, j + d(l - (F-1)/2) + b_kl)
template <typename T>
TensorD literal_warp(const adacof::BasicTensor<T>& input, const adacof::WarpParams<T>& p) {
  const std::size_t ch = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int f = p.kernel_size;
  const double half = (f - 1) / 2.0;
  TensorD out({ch, h, w});
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        double s = 0.0;
        for (int k = 0; k < f; ++k) {
          for (int l = 0; l < f; ++l) {
            const std::size_t t = static_cast<std::size_t>(k * f + l);
            const double y = static_cast<double>(i) + p.dilation * (k - half) + p.alpha.at(t, i, j);
            const double x = static_cast<double>(j) + p.dilation * (l - half) + p.beta.at(t, i, j);
            s += static_cast<double>(p.weights.at(t, i, j)) * bilinear4(input, c, y, x);
          }
        }
        out.at(c, i, j) = s;
      }
    }
  }
  return out;
}

// Adaptive convolution on the dilated grid (odd F): integer taps, clamped
// indices, no interpolation.
inline TensorD adaptive_conv(const TensorD& input, const TensorD& kernels, int f, int d) {
  const std::size_t ch = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int r = (f - 1) / 2;
  TensorD out({ch, h, w});
  auto clampi = [](long v, std::size_t n) {
    return static_cast<std::size_t>(std::min<long>(std::max<long>(v, 0), static_cast<long>(n) - 1));
  };
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double s = 0.0;
        for (int k = 0; k < f; ++k)
          for (int l = 0; l < f; ++l) {
            const std::size_t yy = clampi(static_cast<long>(i) + d * (k - r), h);
            const std::size_t xx = clampi(static_cast<long>(j) + d * (l - r), w);
            s += kernels.at(static_cast<std::size_t>(k * f + l), i, j) * input.at(c, yy, xx);
          }
        out.at(c, i, j) = s;
      }
  return out;
}

// Backward warp by one flow vector per pixel.
inline TensorD single_flow_warp(const TensorD& input, const TensorD& fy, const TensorD& fx) {
  const std::size_t ch = input.dim(0), h = input.dim(1), w = input.dim(2);
  TensorD out({ch, h, w});
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        out.at(c, i, j) = bilinear4(input, c, static_cast<double>(i) + fy.at(0, i, j),
                                    static_cast<double>(j) + fx.at(0, i, j));
      }
  return out;
}

// Shift each pixel's sampling window by its flow, then apply the rigid
// F×F kernel there.
inline TensorD shift_then_kernel(const TensorD& input, const TensorD& fy, const TensorD& fx,
                                 const TensorD& kernels, int f, int d) {
  const std::size_t ch = input.dim(0), h = input.dim(1), w = input.dim(2);
  const double half = (f - 1) / 2.0;
  TensorD out({ch, h, w});
  for (std::size_t c = 0; c < ch; ++c)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const double cy = static_cast<double>(i) + fy.at(0, i, j);
        const double cx = static_cast<double>(j) + fx.at(0, i, j);
        double s = 0.0;
        for (int k = 0; k < f; ++k)
          for (int l = 0; l < f; ++l) {
            s += kernels.at(static_cast<std::size_t>(k * f + l), i, j) *
                 bilinear4(input, c, cy + d * (k - half), cx + d * (l - half));
          }
        out.at(c, i, j) = s;
      }
  return out;
}

// Weighted first and second moments of the per-tap offsets, by loops.
struct FlowStats {
  TensorD mean;  // 2×H×W
  TensorD var;   // 2×H×W
};

template <typename T>
FlowStats flow_stats(const adacof::WarpParams<T>& p, bool include_grid) {
  const std::size_t h = p.height(), w = p.width();
  const int f = p.kernel_size;
  const double half = (f - 1) / 2.0;
  FlowStats s{TensorD({2, h, w}), TensorD({2, h, w})};
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      double my = 0, mx = 0;
      for (int k = 0; k < f; ++k)
        for (int l = 0; l < f; ++l) {
          const std::size_t t = static_cast<std::size_t>(k * f + l);
          const double wt = p.weights.at(t, i, j);
          const double dy = p.alpha.at(t, i, j) + (include_grid ? p.dilation * (k - half) : 0.0);
          const double dx = p.beta.at(t, i, j) + (include_grid ? p.dilation * (l - half) : 0.0);
          my += wt * dy;
          mx += wt * dx;
        }
      double vy = 0, vx = 0;
      for (int k = 0; k < f; ++k)
        for (int l = 0; l < f; ++l) {
          const std::size_t t = static_cast<std::size_t>(k * f + l);
          const double wt = p.weights.at(t, i, j);
          const double dy = p.alpha.at(t, i, j) + (include_grid ? p.dilation * (k - half) : 0.0);
          const double dx = p.beta.at(t, i, j) + (include_grid ? p.dilation * (l - half) : 0.0);
          vy += wt * (my - dy) * (my - dy);
          vx += wt * (mx - dx) * (mx - dx);
        }
      s.mean.at(0, i, j) = my;
      s.mean.at(1, i, j) = mx;
      s.var.at(0, i, j) = vy;
      s.var.at(1, i, j) = vx;
    }
  return s;
}

// Occlusion by render-and-diff: warp both outer frames to the middle with
// the truth flow and call a pixel hidden in whichever frame disagrees with
// the middle render. Returns 1 / 0 / 0.5 per the occlusion-map convention.
inline TensorD render_and_diff(const Tensor& first, const Tensor& middle, const Tensor& last,
                               const TensorD& flow, double threshold = 1e-3) {
  const std::size_t ch = first.dim(0), h = first.dim(1), w = first.dim(2);
  TensorD v({1, h, w}, 0.5);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j) {
      const double fy = flow.at(0, i, j), fx = flow.at(1, i, j);
      double e1 = 0, e2 = 0;
      for (std::size_t c = 0; c < ch; ++c) {
        const double m = middle.at(c, i, j);
        e1 = std::max(e1, std::abs(bilinear4(first, c, i - fy, j - fx) - m));
        e2 = std::max(e2, std::abs(bilinear4(last, c, i + fy, j + fx) - m));
      }
      const bool bad1 = e1 > threshold, bad2 = e2 > threshold;
      if (bad1 && !bad2) v.at(0, i, j) = 0.0;
      if (bad2 && !bad1) v.at(0, i, j) = 1.0;
    }
  return v;
}

// Random helpers shared by the tests.
template <typename T>
adacof::BasicTensor<T> uniform(adacof::Shape shape, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  adacof::BasicTensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
adacof::BasicTensor<T> simplex_weights(std::size_t taps, std::size_t h, std::size_t w,
                                       std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.01, 1.0);
  adacof::BasicTensor<T> t({taps, h, w});
  for (std::size_t p = 0; p < h * w; ++p) {
    std::vector<double> v(taps);
    double s = 0;
    for (auto& e : v) s += (e = dist(rng));
    for (std::size_t k = 0; k < taps; ++k) t[k * h * w + p] = static_cast<T>(v[k] / s);
  }
  return t;
}

template <typename T>
adacof::WarpParams<T> random_params(int f, int d, std::size_t h, std::size_t w, std::mt19937_64& rng,
                                    double max_offset = 3.0) {
  adacof::WarpParams<T> p;
  p.kernel_size = f;
  p.dilation = d;
  p.weights = simplex_weights<T>(p.taps(), h, w, rng);
  p.alpha = uniform<T>({p.taps(), h, w}, rng, -max_offset, max_offset);
  p.beta = uniform<T>({p.taps(), h, w}, rng, -max_offset, max_offset);
  return p;
}

}  // namespace oracle
