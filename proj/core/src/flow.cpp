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

#include "adacof/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "adacof/errors.hpp"
#include "adacof/parallel.hpp"

namespace adacof {
namespace {

template <typename T>
struct TapOffsets {
  const WarpParams<T>& params;
  bool include_grid;
  std::size_t n;

  double dy(std::size_t t, std::size_t p) const {
    double v = static_cast<double>(params.alpha[t * n + p]);
    if (include_grid) v += static_cast<double>(params.grid_offset(static_cast<int>(t) / params.kernel_size));
    return v;
  }
  double dx(std::size_t t, std::size_t p) const {
    double v = static_cast<double>(params.beta[t * n + p]);
    if (include_grid) v += static_cast<double>(params.grid_offset(static_cast<int>(t) % params.kernel_size));
    return v;
  }
};

float percentile(std::vector<float> values, double q) {
  if (values.empty()) return 0.0F;
  const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size()))) - 1;
  const auto idx = std::min(values.size() - 1, k);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

}  // namespace

template <typename T>
FlowMap<T> mean_flow(const WarpParams<T>& params, bool include_grid) {
  params.validate();
  const std::size_t h = params.height();
  const std::size_t w = params.width();
  const std::size_t n = h * w;
  const TapOffsets<T> off{params, include_grid, n};
  FlowMap<T> out{BasicTensor<T>({2, h, w})};
  parallel_for_range(0, n, 1024, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      double my = 0.0;
      double mx = 0.0;
      for (std::size_t t = 0; t < params.taps(); ++t) {
        const double wt = static_cast<double>(params.weights[t * n + p]);
        my += wt * off.dy(t, p);
        mx += wt * off.dx(t, p);
      }
      out.vectors[p] = static_cast<T>(my);
      out.vectors[n + p] = static_cast<T>(mx);
    }
  });
  return out;
}

template <typename T>
VarianceFlow<T> variance_flow(const WarpParams<T>& params, bool include_grid) {
  params.validate();
  const std::size_t h = params.height();
  const std::size_t w = params.width();
  const std::size_t n = h * w;
  const TapOffsets<T> off{params, include_grid, n};
  VarianceFlow<T> out{FlowMap<T>{BasicTensor<T>({2, h, w})}, BasicTensor<T>({1, h, w})};
  parallel_for_range(0, n, 1024, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      // The mean is recomputed in double rather than read back rounded.
      double my = 0.0;
      double mx = 0.0;
      for (std::size_t t = 0; t < params.taps(); ++t) {
        const double wt = static_cast<double>(params.weights[t * n + p]);
        my += wt * off.dy(t, p);
        mx += wt * off.dx(t, p);
      }
      double vy = 0.0;
      double vx = 0.0;
      for (std::size_t t = 0; t < params.taps(); ++t) {
        const double wt = static_cast<double>(params.weights[t * n + p]);
        const double ey = my - off.dy(t, p);
        const double ex = mx - off.dx(t, p);
        vy += wt * ey * ey;
        vx += wt * ex * ex;
      }
      out.components.vectors[p] = static_cast<T>(vy);
      out.components.vectors[n + p] = static_cast<T>(vx);
      out.trace[p] = static_cast<T>(vy + vx);
    }
  });
  return out;
}

template FlowMap<float> mean_flow(const WarpParams<float>&, bool);
template FlowMap<double> mean_flow(const WarpParams<double>&, bool);
template VarianceFlow<float> variance_flow(const WarpParams<float>&, bool);
template VarianceFlow<double> variance_flow(const WarpParams<double>&, bool);

Frame render_flow(const FlowMap<float>& flow) {
  if (!flow.vectors.all_finite()) throw ConfigError("render_flow: non-finite flow");
  const std::size_t h = flow.height();
  const std::size_t w = flow.width();
  std::vector<float> magnitude(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) magnitude[y * w + x] = std::hypot(flow.dy(y, x), flow.dx(y, x));
  }
  const float scale = percentile(magnitude, 0.99);

  Tensor rgb({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const float mag = magnitude[y * w + x];
      const float sat = scale > 0.0F ? std::min(1.0F, mag / scale) : 0.0F;
      // Hue in [0, 6) sextants, measured from +x toward +y.
      float angle = std::atan2(flow.dy(y, x), flow.dx(y, x));
      if (angle < 0.0F) angle += 2.0F * std::numbers::pi_v<float>;
      const float hue = angle / (2.0F * std::numbers::pi_v<float>) * 6.0F;
      const int sector = static_cast<int>(hue) % 6;
      const float frac = hue - std::floor(hue);
      float r = 0.0F, g = 0.0F, b = 0.0F;
      switch (sector) {
        case 0: r = 1; g = frac; b = 0; break;
        case 1: r = 1 - frac; g = 1; b = 0; break;
        case 2: r = 0; g = 1; b = frac; break;
        case 3: r = 0; g = 1 - frac; b = 1; break;
        case 4: r = frac; g = 0; b = 1; break;
        default: r = 1; g = 0; b = 1 - frac; break;
      }
      // Desaturate toward white.
      rgb.at(0, y, x) = 1.0F - sat * (1.0F - r);
      rgb.at(1, y, x) = 1.0F - sat * (1.0F - g);
      rgb.at(2, y, x) = 1.0F - sat * (1.0F - b);
    }
  }
  return to_frame(rgb);
}

Frame render_occlusion(const OcclusionMap<float>& v) {
  v.validate();
  const std::size_t h = v.height();
  const std::size_t w = v.width();
  Tensor rgb({3, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const float s = v.values.at(0, y, x);
      if (s >= 0.5F) {
        rgb.at(0, y, x) = 2.0F * s - 1.0F;
        rgb.at(1, y, x) = 2.0F - 2.0F * s;
      } else {
        rgb.at(1, y, x) = 2.0F * s;
        rgb.at(2, y, x) = 1.0F - 2.0F * s;
      }
    }
  }
  return to_frame(rgb);
}

Frame render_magnitude(const Tensor& map) {
  if (map.rank() != 3 || map.dim(0) != 1) throw ConfigError("render_magnitude expects 1×H×W");
  std::vector<float> values(map.values().begin(), map.values().end());
  const float scale = percentile(values, 0.99);
  Tensor rgb({3, map.dim(1), map.dim(2)});
  const std::size_t n = map.dim(1) * map.dim(2);
  for (std::size_t p = 0; p < n; ++p) {
    const float g = scale > 0.0F ? std::clamp(map[p] / scale, 0.0F, 1.0F) : 0.0F;
    for (std::size_t c = 0; c < 3; ++c) rgb[c * n + p] = g;
  }
  return to_frame(rgb);
}

}  // namespace adacof
