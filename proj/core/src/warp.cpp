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

#include "adacof/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "adacof/errors.hpp"
#include "adacof/parallel.hpp"
#include "adacof/sampler.hpp"

namespace adacof {
namespace {

constexpr std::size_t kScatterChunks = 8;

template <typename T>
double weight_sum_tolerance(std::size_t taps) {
  return std::max(1e-6, static_cast<double>(taps) * std::numeric_limits<T>::epsilon());
}

template <typename T>
void check_input(const BasicTensor<T>& input, const WarpParams<T>& params, const char* what) {
  if (input.rank() != 3 || input.empty()) {
    throw ConfigError(std::string(what) + ": input must be a non-empty C×H×W tensor");
  }
  params.validate();
  if (input.dim(1) != params.height() || input.dim(2) != params.width()) {
    throw ConfigError(std::string(what) + ": params are " + std::to_string(params.height()) +
                      "x" + std::to_string(params.width()) + " but input is " +
                      shape_to_string(input.shape()));
  }
}

// Rows are a natural grain: every kernel below gathers per output pixel.
std::size_t row_grain(std::size_t width, std::size_t taps) {
  const std::size_t work_per_row = std::max<std::size_t>(1, width * taps);
  return std::max<std::size_t>(1, 4096 / work_per_row);
}

}  // namespace

std::string_view to_string(WarpMode mode) {
  switch (mode) {
    case WarpMode::adacof: return "adacof";
    case WarpMode::flow_only: return "flow_only";
    case WarpMode::kernel_only: return "kernel_only";
    case WarpMode::shared_weight: return "shared_weight";
    case WarpMode::sdc: return "sdc";
  }
  return "unknown";
}

std::optional<WarpMode> parse_warp_mode(std::string_view name) {
  if (name == "adacof") return WarpMode::adacof;
  if (name == "flow_only" || name == "fb") return WarpMode::flow_only;
  if (name == "kernel_only" || name == "kb") return WarpMode::kernel_only;
  if (name == "shared_weight" || name == "ws") return WarpMode::shared_weight;
  if (name == "sdc") return WarpMode::sdc;
  return std::nullopt;
}

template <typename T>
void WarpParams<T>::validate() const {
  if (kernel_size < 1) throw ConfigError("kernel size must be >= 1");
  if (dilation < 0) throw ConfigError("dilation must be >= 0");
  if (weights.rank() != 3 || weights.dim(0) != taps()) {
    throw ConfigError("weights must be F²×H×W with F=" + std::to_string(kernel_size) + ", got " +
                      shape_to_string(weights.shape()));
  }
  require_same_shape(weights.shape(), alpha.shape(), "warp params alpha");
  require_same_shape(weights.shape(), beta.shape(), "warp params beta");
  if (!alpha.all_finite() || !beta.all_finite()) {
    throw InvalidOffsetError("warp offsets must be finite");
  }
  const std::size_t n = height() * width();
  const double tol = weight_sum_tolerance<T>(taps());
  for (std::size_t p = 0; p < n; ++p) {
    double sum = 0.0;
    for (std::size_t t = 0; t < taps(); ++t) {
      const T w = weights[t * n + p];
      if (!(w >= T{0})) throw ConfigError("warp weights must be nonnegative and finite");
      sum += static_cast<double>(w);
    }
    if (std::abs(sum - 1.0) > tol) {
      throw ConfigError("warp weights at pixel " + std::to_string(p) + " sum to " +
                        std::to_string(sum) + ", expected 1");
    }
  }
}

template <typename T>
WarpParams<T> WarpParams<T>::identity(std::size_t height, std::size_t width) {
  return translation(height, width, T{0}, T{0});
}

template <typename T>
WarpParams<T> WarpParams<T>::translation(std::size_t height, std::size_t width, T dy, T dx) {
  WarpParams p;
  p.weights = BasicTensor<T>({1, height, width}, T{1});
  p.alpha = BasicTensor<T>({1, height, width}, dy);
  p.beta = BasicTensor<T>({1, height, width}, dx);
  p.kernel_size = 1;
  p.dilation = 0;
  return p;
}

template <typename T>
void OcclusionMap<T>::validate() const {
  if (values.rank() != 3 || values.dim(0) != 1) {
    throw ConfigError("occlusion map must be 1×H×W, got " + shape_to_string(values.shape()));
  }
  for (T v : values.values()) {
    if (!(v >= T{0} && v <= T{1})) throw ConfigError("occlusion value outside [0,1]");
  }
}

template <typename T>
OcclusionMap<T> OcclusionMap<T>::filled(std::size_t height, std::size_t width, T value) {
  return OcclusionMap{BasicTensor<T>({1, height, width}, value)};
}

template <typename T>
BasicTensor<T> forward_warp(const BasicTensor<T>& input, const WarpParams<T>& params) {
  check_input(input, params, "forward_warp");
  const std::size_t channels = input.dim(0);
  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  const std::size_t n = h * w;
  const std::size_t taps = params.taps();
  const int f = params.kernel_size;

  BasicTensor<T> out({channels, h, w});
  const T* src = input.data();
  T* dst = out.data();

  parallel_for_range(0, h, row_grain(w, taps), [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> acc(channels);
    for (std::size_t i = row_begin; i < row_end; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t p = i * w + j;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t t = 0; t < taps; ++t) {
          const int k = static_cast<int>(t) / f;
          const int l = static_cast<int>(t) % f;
          const T y = static_cast<T>(i) + params.grid_offset(k) + params.alpha[t * n + p];
          const T x = static_cast<T>(j) + params.grid_offset(l) + params.beta[t * n + p];
          const T wt = params.weights[t * n + p];
          const auto s = make_stencil(h, w, y, x);
          for (std::size_t c = 0; c < channels; ++c) {
            acc[c] += static_cast<double>(wt) * static_cast<double>(s.sample(src + c * n));
          }
        }
        for (std::size_t c = 0; c < channels; ++c) dst[c * n + p] = static_cast<T>(acc[c]);
      }
    }
  });
  return out;
}

Frame forward_warp(const Frame& input, const WarpParams<float>& params) {
  return to_frame(forward_warp(input.pixels(), params));
}

template <typename T>
WarpGrads<T> backward_warp_vjp(const BasicTensor<T>& input, const WarpParams<T>& params,
                               const BasicTensor<T>& upstream, bool need_input_grad) {
  check_input(input, params, "backward_warp_vjp");
  require_same_shape(input.shape(), upstream.shape(), "backward_warp_vjp upstream");
  const std::size_t channels = input.dim(0);
  const std::size_t h = input.dim(1);
  const std::size_t w = input.dim(2);
  const std::size_t n = h * w;
  const std::size_t taps = params.taps();
  const int f = params.kernel_size;

  WarpGrads<T> g;
  g.weights = BasicTensor<T>(params.weights.shape());
  g.alpha = BasicTensor<T>(params.alpha.shape());
  g.beta = BasicTensor<T>(params.beta.shape());

  const T* src = input.data();
  const T* up = upstream.data();

  // Gradients on the parameters are gathers; the input gradient is a scatter
  // into per-chunk buffers that are summed in chunk order afterwards.
  const std::size_t chunks = need_input_grad ? chunk_count(h, kScatterChunks) : 1;
  std::vector<std::vector<T>> scatter(need_input_grad ? chunks : 0,
                                      std::vector<T>(channels * n, T{0}));

  auto process_rows = [&](std::size_t row_begin, std::size_t row_end, T* gin) {
    for (std::size_t i = row_begin; i < row_end; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const std::size_t p = i * w + j;
        for (std::size_t t = 0; t < taps; ++t) {
          const int k = static_cast<int>(t) / f;
          const int l = static_cast<int>(t) % f;
          const std::size_t q = t * n + p;
          const T y = static_cast<T>(i) + params.grid_offset(k) + params.alpha[q];
          const T x = static_cast<T>(j) + params.grid_offset(l) + params.beta[q];
          const T wt = params.weights[q];
          const auto s = make_stencil(h, w, y, x);
          double gw = 0.0;
          double gy = 0.0;
          double gx = 0.0;
          for (std::size_t c = 0; c < channels; ++c) {
            const T* plane = src + c * n;
            const double u = static_cast<double>(up[c * n + p]);
            gw += u * static_cast<double>(s.sample(plane));
            gy += u * static_cast<double>(s.derivative_y(plane));
            gx += u * static_cast<double>(s.derivative_x(plane));
            if (gin != nullptr) {
              const T scaled = static_cast<T>(u * static_cast<double>(wt));
              T* gplane = gin + c * n;
              for (std::size_t corner = 0; corner < 4; ++corner) {
                gplane[s.index[corner]] += scaled * s.weight[corner];
              }
            }
          }
          g.weights[q] = static_cast<T>(gw);
          g.alpha[q] = static_cast<T>(static_cast<double>(wt) * gy);
          g.beta[q] = static_cast<T>(static_cast<double>(wt) * gx);
        }
      }
    }
  };

  if (need_input_grad) {
    parallel_for(0, chunks, [&](std::size_t ci) {
      const auto b = chunk_bounds(h, chunks, ci);
      process_rows(b.begin, b.end, scatter[ci].data());
    });
    g.input = BasicTensor<T>(input.shape());
    T* gin = g.input.data();
    for (std::size_t ci = 0; ci < chunks; ++ci) {
      const auto& buf = scatter[ci];
      for (std::size_t e = 0; e < buf.size(); ++e) gin[e] += buf[e];
    }
  } else {
    parallel_for_range(0, h, row_grain(w, taps),
                       [&](std::size_t lo, std::size_t hi) { process_rows(lo, hi, nullptr); });
  }
  return g;
}

namespace {

template <typename T>
void check_blend(const BasicTensor<T>& fwd, const BasicTensor<T>& bwd, const OcclusionMap<T>& v,
                 const char* what) {
  require_same_shape(fwd.shape(), bwd.shape(), what);
  if (fwd.rank() != 3) throw ConfigError(std::string(what) + ": expected C×H×W frames");
  v.validate();
  if (v.height() != fwd.dim(1) || v.width() != fwd.dim(2)) {
    throw ConfigError(std::string(what) + ": occlusion map is " +
                      shape_to_string(v.values.shape()) + " but frames are " +
                      shape_to_string(fwd.shape()));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> occlusion_blend(const BasicTensor<T>& fwd, const BasicTensor<T>& bwd,
                               const OcclusionMap<T>& v, bool enabled) {
  check_blend(fwd, bwd, v, "occlusion_blend");
  const std::size_t channels = fwd.dim(0);
  const std::size_t n = fwd.dim(1) * fwd.dim(2);
  BasicTensor<T> out(fwd.shape());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t e = c * n + p;
      out[e] = enabled ? v.values[p] * fwd[e] + (T{1} - v.values[p]) * bwd[e]
                       : (fwd[e] + bwd[e]) / T{2};
    }
  }
  return out;
}

Frame occlusion_blend(const Frame& fwd, const Frame& bwd, const OcclusionMap<float>& v,
                      bool enabled) {
  return to_frame(occlusion_blend(fwd.pixels(), bwd.pixels(), v, enabled));
}

template <typename T>
BlendGrads<T> occlusion_blend_vjp(const BasicTensor<T>& fwd, const BasicTensor<T>& bwd,
                                  const OcclusionMap<T>& v, const BasicTensor<T>& upstream,
                                  bool enabled) {
  check_blend(fwd, bwd, v, "occlusion_blend_vjp");
  require_same_shape(fwd.shape(), upstream.shape(), "occlusion_blend_vjp upstream");
  const std::size_t channels = fwd.dim(0);
  const std::size_t n = fwd.dim(1) * fwd.dim(2);
  BlendGrads<T> g{BasicTensor<T>(fwd.shape()), BasicTensor<T>(fwd.shape()),
                  BasicTensor<T>(v.values.shape())};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t p = 0; p < n; ++p) {
      const std::size_t e = c * n + p;
      if (enabled) {
        g.fwd[e] = v.values[p] * upstream[e];
        g.bwd[e] = (T{1} - v.values[p]) * upstream[e];
        g.v[p] += (fwd[e] - bwd[e]) * upstream[e];
      } else {
        g.fwd[e] = upstream[e] / T{2};
        g.bwd[e] = upstream[e] / T{2};
      }
    }
  }
  return g;
}

std::size_t offset_channels(WarpMode mode, int kernel_size) {
  if (mode == WarpMode::sdc || mode == WarpMode::flow_only) return 1;
  return static_cast<std::size_t>(kernel_size) * kernel_size;
}

namespace {

template <typename T>
void check_raw(WarpMode mode, const RawHeads<T>& raw) {
  if (mode == WarpMode::flow_only && raw.kernel_size != 1) {
    throw ConfigError("flow_only mode requires kernel size 1");
  }
  const std::size_t taps = static_cast<std::size_t>(raw.kernel_size) * raw.kernel_size;
  if (raw.weights.rank() != 3 || raw.weights.dim(0) != taps) {
    throw ConfigError(std::string(to_string(mode)) + ": raw weights must be F²×H×W, got " +
                      shape_to_string(raw.weights.shape()));
  }
  const Shape offsets{offset_channels(mode, raw.kernel_size), raw.weights.dim(1),
                      raw.weights.dim(2)};
  if (mode != WarpMode::kernel_only) {
    require_same_shape(raw.alpha.shape(), offsets, "raw alpha head");
    require_same_shape(raw.beta.shape(), offsets, "raw beta head");
  }
}

template <typename T>
BasicTensor<T> broadcast_plane(const BasicTensor<T>& plane, std::size_t taps) {
  const std::size_t n = plane.dim(1) * plane.dim(2);
  BasicTensor<T> out({taps, plane.dim(1), plane.dim(2)});
  for (std::size_t t = 0; t < taps; ++t) {
    std::copy(plane.data(), plane.data() + n, out.data() + t * n);
  }
  return out;
}

template <typename T>
BasicTensor<T> sum_over_taps(const BasicTensor<T>& g) {
  const std::size_t n = g.dim(1) * g.dim(2);
  BasicTensor<T> out({1, g.dim(1), g.dim(2)});
  for (std::size_t t = 0; t < g.dim(0); ++t) {
    for (std::size_t p = 0; p < n; ++p) out[p] += g[t * n + p];
  }
  return out;
}

// Per-tap spatial mean, broadcast back over every pixel.
template <typename T>
BasicTensor<T> spatial_mean_broadcast(const BasicTensor<T>& g) {
  const std::size_t n = g.dim(1) * g.dim(2);
  BasicTensor<T> out(g.shape());
  for (std::size_t t = 0; t < g.dim(0); ++t) {
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) sum += static_cast<double>(g[t * n + p]);
    const T mean = static_cast<T>(sum / static_cast<double>(n));
    std::fill(out.data() + t * n, out.data() + (t + 1) * n, mean);
  }
  return out;
}

}  // namespace

template <typename T>
WarpParams<T> make_mode_params(WarpMode mode, const RawHeads<T>& raw) {
  check_raw(mode, raw);
  WarpParams<T> p;
  p.kernel_size = raw.kernel_size;
  p.dilation = raw.dilation;
  const Shape full = raw.weights.shape();
  switch (mode) {
    case WarpMode::adacof:
      p.weights = raw.weights;
      p.alpha = raw.alpha;
      p.beta = raw.beta;
      break;
    case WarpMode::flow_only:
      p.weights = BasicTensor<T>(full, T{1});
      p.alpha = raw.alpha;
      p.beta = raw.beta;
      break;
    case WarpMode::kernel_only:
      p.weights = raw.weights;
      p.alpha = BasicTensor<T>(full);
      p.beta = BasicTensor<T>(full);
      break;
    case WarpMode::shared_weight:
      p.weights = spatial_mean_broadcast(raw.weights);
      p.alpha = raw.alpha;
      p.beta = raw.beta;
      break;
    case WarpMode::sdc:
      p.weights = raw.weights;
      p.alpha = broadcast_plane(raw.alpha, p.taps());
      p.beta = broadcast_plane(raw.beta, p.taps());
      break;
  }
  return p;
}

template <typename T>
RawHeads<T> make_mode_params_vjp(WarpMode mode, const RawHeads<T>& raw,
                                 const WarpGrads<T>& grads) {
  check_raw(mode, raw);
  RawHeads<T> g;
  g.kernel_size = raw.kernel_size;
  g.dilation = raw.dilation;
  switch (mode) {
    case WarpMode::adacof:
      g.weights = grads.weights;
      g.alpha = grads.alpha;
      g.beta = grads.beta;
      break;
    case WarpMode::flow_only:
      g.weights = BasicTensor<T>(raw.weights.shape());
      g.alpha = grads.alpha;
      g.beta = grads.beta;
      break;
    case WarpMode::kernel_only:
      g.weights = grads.weights;
      g.alpha = BasicTensor<T>(raw.alpha.shape());
      g.beta = BasicTensor<T>(raw.beta.shape());
      break;
    case WarpMode::shared_weight:
      g.weights = spatial_mean_broadcast(grads.weights);
      g.alpha = grads.alpha;
      g.beta = grads.beta;
      break;
    case WarpMode::sdc:
      g.weights = grads.weights;
      g.alpha = sum_over_taps(grads.alpha);
      g.beta = sum_over_taps(grads.beta);
      break;
  }
  return g;
}

#define ADACOF_INSTANTIATE_WARP(T)                                                              \
  template struct WarpParams<T>;                                                                \
  template struct OcclusionMap<T>;                                                              \
  template BasicTensor<T> forward_warp(const BasicTensor<T>&, const WarpParams<T>&);            \
  template WarpGrads<T> backward_warp_vjp(const BasicTensor<T>&, const WarpParams<T>&,          \
                                          const BasicTensor<T>&, bool);                         \
  template BasicTensor<T> occlusion_blend(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                          const OcclusionMap<T>&, bool);                        \
  template BlendGrads<T> occlusion_blend_vjp(const BasicTensor<T>&, const BasicTensor<T>&,      \
                                             const OcclusionMap<T>&, const BasicTensor<T>&,     \
                                             bool);                                             \
  template WarpParams<T> make_mode_params(WarpMode, const RawHeads<T>&);                        \
  template RawHeads<T> make_mode_params_vjp(WarpMode, const RawHeads<T>&, const WarpGrads<T>&);

ADACOF_INSTANTIATE_WARP(float)
ADACOF_INSTANTIATE_WARP(double)

#undef ADACOF_INSTANTIATE_WARP

}  // namespace adacof
