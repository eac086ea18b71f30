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

#include "adacof/nn.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

#include "adacof/errors.hpp"

namespace adacof::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::size_t in_channels, out_channels, kernel, pad, height, width;
  std::size_t rows() const { return in_channels * kernel * kernel; }
  std::size_t pixels() const { return height * width; }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const BasicTensor<T>& weight) {
  if (input.rank() != 3) throw ConfigError("conv2d input must be C×H×W");
  if (weight.rank() != 4 || weight.dim(2) != weight.dim(3) || weight.dim(2) % 2 == 0) {
    throw ConfigError("conv2d weight must be O×C×K×K with odd K, got " +
                      shape_to_string(weight.shape()));
  }
  if (weight.dim(1) != input.dim(0)) {
    throw ConfigError("conv2d weight expects " + std::to_string(weight.dim(1)) +
                      " input channels, got " + std::to_string(input.dim(0)));
  }
  return {input.dim(0), weight.dim(0), weight.dim(2), weight.dim(2) / 2, input.dim(1), input.dim(2)};
}

// col[(c*K + ky)*K + kx][y*W + x] = input[c][y + ky - pad][x + kx - pad], zero outside.
template <typename T>
std::vector<T> im2col(const BasicTensor<T>& input, const ConvGeometry& g) {
  std::vector<T> col(g.rows() * g.pixels(), T{0});
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* plane = input.data() + c * g.pixels();
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col.data() + ((c * g.kernel + ky) * g.kernel + kx) * g.pixels();
        const auto oy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
        const auto ox = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + oy;
          if (sy < 0 || sy >= h) continue;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -ox);
          const std::ptrdiff_t x_hi = std::min(w, w - ox);
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) row[y * w + x] = plane[sy * w + x + ox];
        }
      }
    }
  }
  return col;
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, BasicTensor<T>& out) {
  const auto h = static_cast<std::ptrdiff_t>(g.height);
  const auto w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* plane = out.data() + c * g.pixels();
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * g.pixels();
        const auto oy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(g.pad);
        const auto ox = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(g.pad);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + oy;
          if (sy < 0 || sy >= h) continue;
          const std::ptrdiff_t x_lo = std::max<std::ptrdiff_t>(0, -ox);
          const std::ptrdiff_t x_hi = std::min(w, w - ox);
          for (std::ptrdiff_t x = x_lo; x < x_hi; ++x) plane[sy * w + x + ox] += row[y * w + x];
        }
      }
    }
  }
}

struct Bilinear1d {
  std::size_t lo, hi;
  double frac;
};

// Source coordinate for output index `o` of a ×2 half-pixel upsample.
Bilinear1d upsample_coord(std::size_t o, std::size_t in_size) {
  const double s = std::max(0.0, (static_cast<double>(o) + 0.5) / 2.0 - 0.5);
  const auto lo = std::min(static_cast<std::size_t>(s), in_size - 1);
  const std::size_t hi = std::min(lo + 1, in_size - 1);
  return {lo, hi, s - static_cast<double>(lo)};
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  const auto g = conv_geometry(input, weight);
  if (bias.size() != g.out_channels) throw ConfigError("conv2d bias size mismatch");
  const std::vector<T> col = im2col(input, g);
  BasicTensor<T> out({g.out_channels, g.height, g.width});
  MatrixMap<T> y(out.data(), static_cast<Eigen::Index>(g.out_channels), static_cast<Eigen::Index>(g.pixels()));
  ConstMatrixMap<T> wm(weight.data(), static_cast<Eigen::Index>(g.out_channels), static_cast<Eigen::Index>(g.rows()));
  ConstMatrixMap<T> cm(col.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.pixels()));
  y.noalias() = wm * cm;
  for (std::size_t o = 0; o < g.out_channels; ++o) y.row(static_cast<Eigen::Index>(o)).array() += bias[o];
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_vjp(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                          const BasicTensor<T>& upstream, bool need_input_grad) {
  const auto g = conv_geometry(input, weight);
  require_same_shape(upstream.shape(), Shape{g.out_channels, g.height, g.width}, "conv2d_vjp upstream");
  const auto rows = static_cast<Eigen::Index>(g.rows());
  const auto pixels = static_cast<Eigen::Index>(g.pixels());
  const auto outs = static_cast<Eigen::Index>(g.out_channels);

  const std::vector<T> col = im2col(input, g);
  ConstMatrixMap<T> cm(col.data(), rows, pixels);
  ConstMatrixMap<T> dy(upstream.data(), outs, pixels);
  ConstMatrixMap<T> wm(weight.data(), outs, rows);

  Conv2dGrads<T> grads;
  grads.weight = BasicTensor<T>(weight.shape());
  MatrixMap<T> dw(grads.weight.data(), outs, rows);
  dw.noalias() = dy * cm.transpose();

  grads.bias = BasicTensor<T>({g.out_channels});
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    double sum = 0.0;
    const T* row = upstream.data() + o * g.pixels();
    for (std::size_t p = 0; p < g.pixels(); ++p) sum += static_cast<double>(row[p]);
    grads.bias[o] = static_cast<T>(sum);
  }

  if (need_input_grad) {
    std::vector<T> dcol(g.rows() * g.pixels());
    MatrixMap<T> dc(dcol.data(), rows, pixels);
    dc.noalias() = wm.transpose() * dy;
    grads.input = BasicTensor<T>(input.shape());
    col2im_add(dcol.data(), g, grads.input);
  }
  return grads;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
BasicTensor<T> relu_vjp(const BasicTensor<T>& x, const BasicTensor<T>& upstream) {
  require_same_shape(x.shape(), upstream.shape(), "relu_vjp");
  BasicTensor<T> g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T{0} ? upstream[i] : T{0};
  return g;
}

template <typename T>
BasicTensor<T> avg_pool2(const BasicTensor<T>& x) {
  if (x.rank() != 3 || x.dim(1) < 2 || x.dim(2) < 2) throw ConfigError("avg_pool2 needs C×H×W with H, W >= 2");
  const std::size_t c = x.dim(0), oh = x.dim(1) / 2, ow = x.dim(2) / 2;
  BasicTensor<T> y({c, oh, ow});
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        y.at(k, i, j) = (x.at(k, 2 * i, 2 * j) + x.at(k, 2 * i, 2 * j + 1) +
                         x.at(k, 2 * i + 1, 2 * j) + x.at(k, 2 * i + 1, 2 * j + 1)) /
                        T{4};
      }
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> avg_pool2_vjp(const Shape& input_shape, const BasicTensor<T>& upstream) {
  BasicTensor<T> g(input_shape);
  const std::size_t c = input_shape[0], oh = input_shape[1] / 2, ow = input_shape[2] / 2;
  require_same_shape(upstream.shape(), Shape{c, oh, ow}, "avg_pool2_vjp");
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const T v = upstream.at(k, i, j) / T{4};
        g.at(k, 2 * i, 2 * j) = v;
        g.at(k, 2 * i, 2 * j + 1) = v;
        g.at(k, 2 * i + 1, 2 * j) = v;
        g.at(k, 2 * i + 1, 2 * j + 1) = v;
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> upsample2(const BasicTensor<T>& x) {
  if (x.rank() != 3 || x.empty()) throw ConfigError("upsample2 needs a non-empty C×H×W tensor");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  BasicTensor<T> y({c, 2 * h, 2 * w});
  for (std::size_t i = 0; i < 2 * h; ++i) {
    const auto cy = upsample_coord(i, h);
    for (std::size_t j = 0; j < 2 * w; ++j) {
      const auto cx = upsample_coord(j, w);
      const T w00 = static_cast<T>((1 - cy.frac) * (1 - cx.frac));
      const T w01 = static_cast<T>((1 - cy.frac) * cx.frac);
      const T w10 = static_cast<T>(cy.frac * (1 - cx.frac));
      const T w11 = static_cast<T>(cy.frac * cx.frac);
      for (std::size_t k = 0; k < c; ++k) {
        y.at(k, i, j) = w00 * x.at(k, cy.lo, cx.lo) + w01 * x.at(k, cy.lo, cx.hi) +
                        w10 * x.at(k, cy.hi, cx.lo) + w11 * x.at(k, cy.hi, cx.hi);
      }
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> upsample2_vjp(const Shape& input_shape, const BasicTensor<T>& upstream) {
  const std::size_t c = input_shape[0], h = input_shape[1], w = input_shape[2];
  require_same_shape(upstream.shape(), Shape{c, 2 * h, 2 * w}, "upsample2_vjp");
  BasicTensor<T> g(input_shape);
  for (std::size_t i = 0; i < 2 * h; ++i) {
    const auto cy = upsample_coord(i, h);
    for (std::size_t j = 0; j < 2 * w; ++j) {
      const auto cx = upsample_coord(j, w);
      const T w00 = static_cast<T>((1 - cy.frac) * (1 - cx.frac));
      const T w01 = static_cast<T>((1 - cy.frac) * cx.frac);
      const T w10 = static_cast<T>(cy.frac * (1 - cx.frac));
      const T w11 = static_cast<T>(cy.frac * cx.frac);
      for (std::size_t k = 0; k < c; ++k) {
        const T u = upstream.at(k, i, j);
        g.at(k, cy.lo, cx.lo) += w00 * u;
        g.at(k, cy.lo, cx.hi) += w01 * u;
        g.at(k, cy.hi, cx.lo) += w10 * u;
        g.at(k, cy.hi, cx.hi) += w11 * u;
      }
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ConfigError("concat_channels: spatial mismatch " + shape_to_string(a.shape()) + " vs " +
                      shape_to_string(b.shape()));
  }
  BasicTensor<T> y({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.values().begin(), a.values().end(), y.data());
  std::copy(b.values().begin(), b.values().end(), y.data() + a.size());
  return y;
}

template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& g,
                                                         std::size_t first_channels) {
  const std::size_t n = g.dim(1) * g.dim(2);
  if (first_channels > g.dim(0)) throw ConfigError("split_channels: too many channels requested");
  BasicTensor<T> a({first_channels, g.dim(1), g.dim(2)});
  BasicTensor<T> b({g.dim(0) - first_channels, g.dim(1), g.dim(2)});
  std::copy(g.data(), g.data() + first_channels * n, a.data());
  std::copy(g.data() + first_channels * n, g.data() + g.size(), b.data());
  return {std::move(a), std::move(b)};
}

template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& logits) {
  const std::size_t c = logits.dim(0);
  const std::size_t n = logits.dim(1) * logits.dim(2);
  BasicTensor<T> y(logits.shape());
  for (std::size_t p = 0; p < n; ++p) {
    T peak = logits[p];
    for (std::size_t k = 1; k < c; ++k) peak = std::max(peak, logits[k * n + p]);
    double total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double e = std::exp(static_cast<double>(logits[k * n + p] - peak));
      y[k * n + p] = static_cast<T>(e);
      total += e;
    }
    for (std::size_t k = 0; k < c; ++k) {
      y[k * n + p] = static_cast<T>(static_cast<double>(y[k * n + p]) / total);
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> softmax_channels_vjp(const BasicTensor<T>& y, const BasicTensor<T>& upstream) {
  require_same_shape(y.shape(), upstream.shape(), "softmax_channels_vjp");
  const std::size_t c = y.dim(0);
  const std::size_t n = y.dim(1) * y.dim(2);
  BasicTensor<T> g(y.shape());
  for (std::size_t p = 0; p < n; ++p) {
    double dot = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      dot += static_cast<double>(y[k * n + p]) * static_cast<double>(upstream[k * n + p]);
    }
    for (std::size_t k = 0; k < c; ++k) {
      g[k * n + p] = static_cast<T>(static_cast<double>(y[k * n + p]) *
                                    (static_cast<double>(upstream[k * n + p]) - dot));
    }
  }
  return g;
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x) {
  BasicTensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
  }
  return y;
}

template <typename T>
BasicTensor<T> sigmoid_vjp(const BasicTensor<T>& y, const BasicTensor<T>& upstream) {
  require_same_shape(y.shape(), upstream.shape(), "sigmoid_vjp");
  BasicTensor<T> g(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = y[i] * (T{1} - y[i]) * upstream[i];
  return g;
}

#define ADACOF_INSTANTIATE_NN(T)                                                                  \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,                    \
                                 const BasicTensor<T>&);                                          \
  template Conv2dGrads<T> conv2d_vjp(const BasicTensor<T>&, const BasicTensor<T>&,                \
                                     const BasicTensor<T>&, bool);                                \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                            \
  template BasicTensor<T> relu_vjp(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> avg_pool2(const BasicTensor<T>&);                                       \
  template BasicTensor<T> avg_pool2_vjp(const Shape&, const BasicTensor<T>&);                     \
  template BasicTensor<T> upsample2(const BasicTensor<T>&);                                       \
  template BasicTensor<T> upsample2_vjp(const Shape&, const BasicTensor<T>&);                     \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>&,        \
                                                                    std::size_t);                 \
  template BasicTensor<T> softmax_channels(const BasicTensor<T>&);                                \
  template BasicTensor<T> softmax_channels_vjp(const BasicTensor<T>&, const BasicTensor<T>&);     \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                         \
  template BasicTensor<T> sigmoid_vjp(const BasicTensor<T>&, const BasicTensor<T>&);

ADACOF_INSTANTIATE_NN(float)
ADACOF_INSTANTIATE_NN(double)

#undef ADACOF_INSTANTIATE_NN

}  // namespace adacof::nn
