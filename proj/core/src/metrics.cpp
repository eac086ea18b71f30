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

#include "adacof/metrics.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <limits>

#include "adacof/errors.hpp"

namespace adacof {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

double mean_squared_error(const Frame& a, const Frame& b) {
  require_same_shape(a.pixels().shape(), b.pixels().shape(), "metric");
  const auto& pa = a.pixels();
  const auto& pb = b.pixels();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(pa.size());
}

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

std::string format_value(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.6g}", v);
}

}  // namespace

double psnr(const Frame& a, const Frame& b) {
  const double mse = mean_squared_error(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double interpolation_error(const Frame& a, const Frame& b) {
  return 255.0 * std::sqrt(mean_squared_error(a, b));
}

double ssim(const Frame& a, const Frame& b) {
  require_same_shape(a.pixels().shape(), b.pixels().shape(), "ssim");
  const std::size_t h = a.height();
  const std::size_t w = a.width();
  if (h < kWindow || w < kWindow) throw ConfigError("ssim needs frames of at least 11×11");
  const auto g = gaussian_taps();
  const std::size_t oh = h - kWindow + 1;
  const std::size_t ow = w - kWindow + 1;

  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < kWindow; ++i) {
          for (int j = 0; j < kWindow; ++j) {
            const double wt = g[i] * g[j];
            const double va = a.at(c, y + i, x + j);
            const double vb = b.at(c, y + i, x + j);
            mu_a += wt * va;
            mu_b += wt * vb;
            // Products grouped so that swapping a and b is bit-exact.
            saa += wt * (va * va);
            sbb += wt * (vb * vb);
            sab += wt * (va * vb);
          }
        }
        const double var_a = saa - mu_a * mu_a;
        const double var_b = sbb - mu_b * mu_b;
        const double cov = sab - mu_a * mu_b;
        total += ((2 * (mu_a * mu_b) + kC1) * (2 * cov + kC2)) /
                 ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      }
    }
  }
  return total / static_cast<double>(a.channels() * oh * ow);
}

MetricRow evaluate_pair(std::string name, const Frame& output, const Frame& truth) {
  return {std::move(name), psnr(output, truth), ssim(output, truth), interpolation_error(output, truth)};
}

std::string metric_csv_header() { return "name,psnr_db,ssim,ie"; }

std::string to_csv(const MetricRow& row) {
  return row.name + "," + format_value(row.psnr_db) + "," + format_value(row.ssim) + "," + format_value(row.ie);
}

}  // namespace adacof
