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

#include <string>

#include "adacof/tensor.hpp"

namespace adacof {

// 10*log10(1/MSE) on the [0,1] scale; +infinity for identical frames.
double psnr(const Frame& a, const Frame& b);

// Mean SSIM over all fully contained 11×11 windows (Gaussian sigma 1.5,
// K1 = 0.01, K2 = 0.03, dynamic range 1), averaged over channels.
double ssim(const Frame& a, const Frame& b);

// Root mean squared error on the 0-255 scale.
double interpolation_error(const Frame& a, const Frame& b);

struct MetricRow {
  std::string name;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double ie = 0.0;
};

MetricRow evaluate_pair(std::string name, const Frame& output, const Frame& truth);

// "name,psnr_db,ssim,ie" with 6 significant digits.
std::string metric_csv_header();
std::string to_csv(const MetricRow& row);

}  // namespace adacof
