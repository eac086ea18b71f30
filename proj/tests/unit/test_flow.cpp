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

#include <gtest/gtest.h>

#include <random>

#include "adacof/flow.hpp"
#include "oracles.hpp"

using namespace adacof;

TEST(Flow, MeanAndVarianceMatchBruteForce) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 30; ++n) {
    const int f = 1 + n % 5, d = n % 3;
    const auto p = oracle::random_params<double>(f, d, 6, 7, rng);
    for (bool grid : {false, true}) {
      const auto ref = oracle::flow_stats(p, grid);
      const auto m = mean_flow(p, grid);
      const auto v = variance_flow(p, grid);
      for (std::size_t i = 0; i < ref.mean.size(); ++i) {
        EXPECT_NEAR(m.vectors[i], ref.mean[i], 1e-6);
        EXPECT_NEAR(v.components.vectors[i], ref.var[i], 1e-6);
        EXPECT_GE(v.components.vectors[i], 0.0);
      }
      for (std::size_t q = 0; q < 42; ++q) {
        EXPECT_NEAR(v.trace[q], ref.var[q] + ref.var[42 + q], 1e-9);
      }
    }
  }
}

TEST(Flow, SecondMomentIdentity) {
  // sum W dp^2 - Fm^2 = Fv per axis.
  std::mt19937_64 rng(22);
  const auto p = oracle::random_params<float>(5, 1, 8, 8, rng);
  const auto m = mean_flow(p);
  const auto v = variance_flow(p);
  const std::size_t n = 64;
  for (std::size_t q = 0; q < n; ++q) {
    double sy = 0, sx = 0;
    for (std::size_t t = 0; t < 25; ++t) {
      sy += double(p.weights[t * n + q]) * p.alpha[t * n + q] * p.alpha[t * n + q];
      sx += double(p.weights[t * n + q]) * p.beta[t * n + q] * p.beta[t * n + q];
    }
    EXPECT_NEAR(sy - double(m.vectors[q]) * m.vectors[q], v.components.vectors[q], 1e-5);
    EXPECT_NEAR(sx - double(m.vectors[n + q]) * m.vectors[n + q], v.components.vectors[n + q], 1e-5);
  }
}

TEST(Flow, TranslationGivesConstantMeanAndZeroVariance) {
  const auto p = WarpParams<float>::translation(4, 5, 1.25F, -0.5F);
  const auto m = mean_flow(p);
  const auto v = variance_flow(p);
  for (std::size_t q = 0; q < 20; ++q) {
    EXPECT_FLOAT_EQ(m.vectors[q], 1.25F);
    EXPECT_FLOAT_EQ(m.vectors[20 + q], -0.5F);
    EXPECT_EQ(v.trace[q], 0.0F);
  }
}

TEST(Flow, GridInclusiveMeanOfUniformKernelIsZero) {
  WarpParams<float> p;
  p.kernel_size = 3;
  p.dilation = 2;
  p.weights = Tensor({9, 2, 2}, 1.0F / 9);
  p.alpha = Tensor({9, 2, 2});
  p.beta = Tensor({9, 2, 2});
  const auto m = mean_flow(p, true);
  for (float x : m.vectors.values()) EXPECT_NEAR(x, 0.0F, 1e-6);
  // Variance of the dilated grid positions: 2/3 * d^2 per axis.
  const auto v = variance_flow(p, true);
  for (float x : v.components.vectors.values()) EXPECT_NEAR(x, 8.0F / 3, 1e-5);
}

TEST(Flow, Rendering) {
  FlowMap<float> zero{Tensor({2, 3, 3})};
  const Frame white = render_flow(zero);
  for (float v : white.pixels().values()) EXPECT_EQ(v, 1.0F);

  FlowMap<float> right{Tensor({2, 1, 2})};
  right.vectors.at(1, 0, 0) = 1.0F;   // +x
  right.vectors.at(1, 0, 1) = -1.0F;  // -x
  const Frame f = render_flow(right);
  EXPECT_NE(f.at(0, 0, 0), f.at(0, 0, 1));

  OcclusionMap<float> v{Tensor({1, 1, 3}, std::vector<float>{1.0F, 0.5F, 0.0F})};
  const Frame o = render_occlusion(v);
  EXPECT_EQ(o.at(0, 0, 0), 1.0F);  // red: only the first frame sees it
  EXPECT_EQ(o.at(1, 0, 1), 1.0F);  // green: both
  EXPECT_EQ(o.at(2, 0, 2), 1.0F);  // blue: only the second
  EXPECT_EQ(o.at(2, 0, 0), 0.0F);

  const Frame g = render_magnitude(Tensor({1, 1, 2}, std::vector<float>{0.0F, 2.0F}));
  EXPECT_EQ(g.channels(), 3u);
  EXPECT_EQ(g.at(0, 0, 0), 0.0F);
  EXPECT_EQ(g.at(0, 0, 1), 1.0F);
}
