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

#include <cmath>
#include <functional>
#include <random>

#include "adacof/errors.hpp"
#include "adacof/nn.hpp"
#include "oracles.hpp"

using namespace adacof;
using oracle::uniform;

namespace {

// Central-difference directional check: <upstream, f(x + h e_i) - f(x - h e_i)> / 2h
// against the VJP entry i.
void expect_vjp(const std::function<TensorD(const TensorD&)>& f, const TensorD& x,
                const TensorD& grad, const TensorD& upstream, double tol) {
  ASSERT_EQ(grad.shape(), x.shape());
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    TensorD xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const TensorD yp = f(xp), ym = f(xm);
    double s = 0;
    for (std::size_t k = 0; k < yp.size(); ++k) s += upstream[k] * (yp[k] - ym[k]);
    EXPECT_NEAR(grad[i], s / (2 * h), tol) << "entry " << i;
  }
}

TensorD naive_conv(const TensorD& in, const TensorD& w, const TensorD& b) {
  const std::size_t o = w.dim(0), c = w.dim(1), k = w.dim(2), h = in.dim(1), wd = in.dim(2);
  const long r = static_cast<long>(k / 2);
  TensorD out({o, h, wd});
  for (std::size_t oc = 0; oc < o; ++oc)
    for (long y = 0; y < static_cast<long>(h); ++y)
      for (long x = 0; x < static_cast<long>(wd); ++x) {
        double s = b[oc];
        for (std::size_t ic = 0; ic < c; ++ic)
          for (long dy = -r; dy <= r; ++dy)
            for (long dx = -r; dx <= r; ++dx) {
              const long yy = y + dy, xx = x + dx;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(wd)) continue;
              s += in.at(ic, yy, xx) * w[((oc * c + ic) * k + (dy + r)) * k + (dx + r)];
            }
        out.at(oc, y, x) = s;
      }
  return out;
}

}  // namespace

TEST(Conv2d, MatchesNaiveLoops) {
  std::mt19937_64 rng(31);
  for (std::size_t k : {1u, 3u, 5u}) {
    const auto in = uniform<double>({3, 7, 6}, rng, -1, 1);
    const auto w = uniform<double>({4, 3, k, k}, rng, -1, 1);
    const auto b = uniform<double>({4}, rng, -1, 1);
    EXPECT_LT(max_abs_diff(nn::conv2d(in, w, b), naive_conv(in, w, b)), 1e-12);
  }
}

TEST(Conv2d, FloatAgreesWithDouble) {
  std::mt19937_64 rng(32);
  const auto in = uniform<double>({5, 9, 8}, rng, -1, 1);
  const auto w = uniform<double>({6, 5, 3, 3}, rng, -1, 1);
  const auto b = uniform<double>({6}, rng, -1, 1);
  const auto yf = nn::conv2d(in.cast<float>(), w.cast<float>(), b.cast<float>());
  EXPECT_LT(max_abs_diff(yf.cast<double>(), naive_conv(in, w, b)), 1e-5);
}

TEST(Conv2d, VjpMatchesFiniteDifferences) {
  std::mt19937_64 rng(33);
  const auto in = uniform<double>({2, 5, 4}, rng, -1, 1);
  const auto w = uniform<double>({3, 2, 3, 3}, rng, -1, 1);
  const auto b = uniform<double>({3}, rng, -1, 1);
  const auto up = uniform<double>({3, 5, 4}, rng, -1, 1);
  const auto g = nn::conv2d_vjp(in, w, up);
  expect_vjp([&](const TensorD& x) { return nn::conv2d(x, w, b); }, in, g.input, up, 1e-7);
  expect_vjp([&](const TensorD& x) { return nn::conv2d(in, x, b); }, w, g.weight, up, 1e-7);
  expect_vjp([&](const TensorD& x) { return nn::conv2d(in, w, x); }, b, g.bias, up, 1e-7);
  EXPECT_TRUE(nn::conv2d_vjp(in, w, up, false).input.empty());
}

TEST(Conv2d, RejectsBadShapes) {
  const TensorD in({2, 4, 4});
  EXPECT_THROW((void)nn::conv2d(in, TensorD({3, 2, 2, 2}), TensorD({3})), ConfigError);
  EXPECT_THROW((void)nn::conv2d(in, TensorD({3, 1, 3, 3}), TensorD({3})), ConfigError);
  EXPECT_THROW((void)nn::conv2d(in, TensorD({3, 2, 3, 3}), TensorD({2})), ConfigError);
}

TEST(Pooling, AveragesBlocksAndDropsOddEdge) {
  TensorD x({1, 3, 5});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto y = nn::avg_pool2(x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2}));
  EXPECT_DOUBLE_EQ(y[0], (0 + 1 + 5 + 6) / 4.0);
  EXPECT_DOUBLE_EQ(y[1], (2 + 3 + 7 + 8) / 4.0);
  std::mt19937_64 rng(34);
  const auto up = uniform<double>({1, 1, 2}, rng, -1, 1);
  expect_vjp([](const TensorD& v) { return nn::avg_pool2(v); }, x, nn::avg_pool2_vjp(x.shape(), up), up, 1e-8);
}

TEST(Upsample, HalfPixelBilinearWithClamp) {
  std::mt19937_64 rng(35);
  const auto x = uniform<double>({2, 3, 4}, rng, -1, 1);
  const auto y = nn::upsample2(x);
  ASSERT_EQ(y.shape(), (Shape{2, 6, 8}));
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 8; ++j)
        EXPECT_NEAR(y.at(c, i, j), oracle::bilinear4(x, c, (i + 0.5) / 2 - 0.5, (j + 0.5) / 2 - 0.5), 1e-12);
  const auto up = uniform<double>({2, 6, 8}, rng, -1, 1);
  expect_vjp([](const TensorD& v) { return nn::upsample2(v); }, x, nn::upsample2_vjp(x.shape(), up), up, 1e-8);
}

TEST(Channels, ConcatAndSplitAreInverse) {
  std::mt19937_64 rng(36);
  const auto a = uniform<double>({2, 3, 3}, rng, -1, 1);
  const auto b = uniform<double>({1, 3, 3}, rng, -1, 1);
  const auto [ga, gb] = nn::split_channels(nn::concat_channels(a, b), 2);
  EXPECT_EQ(ga, a);
  EXPECT_EQ(gb, b);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  std::mt19937_64 rng(37);
  auto x = uniform<double>({5, 3, 4}, rng, -4, 4);
  const auto y = nn::softmax_channels(x);
  for (std::size_t p = 0; p < 12; ++p) {
    double s = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      EXPECT_GT(y[c * 12 + p], 0.0);
      s += y[c * 12 + p];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
  auto shifted = x;
  for (auto& v : shifted.values()) v += 500.0;
  EXPECT_LT(max_abs_diff(nn::softmax_channels(shifted), y), 1e-12);
  const auto up = uniform<double>({5, 3, 4}, rng, -1, 1);
  expect_vjp([](const TensorD& v) { return nn::softmax_channels(v); }, x, nn::softmax_channels_vjp(y, up), up, 1e-8);
}

TEST(Activations, ReluAndSigmoid) {
  std::mt19937_64 rng(38);
  auto x = uniform<double>({2, 4, 4}, rng, -2, 2);
  for (auto& v : x.values())
    if (std::abs(v) < 1e-3) v = 0.5;
  const auto r = nn::relu(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(r[i], std::max(x[i], 0.0));
  const auto up = uniform<double>({2, 4, 4}, rng, -1, 1);
  expect_vjp([](const TensorD& v) { return nn::relu(v); }, x, nn::relu_vjp(x, up), up, 1e-8);
  const auto s = nn::sigmoid(x);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(s[i], 1 / (1 + std::exp(-x[i])), 1e-15);
  expect_vjp([](const TensorD& v) { return nn::sigmoid(v); }, x, nn::sigmoid_vjp(s, up), up, 1e-8);
}
