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
#include <filesystem>
#include <limits>

#include "adacof/errors.hpp"
#include "adacof/image_io.hpp"
#include "adacof/tensor.hpp"

using namespace adacof;

TEST(Tensor, ShapeAndAccess) {
  Tensor t({2, 3, 4}, 1.5F);
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.dim(2), 4u);
  t.at(1, 2, 3) = 7.0F;
  EXPECT_EQ(t[23], 7.0F);
  EXPECT_EQ(t.plane(1).size(), 12u);
  EXPECT_THROW((void)t.dim(3), ConfigError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<float>(3)), ConfigError);
  EXPECT_THROW((void)t.reshaped({5, 5}), ConfigError);
  EXPECT_EQ(t.reshaped({24}).dim(0), 24u);
}

TEST(Tensor, ArithmeticAndFinite) {
  Tensor a({3}, std::vector<float>{1, 2, 3});
  Tensor b({3}, std::vector<float>{1, 1, 1});
  a += b;
  a *= 2.0F;
  EXPECT_EQ(a, Tensor({3}, std::vector<float>{4, 6, 8}));
  EXPECT_TRUE(a.all_finite());
  a[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_FALSE(a.all_finite());
  EXPECT_THROW(b += Tensor({4}), ConfigError);
  EXPECT_DOUBLE_EQ(max_abs_diff(b, Tensor({3}, std::vector<float>{1, 1, 3})), 2.0);
}

TEST(Frame, Validation) {
  EXPECT_THROW(Frame(Tensor({2, 4, 4})), ConfigError);
  EXPECT_THROW(Frame(Tensor({3, 4})), ConfigError);
  EXPECT_THROW(Frame(Tensor({3, 4, 4}, 1.5F)), ConfigError);
  EXPECT_THROW(Frame(Tensor({3, 4, 4}, -0.1F)), ConfigError);
  const Frame f = Frame::filled(1, 2, 3, 0.25F);
  EXPECT_EQ(f.channels(), 1u);
  EXPECT_EQ(f.at(0, 1, 2), 0.25F);
}

TEST(Frame, ToFrameClampsAndRejectsNan) {
  Tensor t({1, 1, 2}, std::vector<float>{-0.01F, 1.02F});
  const Frame f = to_frame(t);
  EXPECT_EQ(f.at(0, 0, 0), 0.0F);
  EXPECT_EQ(f.at(0, 0, 1), 1.0F);
  t[0] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW((void)to_frame(t), NumericError);
}

TEST(ImageIo, QuantizationIsHalfUp) {
  EXPECT_EQ(quantize_unit(0.0F), 0);
  EXPECT_EQ(quantize_unit(1.0F), 255);
  EXPECT_EQ(quantize_unit(0.5F), 128);  // 127.5 rounds up
  EXPECT_EQ(quantize_unit(-3.0F), 0);
  EXPECT_EQ(quantize_unit(7.0F), 255);
  for (int b = 0; b < 256; ++b) {
    EXPECT_EQ(quantize_unit(dequantize_byte(static_cast<std::uint8_t>(b))), b);
  }
}

TEST(ImageIo, PpmRoundTripIsExact) {
  Tensor t({3, 5, 7});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dequantize_byte(static_cast<std::uint8_t>((i * 37) % 256));
  const Frame f(t);
  const auto bytes = encode_pnm(f);
  EXPECT_EQ(decode_pnm(bytes), f);
  const std::string head(bytes.begin(), bytes.begin() + 2);
  EXPECT_EQ(head, "P6");

  const auto dir = std::filesystem::temp_directory_path() / "adacof_io_test";
  std::filesystem::create_directories(dir);
  write_image(dir / "a.ppm", f);
  EXPECT_EQ(read_ppm(dir / "a.ppm"), f);
  const Frame g = Frame::filled(1, 3, 2, dequantize_byte(9));
  write_image(dir / "g.pgm", g);
  EXPECT_EQ(read_image(dir / "g.pgm"), g);
  EXPECT_THROW((void)read_ppm(dir / "g.pgm"), IoError);
  EXPECT_THROW((void)read_image(dir / "missing.ppm"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(ImageIo, HeaderCommentsAndErrors) {
  const std::string text = "P5\n# comment\n2 1\n# another\n255\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.push_back(0);
  bytes.push_back(255);
  const Frame f = decode_pnm(bytes);
  EXPECT_EQ(f.at(0, 0, 1), 1.0F);

  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_THROW((void)decode_pnm(truncated), IoError);
  const std::string bad = "P5\n2 1\n65535\n";
  EXPECT_THROW((void)decode_pnm(std::vector<std::uint8_t>(bad.begin(), bad.end())), IoError);
  const std::string p3 = "P3\n1 1\n255\n0 0 0\n";
  EXPECT_THROW((void)decode_pnm(std::vector<std::uint8_t>(p3.begin(), p3.end())), IoError);
}
