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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "adacof/warp.hpp"

namespace adacof {

// ".acof" parameter dump, little-endian throughout:
//
//   "ACOF"  u32 version  u32 F  u32 d  u32 H  u32 W
//   per direction: weights, alpha, beta   (each F²·H·W f32)
//   occlusion                              (H·W f32)
//
// Version 1 carries one warp direction, version 2 carries two (the warp
// applied to the first frame, then the one applied to the second).
struct ParamBundle {
  std::vector<WarpParams<float>> directions;
  OcclusionMap<float> occlusion;
};

inline constexpr std::uint32_t kAcofSingleDirection = 1;
inline constexpr std::uint32_t kAcofTwoDirections = 2;

std::vector<std::uint8_t> encode_acof(const ParamBundle& bundle);
ParamBundle decode_acof(const std::vector<std::uint8_t>& bytes);

void write_acof(const std::filesystem::path& path, const ParamBundle& bundle);
ParamBundle read_acof(const std::filesystem::path& path);

// Little-endian primitives shared with the checkpoint format.
namespace wire {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);
void put_f64(std::vector<std::uint8_t>& out, double v);
void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values);

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::uint32_t u32();
  float f32();
  double f64();
  void f32s(std::span<float> out);
  std::string bytes(std::size_t n);
  void expect_magic(const char (&magic)[5]);
  bool at_end() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const;

 private:
  void need(std::size_t n) const;

  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace wire
}  // namespace adacof
