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
#include <optional>
#include <vector>

#include "adacof/optim.hpp"
#include "adacof/synthnet.hpp"

namespace adacof {

// ".ackp" checkpoint, little-endian:
//
//   "ACKP"  u32 version
//   config: u32 F, u32 d, u32 depth, u32 n, n × u32 widths, u32 head_width,
//           u32 frame_channels, u32 warp_mode, u32 use_occlusion, u64 seed
//   u32 count, then per parameter in model order:
//           u32 name_len, name bytes, u32 rank, rank × u32 dims, f32 data
//   u32 has_optimizer; if 1: u64 step, f64 lr, f64 beta1, f64 beta2,
//           f64 u_floor, then m and u data for every parameter in order
struct Checkpoint {
  ModelConfig config;
  ParameterSet<float> params;
  std::optional<AdamaxState<float>> optimizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace adacof
