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
#include <string>
#include <vector>

#include "adacof/tensor.hpp"

namespace adacof {

// Binary netpbm. Values map linearly [0,1] <-> [0,255] with half-up rounding
// on write, so frames on the 1/255 grid round-trip bit-exactly.

std::uint8_t quantize_unit(float value);
float dequantize_byte(std::uint8_t byte);

// P6, maxval 255, three channels.
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Frame read_ppm(const std::filesystem::path& path);

// P5, maxval 255, single channel.
void write_pgm(const std::filesystem::path& path, const Frame& frame);
Frame read_pgm(const std::filesystem::path& path);

// Dispatches on the magic number (P5 or P6).
Frame read_image(const std::filesystem::path& path);
// Writes P6 for 3-channel frames and P5 for single-channel ones.
void write_image(const std::filesystem::path& path, const Frame& frame);

// In-memory variants used by the file functions.
std::vector<std::uint8_t> encode_pnm(const Frame& frame);
Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& source = "<memory>");

}  // namespace adacof
