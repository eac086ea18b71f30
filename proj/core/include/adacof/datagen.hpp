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

#include "adacof/flow.hpp"
#include "adacof/tensor.hpp"
#include "adacof/warp.hpp"

namespace adacof {

enum class MotionKind { global_translation, rotation, occluder };

struct Rect {
  double top = 0.0;
  double left = 0.0;
  double height = 0.0;
  double width = 0.0;
};

// Motion over one full frame step (first -> last). The middle frame is the
// render at half the step.
struct MotionSpec {
  MotionKind kind = MotionKind::global_translation;
  double dy = 0.0;  // translation of the scene, or of the occluder
  double dx = 0.0;
  double angle = 0.0;  // rotation about the frame center, radians per step
  double background_dy = 0.0;  // occluder kind: background translation
  double background_dx = 0.0;
  Rect occluder;  // occluder kind: rectangle position at the first frame
  double max_displacement = 3.0;
  std::uint64_t texture_seed = 0;
};

// (I_n, I_gt, I_n+1) plus, for synthetic data, the ground truth of the
// middle frame: flow points from a middle pixel to its position in the last
// frame (the first frame is at minus that flow); V follows the occlusion-map
// convention (1 = visible only in the first frame).
struct Triplet {
  Frame first;
  Frame middle;
  Frame last;
  std::optional<FlowMap<float>> truth_flow;
  std::optional<OcclusionMap<float>> truth_occlusion;
};

// Renders a square size×size RGB triplet. Textures are sums of random
// low-frequency sinusoids rasterized on a grid and sampled with the same
// bilinear rule as the warp operator. Throws ConfigError for size < 16 or a
// motion exceeding max_displacement.
Triplet generate_triplet(const MotionSpec& spec, std::size_t size, std::uint64_t seed);

// Largest displacement any pixel of a size×size frame undergoes over the step.
double max_motion(const MotionSpec& spec, std::size_t size);

// Random motion of a random kind, bounded by max_displacement.
MotionSpec random_motion(std::uint64_t seed, std::size_t size, double max_displacement);

struct AugmentOptions {
  std::size_t crop = 0;  // square crop side; 0 keeps the full frame
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_swap = 0.5;
};

// Random crop, horizontal/vertical flips and temporal swap, with the truth
// maps transformed consistently.
Triplet augment(const Triplet& triplet, std::uint64_t seed, const AugmentOptions& options = {});

// `count` triplets, each from its own seed derived from (seed, index).
std::vector<Triplet> generate_dataset(std::size_t count, std::size_t size, double max_displacement,
                                      std::uint64_t seed);

// Only pure translations (held-out flow checks).
std::vector<Triplet> generate_translation_set(std::size_t count, std::size_t size,
                                              double max_displacement, std::uint64_t seed);

// Directory layout: NNNN/frame0.ppm, frame1.ppm, frame2.ppm, truth.acof and a
// manifest index.txt listing the triplet directories one per line.
void write_dataset(const std::filesystem::path& dir, const std::vector<Triplet>& triplets);
std::vector<Triplet> read_dataset(const std::filesystem::path& dir);

// Seed for stream `index` derived from `seed` (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace adacof
