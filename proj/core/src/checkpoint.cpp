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

#include "adacof/checkpoint.hpp"

#include "adacof/errors.hpp"
#include "adacof/warp_io.hpp"

namespace adacof {
namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  wire::put_u32(out, static_cast<std::uint32_t>(v));
  wire::put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint64_t get_u64(wire::Reader& in) {
  const std::uint64_t lo = in.u32();
  const std::uint64_t hi = in.u32();
  return lo | (hi << 32);
}

void put_tensors_data(std::vector<std::uint8_t>& out, const ParameterSet<float>& set) {
  for (const auto& e : set) wire::put_f32s(out, e.value.values());
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const auto& c = ckpt.config;
  c.validate();
  std::vector<std::uint8_t> out{'A', 'C', 'K', 'P'};
  wire::put_u32(out, kCheckpointVersion);
  wire::put_u32(out, static_cast<std::uint32_t>(c.kernel_size));
  wire::put_u32(out, static_cast<std::uint32_t>(c.dilation));
  wire::put_u32(out, static_cast<std::uint32_t>(c.depth));
  wire::put_u32(out, static_cast<std::uint32_t>(c.widths.size()));
  for (int w : c.widths) wire::put_u32(out, static_cast<std::uint32_t>(w));
  wire::put_u32(out, static_cast<std::uint32_t>(c.head_width));
  wire::put_u32(out, static_cast<std::uint32_t>(c.frame_channels));
  wire::put_u32(out, static_cast<std::uint32_t>(c.warp_mode));
  wire::put_u32(out, c.use_occlusion ? 1U : 0U);
  put_u64(out, c.seed);

  wire::put_u32(out, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& e : ckpt.params) {
    wire::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    wire::put_u32(out, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t d : e.value.shape()) wire::put_u32(out, static_cast<std::uint32_t>(d));
    wire::put_f32s(out, e.value.values());
  }

  wire::put_u32(out, ckpt.optimizer ? 1U : 0U);
  if (ckpt.optimizer) {
    const auto& o = *ckpt.optimizer;
    if (!o.m.congruent_with(ckpt.params) || !o.u.congruent_with(ckpt.params)) {
      throw ConfigError("optimizer state does not match the checkpoint parameters");
    }
    put_u64(out, o.step);
    wire::put_f64(out, o.settings.lr);
    wire::put_f64(out, o.settings.beta1);
    wire::put_f64(out, o.settings.beta2);
    wire::put_f64(out, o.settings.u_floor);
    put_tensors_data(out, o.m);
    put_tensors_data(out, o.u);
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  wire::Reader in(bytes, "checkpoint");
  in.expect_magic("ACKP");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) in.fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  auto& c = ckpt.config;
  c.kernel_size = static_cast<int>(in.u32());
  c.dilation = static_cast<int>(in.u32());
  c.depth = static_cast<int>(in.u32());
  const std::uint32_t n_widths = in.u32();
  if (n_widths > 64) in.fail("implausible width count");
  c.widths.clear();
  for (std::uint32_t i = 0; i < n_widths; ++i) c.widths.push_back(static_cast<int>(in.u32()));
  c.head_width = static_cast<int>(in.u32());
  c.frame_channels = static_cast<int>(in.u32());
  const std::uint32_t mode = in.u32();
  if (mode > static_cast<std::uint32_t>(WarpMode::sdc)) in.fail("unknown warp mode");
  c.warp_mode = static_cast<WarpMode>(mode);
  c.use_occlusion = in.u32() != 0;
  c.seed = get_u64(in);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    in.fail(std::string("invalid model config: ") + e.what());
  }

  const std::uint32_t count = in.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = in.u32();
    if (name_len > 4096) in.fail("implausible parameter name length");
    std::string name = in.bytes(name_len);
    const std::uint32_t rank = in.u32();
    if (rank > 8) in.fail("implausible tensor rank");
    Shape shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(in.u32());
    if (shape_volume(shape) > (std::size_t{1} << 28)) in.fail("implausible tensor size");
    Tensor t(shape);
    in.f32s(t.values());
    ckpt.params.add(std::move(name), std::move(t));
  }

  // The parameter layout must be exactly what the config builds.
  const auto expected = init_parameters<float>(c);
  if (!expected.congruent_with(ckpt.params)) in.fail("parameters do not match the stored model config");

  if (in.u32() != 0) {
    AdamaxState<float> o;
    o.step = get_u64(in);
    o.settings.lr = in.f64();
    o.settings.beta1 = in.f64();
    o.settings.beta2 = in.f64();
    o.settings.u_floor = in.f64();
    o.m = ckpt.params.zeros_like();
    o.u = ckpt.params.zeros_like();
    for (std::size_t i = 0; i < o.m.size(); ++i) in.f32s(o.m.mutable_value(i).values());
    for (std::size_t i = 0; i < o.u.size(); ++i) in.f32s(o.u.mutable_value(i).values());
    ckpt.optimizer = std::move(o);
  }
  if (!in.at_end()) in.fail("trailing bytes");
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  wire::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  try {
    return decode_checkpoint(wire::read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace adacof
