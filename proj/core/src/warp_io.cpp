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

#include "adacof/warp_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adacof/errors.hpp"

namespace adacof {
namespace wire {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  put_u32(out, static_cast<std::uint32_t>(bits));
  put_u32(out, static_cast<std::uint32_t>(bits >> 32));
}

void put_f32s(std::vector<std::uint8_t>& out, std::span<const float> values) {
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  std::memcpy(out.data() + start, values.data(), values.size() * 4);
}

void Reader::need(std::size_t n) const {
  if (bytes_.size() - pos_ < n) fail("truncated file");
}

void Reader::fail(const std::string& what) const {
  throw IoError(source_ + ": " + what + " (at byte " + std::to_string(pos_) + ")");
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() {
  const std::uint64_t lo = u32();
  const std::uint64_t hi = u32();
  return std::bit_cast<double>(lo | (hi << 32));
}

void Reader::f32s(std::span<float> out) {
  need(out.size() * 4);
  std::memcpy(out.data(), bytes_.data() + pos_, out.size() * 4);
  pos_ += out.size() * 4;
}

std::string Reader::bytes(std::size_t n) {
  need(n);
  std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
  pos_ += n;
  return s;
}

void Reader::expect_magic(const char (&magic)[5]) {
  if (bytes(4) != std::string(magic, 4)) fail(std::string("bad magic, expected ") + magic);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace wire

std::vector<std::uint8_t> encode_acof(const ParamBundle& bundle) {
  if (bundle.directions.empty() || bundle.directions.size() > 2) {
    throw ConfigError("an .acof bundle holds one or two warp directions");
  }
  const auto& first = bundle.directions.front();
  for (const auto& d : bundle.directions) {
    d.validate();
    if (d.kernel_size != first.kernel_size || d.dilation != first.dilation ||
        d.weights.shape() != first.weights.shape()) {
      throw ConfigError("both directions of an .acof bundle must share F, d and size");
    }
  }
  bundle.occlusion.validate();
  if (bundle.occlusion.height() != first.height() || bundle.occlusion.width() != first.width()) {
    throw ConfigError("occlusion map size does not match the warp parameters");
  }

  std::vector<std::uint8_t> out{'A', 'C', 'O', 'F'};
  wire::put_u32(out, bundle.directions.size() == 1 ? kAcofSingleDirection : kAcofTwoDirections);
  wire::put_u32(out, static_cast<std::uint32_t>(first.kernel_size));
  wire::put_u32(out, static_cast<std::uint32_t>(first.dilation));
  wire::put_u32(out, static_cast<std::uint32_t>(first.height()));
  wire::put_u32(out, static_cast<std::uint32_t>(first.width()));
  for (const auto& d : bundle.directions) {
    wire::put_f32s(out, d.weights.values());
    wire::put_f32s(out, d.alpha.values());
    wire::put_f32s(out, d.beta.values());
  }
  wire::put_f32s(out, bundle.occlusion.values.values());
  return out;
}

ParamBundle decode_acof(const std::vector<std::uint8_t>& bytes) {
  wire::Reader in(bytes, "acof");
  in.expect_magic("ACOF");
  const std::uint32_t version = in.u32();
  if (version != kAcofSingleDirection && version != kAcofTwoDirections) {
    in.fail("unsupported .acof version " + std::to_string(version));
  }
  const std::uint32_t f = in.u32();
  const std::uint32_t d = in.u32();
  const std::uint32_t h = in.u32();
  const std::uint32_t w = in.u32();
  if (f == 0 || h == 0 || w == 0 || f > 64 || h > 65536 || w > 65536) {
    in.fail("implausible header F=" + std::to_string(f) + " H=" + std::to_string(h) +
            " W=" + std::to_string(w));
  }
  const Shape taps_shape{std::size_t{f} * f, h, w};

  ParamBundle bundle;
  for (std::uint32_t dir = 0; dir < version; ++dir) {
    WarpParams<float> p;
    p.kernel_size = static_cast<int>(f);
    p.dilation = static_cast<int>(d);
    p.weights = Tensor(taps_shape);
    p.alpha = Tensor(taps_shape);
    p.beta = Tensor(taps_shape);
    in.f32s(p.weights.values());
    in.f32s(p.alpha.values());
    in.f32s(p.beta.values());
    p.validate();
    bundle.directions.push_back(std::move(p));
  }
  bundle.occlusion.values = Tensor({1, h, w});
  in.f32s(bundle.occlusion.values.values());
  bundle.occlusion.validate();
  if (!in.at_end()) in.fail("trailing bytes");
  return bundle;
}

void write_acof(const std::filesystem::path& path, const ParamBundle& bundle) {
  wire::write_file(path, encode_acof(bundle));
}

ParamBundle read_acof(const std::filesystem::path& path) {
  try {
    return decode_acof(wire::read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace adacof
