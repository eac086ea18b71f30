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

#include "adacof/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "adacof/errors.hpp"

namespace adacof {
namespace {

class HeaderReader {
 public:
  HeaderReader(const std::vector<std::uint8_t>& bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned read_uint() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail("expected a number");
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1u << 24) fail("header value too large");
      ++pos_;
    }
    return static_cast<unsigned>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void consume_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
    ++pos_;
  }

  std::size_t position() const { return pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw IoError(source_ + ": " + what);
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  const std::string& source_;
  std::size_t pos_ = 2;
};

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::uint8_t quantize_unit(float value) {
  const double scaled = std::floor(static_cast<double>(value) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

float dequantize_byte(std::uint8_t byte) { return static_cast<float>(byte) / 255.0F; }

std::vector<std::uint8_t> encode_pnm(const Frame& frame) {
  const std::size_t c = frame.channels();
  const std::size_t h = frame.height();
  const std::size_t w = frame.width();
  const std::string header =
      std::string(c == 3 ? "P6" : "P5") + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + c * h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) bytes.push_back(quantize_unit(frame.at(k, y, x)));
    }
  }
  return bytes;
}

Frame decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw IoError(source + ": not a binary PPM/PGM file");
  }
  const std::size_t c = bytes[1] == '6' ? 3 : 1;
  HeaderReader header(bytes, source);
  const unsigned w = header.read_uint();
  const unsigned h = header.read_uint();
  const unsigned maxval = header.read_uint();
  if (w == 0 || h == 0) header.fail("zero image dimension");
  if (maxval != 255) header.fail("only maxval 255 is supported, got " + std::to_string(maxval));
  header.consume_single_whitespace();
  const std::size_t start = header.position();
  const std::size_t expected = c * std::size_t{h} * w;
  if (bytes.size() - start < expected) header.fail("truncated raster");

  Tensor pixels({c, h, w});
  std::size_t p = start;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) pixels.at(k, y, x) = dequantize_byte(bytes[p++]);
    }
  }
  return Frame(std::move(pixels));
}

void write_ppm(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels() != 3) throw ConfigError("PPM output needs a 3-channel frame");
  write_all(path, encode_pnm(frame));
}

void write_pgm(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels() != 1) throw ConfigError("PGM output needs a single-channel frame");
  write_all(path, encode_pnm(frame));
}

void write_image(const std::filesystem::path& path, const Frame& frame) {
  write_all(path, encode_pnm(frame));
}

Frame read_image(const std::filesystem::path& path) {
  return decode_pnm(read_all(path), path.string());
}

Frame read_ppm(const std::filesystem::path& path) {
  Frame f = read_image(path);
  if (f.channels() != 3) throw IoError(path.string() + ": expected a P6 file");
  return f;
}

Frame read_pgm(const std::filesystem::path& path) {
  Frame f = read_image(path);
  if (f.channels() != 1) throw IoError(path.string() + ": expected a P5 file");
  return f;
}

}  // namespace adacof
