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

#include "adacof/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include <fmt/format.h>

#include "adacof/errors.hpp"
#include "adacof/image_io.hpp"
#include "adacof/parallel.hpp"
#include "adacof/sampler.hpp"
#include "adacof/warp_io.hpp"

namespace adacof {
namespace {

constexpr std::size_t kChannels = 3;
constexpr int kComponents = 6;
constexpr double kMinFrequency = 0.05;  // cycles per pixel
constexpr double kMaxFrequency = 0.3;

// Sum of random sinusoids on a side×side grid, rescaled into [lo, hi].
Tensor make_texture(std::size_t side, std::uint64_t seed, float lo, float hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> raw(kChannels * side * side, 0.0);
  const double two_pi = 2.0 * std::numbers::pi;

  // One shared layer keeps the channels correlated like natural images.
  auto add_layer = [&](std::size_t c_begin, std::size_t c_end, double gain) {
    for (int k = 0; k < kComponents; ++k) {
      const double f = kMinFrequency + (kMaxFrequency - kMinFrequency) * unit(rng);
      const double theta = two_pi * unit(rng);
      const double phase = two_pi * unit(rng);
      const double amp = gain * (0.5 + 0.5 * unit(rng));
      const double fy = f * std::sin(theta);
      const double fx = f * std::cos(theta);
      for (std::size_t c = c_begin; c < c_end; ++c) {
        double* plane = raw.data() + c * side * side;
        for (std::size_t y = 0; y < side; ++y) {
          for (std::size_t x = 0; x < side; ++x) {
            plane[y * side + x] +=
                amp * std::sin(two_pi * (fy * static_cast<double>(y) + fx * static_cast<double>(x)) +
                               phase);
          }
        }
      }
    }
  };
  add_layer(0, kChannels, 1.0);
  for (std::size_t c = 0; c < kChannels; ++c) add_layer(c, c + 1, 0.5);

  const auto [mn, mx] = std::minmax_element(raw.begin(), raw.end());
  const double span = std::max(*mx - *mn, 1e-12);
  Tensor out({kChannels, side, side});
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double u = (raw[i] - *mn) / span;
    out[i] = static_cast<float>(lo + (hi - lo) * u);
  }
  return out;
}

// Values land on the 1/255 grid so the PPM files reproduce the in-memory
// triplet exactly.
float quantized(float v) { return dequantize_byte(quantize_unit(v)); }

struct Sampled {
  const Tensor* grid;
  float pad;
  float operator()(std::size_t c, float y, float x) const {
    return bilinear_sample(grid->plane_view(c), y + pad, x + pad);
  }
};

bool inside(const Rect& r, double oy, double ox, double y, double x) {
  const double ly = y - (r.top + oy);
  const double lx = x - (r.left + ox);
  return ly >= 0.0 && ly < r.height && lx >= 0.0 && lx < r.width;
}

void check_size(std::size_t size) {
  if (size < 16) throw ConfigError(fmt::format("triplet size {} is below the minimum of 16", size));
}

Frame render(std::size_t size, const std::function<float(std::size_t, std::size_t, std::size_t)>& f) {
  Tensor t({kChannels, size, size});
  for (std::size_t c = 0; c < kChannels; ++c) {
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) t.at(c, y, x) = quantized(f(c, y, x));
    }
  }
  return Frame(std::move(t));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double max_motion(const MotionSpec& spec, std::size_t size) {
  switch (spec.kind) {
    case MotionKind::global_translation:
      return std::hypot(spec.dy, spec.dx);
    case MotionKind::rotation: {
      const double r = static_cast<double>(size - 1) / std::numbers::sqrt2;
      return 2.0 * std::abs(std::sin(spec.angle / 2.0)) * r;
    }
    case MotionKind::occluder:
      return std::max(std::hypot(spec.dy, spec.dx),
                      std::hypot(spec.background_dy, spec.background_dx));
  }
  return 0.0;
}

Triplet generate_triplet(const MotionSpec& spec, std::size_t size, std::uint64_t seed) {
  check_size(size);
  const double motion = max_motion(spec, size);
  if (!std::isfinite(motion) || motion > spec.max_displacement + 1e-12) {
    throw ConfigError(fmt::format("motion of {:.6g} px exceeds the configured maximum {:.6g}",
                                  motion, spec.max_displacement));
  }
  const std::uint64_t tex_seed = derive_seed(seed, spec.texture_seed);
  const auto pad = static_cast<std::size_t>(std::ceil(motion)) + 2;
  const Tensor background = make_texture(size + 2 * pad, tex_seed, 0.02F, 0.75F);
  const Sampled bg{&background, static_cast<float>(pad)};
  const auto n = static_cast<float>(size);

  Triplet out;
  Tensor flow({2, size, size});
  Tensor occ({1, size, size}, 0.5F);

  switch (spec.kind) {
    case MotionKind::global_translation: {
      const auto dy = static_cast<float>(spec.dy);
      const auto dx = static_cast<float>(spec.dx);
      auto frame_at = [&](float t) {
        return render(size, [&](std::size_t c, std::size_t y, std::size_t x) {
          return bg(c, static_cast<float>(y) - t * dy, static_cast<float>(x) - t * dx);
        });
      };
      out.first = frame_at(0.0F);
      out.middle = frame_at(0.5F);
      out.last = frame_at(1.0F);
      std::fill_n(flow.plane(0).begin(), size * size, dy / 2);
      std::fill_n(flow.plane(1).begin(), size * size, dx / 2);
      break;
    }
    case MotionKind::rotation: {
      const float cy = (n - 1) / 2;
      const float cx = cy;
      auto frame_at = [&](double t) {
        const auto cs = static_cast<float>(std::cos(-spec.angle * t));
        const auto sn = static_cast<float>(std::sin(-spec.angle * t));
        return render(size, [&, cs, sn](std::size_t c, std::size_t y, std::size_t x) {
          const float ry = static_cast<float>(y) - cy;
          const float rx = static_cast<float>(x) - cx;
          return bg(c, cs * ry - sn * rx + cy, sn * ry + cs * rx + cx);
        });
      };
      out.first = frame_at(0.0);
      out.middle = frame_at(0.5);
      out.last = frame_at(1.0);
      const double cs = std::cos(spec.angle / 2);
      const double sn = std::sin(spec.angle / 2);
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const double ry = static_cast<double>(y) - cy;
          const double rx = static_cast<double>(x) - cx;
          flow.at(0, y, x) = static_cast<float>(cs * ry - sn * rx - ry);
          flow.at(1, y, x) = static_cast<float>(sn * ry + cs * rx - rx);
        }
      }
      break;
    }
    case MotionKind::occluder: {
      const Rect& r = spec.occluder;
      if (!(r.height > 0 && r.width > 0)) throw ConfigError("occluder rectangle must be non-empty");
      const auto oside = static_cast<std::size_t>(std::ceil(std::max(r.height, r.width))) + 4;
      const Tensor fg_tex = make_texture(oside, derive_seed(tex_seed, 1), 0.7F, 0.95F);
      const Sampled fg{&fg_tex, 1.0F};
      auto frame_at = [&](double t) {
        const double oy = t * spec.dy;
        const double ox = t * spec.dx;
        const auto by = static_cast<float>(t * spec.background_dy);
        const auto bx = static_cast<float>(t * spec.background_dx);
        return render(size, [&](std::size_t c, std::size_t y, std::size_t x) {
          const auto yf = static_cast<double>(y);
          const auto xf = static_cast<double>(x);
          if (inside(r, oy, ox, yf, xf)) {
            return fg(c, static_cast<float>(yf - r.top - oy), static_cast<float>(xf - r.left - ox));
          }
          return bg(c, static_cast<float>(y) - by, static_cast<float>(x) - bx);
        });
      };
      out.first = frame_at(0.0);
      out.middle = frame_at(0.5);
      out.last = frame_at(1.0);
      const double hy = spec.dy / 2;
      const double hx = spec.dx / 2;
      const double bhy = spec.background_dy / 2;
      const double bhx = spec.background_dx / 2;
      for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
          const auto yf = static_cast<double>(y);
          const auto xf = static_cast<double>(x);
          if (inside(r, hy, hx, yf, xf)) {
            flow.at(0, y, x) = static_cast<float>(hy);
            flow.at(1, y, x) = static_cast<float>(hx);
            continue;
          }
          flow.at(0, y, x) = static_cast<float>(bhy);
          flow.at(1, y, x) = static_cast<float>(bhx);
          const bool in_first = !inside(r, 0.0, 0.0, yf - bhy, xf - bhx);
          const bool in_last = !inside(r, spec.dy, spec.dx, yf + bhy, xf + bhx);
          if (in_first && !in_last) occ.at(0, y, x) = 1.0F;
          if (in_last && !in_first) occ.at(0, y, x) = 0.0F;
        }
      }
      break;
    }
  }
  out.truth_flow = FlowMap<float>{std::move(flow)};
  out.truth_occlusion = OcclusionMap<float>{std::move(occ)};
  return out;
}

MotionSpec random_motion(std::uint64_t seed, std::size_t size, double max_displacement) {
  check_size(size);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto disk = [&](double radius, double& dy, double& dx) {
    const double rho = radius * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    dy = rho * std::sin(phi);
    dx = rho * std::cos(phi);
  };

  MotionSpec spec;
  spec.max_displacement = max_displacement;
  spec.texture_seed = rng();
  const double pick = unit(rng);
  const auto n = static_cast<double>(size);
  if (pick < 0.5) {
    spec.kind = MotionKind::global_translation;
    disk(max_displacement, spec.dy, spec.dx);
  } else if (pick < 0.75) {
    spec.kind = MotionKind::rotation;
    const double r = (n - 1) / std::numbers::sqrt2;
    const double limit = 2.0 * std::asin(std::min(1.0, max_displacement / (2.0 * r)));
    spec.angle = limit * (2.0 * unit(rng) - 1.0);
  } else {
    spec.kind = MotionKind::occluder;
    disk(max_displacement, spec.dy, spec.dx);
    disk(max_displacement / 2, spec.background_dy, spec.background_dx);
    spec.occluder.height = std::floor(n / 4 + unit(rng) * n / 4);
    spec.occluder.width = std::floor(n / 4 + unit(rng) * n / 4);
    spec.occluder.top = std::floor(unit(rng) * (n - spec.occluder.height));
    spec.occluder.left = std::floor(unit(rng) * (n - spec.occluder.width));
  }
  return spec;
}

namespace {

// Output pixel (y, x) reads source pixel map(y, x) in every plane.
template <typename Map>
Tensor remap(const Tensor& src, std::size_t side, Map map) {
  Tensor out({src.dim(0), side, side});
  for (std::size_t c = 0; c < src.dim(0); ++c) {
    for (std::size_t y = 0; y < side; ++y) {
      for (std::size_t x = 0; x < side; ++x) {
        const auto [sy, sx] = map(y, x);
        out.at(c, y, x) = src.at(c, sy, sx);
      }
    }
  }
  return out;
}

}  // namespace

Triplet augment(const Triplet& triplet, std::uint64_t seed, const AugmentOptions& options) {
  const std::size_t h = triplet.first.height();
  const std::size_t w = triplet.first.width();
  if (triplet.middle.pixels().shape() != triplet.first.pixels().shape() ||
      triplet.last.pixels().shape() != triplet.first.pixels().shape()) {
    throw ConfigError("triplet frames differ in shape");
  }
  const std::size_t crop = options.crop == 0 ? std::min(h, w) : options.crop;
  if (options.crop == 0 && h != w) throw ConfigError("full-frame augmentation needs square frames");
  if (crop > h || crop > w) {
    throw ConfigError(fmt::format("crop {} does not fit a {}x{} frame", crop, h, w));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t y0 = std::uniform_int_distribution<std::size_t>(0, h - crop)(rng);
  const std::size_t x0 = std::uniform_int_distribution<std::size_t>(0, w - crop)(rng);
  const bool hflip = unit(rng) < options.p_hflip;
  const bool vflip = unit(rng) < options.p_vflip;
  const bool swap = unit(rng) < options.p_swap;

  auto map = [&](std::size_t y, std::size_t x) {
    const std::size_t yy = vflip ? crop - 1 - y : y;
    const std::size_t xx = hflip ? crop - 1 - x : x;
    return std::pair{y0 + yy, x0 + xx};
  };
  auto frame = [&](const Frame& f) { return Frame(remap(f.pixels(), crop, map)); };

  Triplet out;
  out.first = frame(swap ? triplet.last : triplet.first);
  out.middle = frame(triplet.middle);
  out.last = frame(swap ? triplet.first : triplet.last);
  if (triplet.truth_flow) {
    Tensor f = remap(triplet.truth_flow->vectors, crop, map);
    const float sy = (vflip ? -1.0F : 1.0F) * (swap ? -1.0F : 1.0F);
    const float sx = (hflip ? -1.0F : 1.0F) * (swap ? -1.0F : 1.0F);
    for (float& v : f.plane(0)) v *= sy;
    for (float& v : f.plane(1)) v *= sx;
    out.truth_flow = FlowMap<float>{std::move(f)};
  }
  if (triplet.truth_occlusion) {
    Tensor v = remap(triplet.truth_occlusion->values, crop, map);
    if (swap) {
      for (float& e : v.values()) e = 1.0F - e;
    }
    out.truth_occlusion = OcclusionMap<float>{std::move(v)};
  }
  return out;
}

std::vector<Triplet> generate_dataset(std::size_t count, std::size_t size, double max_displacement,
                                      std::uint64_t seed) {
  check_size(size);
  std::vector<Triplet> out(count);
  parallel_for(0, count, [&](std::size_t i) {
    const MotionSpec spec = random_motion(derive_seed(seed, 2 * i), size, max_displacement);
    out[i] = generate_triplet(spec, size, derive_seed(seed, 2 * i + 1));
  });
  return out;
}

std::vector<Triplet> generate_translation_set(std::size_t count, std::size_t size,
                                              double max_displacement, std::uint64_t seed) {
  check_size(size);
  std::vector<Triplet> out(count);
  parallel_for(0, count, [&](std::size_t i) {
    std::mt19937_64 rng(derive_seed(seed, 2 * i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MotionSpec spec;
    spec.max_displacement = max_displacement;
    const double rho = max_displacement * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    spec.dy = rho * std::sin(phi);
    spec.dx = rho * std::cos(phi);
    spec.texture_seed = rng();
    out[i] = generate_triplet(spec, size, derive_seed(seed, 2 * i + 1));
  });
  return out;
}

// truth.acof holds an F = 1 warp whose offsets are the truth flow (applied to
// the last frame it reproduces the middle one) and the truth occlusion map.
void write_dataset(const std::filesystem::path& dir, const std::vector<Triplet>& triplets) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  std::string index;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const Triplet& t = triplets[i];
    const std::string name = fmt::format("{:04d}", i);
    const auto sub = dir / name;
    std::filesystem::create_directories(sub, ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", sub.string(), ec.message()));
    write_ppm(sub / "frame0.ppm", t.first);
    write_ppm(sub / "frame1.ppm", t.middle);
    write_ppm(sub / "frame2.ppm", t.last);
    if (t.truth_flow) {
      const std::size_t h = t.first.height();
      const std::size_t w = t.first.width();
      auto params = WarpParams<float>::identity(h, w);
      std::copy_n(t.truth_flow->vectors.plane(0).begin(), h * w, params.alpha.data());
      std::copy_n(t.truth_flow->vectors.plane(1).begin(), h * w, params.beta.data());
      ParamBundle bundle{{std::move(params)},
                         t.truth_occlusion ? *t.truth_occlusion
                                           : OcclusionMap<float>::filled(h, w, 0.5F)};
      write_acof(sub / "truth.acof", bundle);
    }
    index += name + "\n";
  }
  std::ofstream out(dir / "index.txt", std::ios::binary);
  out << index;
  if (!out) throw IoError(fmt::format("cannot write {}", (dir / "index.txt").string()));
}

std::vector<Triplet> read_dataset(const std::filesystem::path& dir) {
  const auto manifest = dir / "index.txt";
  std::ifstream in(manifest);
  if (!in) throw IoError(fmt::format("cannot open dataset manifest {}", manifest.string()));
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  std::vector<Triplet> out(names.size());
  parallel_for(0, names.size(), [&](std::size_t i) {
    const auto sub = dir / names[i];
    Triplet t;
    t.first = read_image(sub / "frame0.ppm");
    t.middle = read_image(sub / "frame1.ppm");
    t.last = read_image(sub / "frame2.ppm");
    if (t.middle.pixels().shape() != t.first.pixels().shape() ||
        t.last.pixels().shape() != t.first.pixels().shape()) {
      throw IoError(fmt::format("{}: frames differ in shape", sub.string()));
    }
    if (std::filesystem::exists(sub / "truth.acof")) {
      ParamBundle b = read_acof(sub / "truth.acof");
      if (b.directions.size() != 1 || b.directions[0].kernel_size != 1 ||
          b.directions[0].height() != t.first.height() ||
          b.directions[0].width() != t.first.width()) {
        throw IoError(fmt::format("{}: truth.acof does not describe an F = 1 flow of frame size",
                                  sub.string()));
      }
      const std::size_t hw = t.first.height() * t.first.width();
      Tensor flow({2, t.first.height(), t.first.width()});
      std::copy_n(b.directions[0].alpha.data(), hw, flow.plane(0).begin());
      std::copy_n(b.directions[0].beta.data(), hw, flow.plane(1).begin());
      t.truth_flow = FlowMap<float>{std::move(flow)};
      t.truth_occlusion = std::move(b.occlusion);
    }
    out[i] = std::move(t);
  });
  return out;
}

}  // namespace adacof
