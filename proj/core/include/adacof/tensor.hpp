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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adacof {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_volume(const Shape& shape);

// Read-only view of one H×W plane of a channel-outermost tensor.
template <typename T>
struct PlaneView {
  std::span<const T> values;
  std::size_t height = 0;
  std::size_t width = 0;

  T operator()(std::size_t y, std::size_t x) const { return values[y * width + x]; }
  bool empty() const { return height == 0 || width == 0; }
};

// Dense row-major array. Images are C×H×W with the channel axis outermost.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T{0});
  BasicTensor(Shape shape, std::vector<T> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }
  const std::vector<T>& storage() const noexcept { return values_; }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  // Rank-3 accessors (C×H×W).
  T& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * shape_[1] + y) * shape_[2] + x];
  }
  const T& at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * shape_[1] + y) * shape_[2] + x];
  }
  std::span<T> plane(std::size_t c);
  std::span<const T> plane(std::size_t c) const;
  PlaneView<T> plane_view(std::size_t c) const;

  // Same data, new extents; the volume must match.
  BasicTensor reshaped(Shape shape) const&;
  BasicTensor reshaped(Shape shape) &&;

  template <typename U>
  BasicTensor<U> cast() const {
    return BasicTensor<U>(shape_, std::vector<U>(values_.begin(), values_.end()));
  }

  bool all_finite() const;
  void fill(T value);

  BasicTensor& operator+=(const BasicTensor& other);
  BasicTensor& operator*=(T scale);

  friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

 private:
  Shape shape_;
  std::vector<T> values_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

template <typename T>
BasicTensor<T> zeros_like(const BasicTensor<T>& t) {
  return BasicTensor<T>(t.shape());
}

// Throws ConfigError unless the shapes are identical.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

// Largest absolute elementwise difference; shapes must match.
template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b);

// H×W×C image with every value in [0,1]; C is 1 or 3. Stored C×H×W.
class Frame {
 public:
  Frame() = default;
  explicit Frame(Tensor pixels);

  static Frame filled(std::size_t channels, std::size_t height, std::size_t width,
                      float value = 0.0F);

  std::size_t channels() const { return pixels_.dim(0); }
  std::size_t height() const { return pixels_.dim(1); }
  std::size_t width() const { return pixels_.dim(2); }
  bool empty() const { return pixels_.empty(); }

  const Tensor& pixels() const noexcept { return pixels_; }
  PlaneView<float> channel(std::size_t c) const { return pixels_.plane_view(c); }
  float at(std::size_t c, std::size_t y, std::size_t x) const { return pixels_.at(c, y, x); }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  Tensor pixels_;
};

// Clamp into [0,1] and wrap as a Frame (for network/warp outputs that may
// drift by rounding).
Frame to_frame(const Tensor& t);

}  // namespace adacof
