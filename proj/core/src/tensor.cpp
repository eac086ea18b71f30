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

#include "adacof/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "adacof/errors.hpp"

namespace adacof {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ConfigError(std::string(what) + ": shape mismatch " + shape_to_string(a) + " vs " +
                      shape_to_string(b));
  }
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), values_(shape_volume(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_volume(shape_) != values_.size()) {
    throw ConfigError("tensor extents " + shape_to_string(shape_) + " do not match " +
                      std::to_string(values_.size()) + " values");
  }
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ConfigError("axis " + std::to_string(axis) + " out of range for " +
                      shape_to_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
std::span<T> BasicTensor<T>::plane(std::size_t c) {
  const std::size_t n = shape_[1] * shape_[2];
  return std::span<T>(values_).subspan(c * n, n);
}

template <typename T>
std::span<const T> BasicTensor<T>::plane(std::size_t c) const {
  const std::size_t n = shape_[1] * shape_[2];
  return std::span<const T>(values_).subspan(c * n, n);
}

template <typename T>
PlaneView<T> BasicTensor<T>::plane_view(std::size_t c) const {
  return PlaneView<T>{plane(c), shape_[1], shape_[2]};
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const& {
  return BasicTensor(std::move(shape), values_);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) && {
  return BasicTensor(std::move(shape), std::move(values_));
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(values_.begin(), values_.end(), value);
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::operator+=(const BasicTensor& other) {
  require_same_shape(shape_, other.shape_, "tensor +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

template <typename T>
BasicTensor<T>& BasicTensor<T>::operator*=(T scale) {
  for (auto& v : values_) v *= scale;
  return *this;
}

template <typename T>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  return worst;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template double max_abs_diff(const BasicTensor<float>&, const BasicTensor<float>&);
template double max_abs_diff(const BasicTensor<double>&, const BasicTensor<double>&);

Frame::Frame(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rank() != 3) {
    throw ConfigError("frame must be C×H×W, got " + shape_to_string(pixels_.shape()));
  }
  const auto c = pixels_.dim(0);
  if (c != 1 && c != 3) {
    throw ConfigError("frame must have 1 or 3 channels, got " + std::to_string(c));
  }
  if (pixels_.dim(1) == 0 || pixels_.dim(2) == 0) throw ConfigError("frame is empty");
  for (float v : pixels_.values()) {
    if (!(v >= 0.0F && v <= 1.0F)) {
      throw ConfigError("frame value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

Frame Frame::filled(std::size_t channels, std::size_t height, std::size_t width, float value) {
  return Frame(Tensor({channels, height, width}, value));
}

Frame to_frame(const Tensor& t) {
  Tensor clamped = t;
  for (auto& v : clamped.values()) {
    if (!std::isfinite(v)) throw NumericError("non-finite value while building a frame");
    v = std::clamp(v, 0.0F, 1.0F);
  }
  return Frame(std::move(clamped));
}

}  // namespace adacof
