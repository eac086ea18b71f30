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

#include <utility>

#include "adacof/tensor.hpp"

// Differentiable building blocks for the synthesis network. Every forward
// function has a matching *_vjp taking the upstream gradient (same shape as
// the forward output) and returning gradients for its inputs. All tensors are
// single samples laid out C×H×W.
namespace adacof::nn {

// Stride-1 convolution with zero "same" padding. weight is O×C×K×K (K odd),
// bias has O entries.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias);

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;  // empty unless requested
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_vjp(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                          const BasicTensor<T>& upstream, bool need_input_grad = true);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x);
// `x` is the pre-activation.
template <typename T>
BasicTensor<T> relu_vjp(const BasicTensor<T>& x, const BasicTensor<T>& upstream);

// 2×2 average pooling, stride 2. Odd trailing rows/columns are dropped.
template <typename T>
BasicTensor<T> avg_pool2(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> avg_pool2_vjp(const Shape& input_shape, const BasicTensor<T>& upstream);

// ×2 bilinear upsampling with half-pixel centers and edge clamping.
template <typename T>
BasicTensor<T> upsample2(const BasicTensor<T>& x);
template <typename T>
BasicTensor<T> upsample2_vjp(const Shape& input_shape, const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);
// Splits a gradient on concat(a, b) back into (grad_a, grad_b).
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& g,
                                                         std::size_t first_channels);

// Softmax across the channel axis, independently at every pixel.
template <typename T>
BasicTensor<T> softmax_channels(const BasicTensor<T>& logits);
// `y` is the softmax output.
template <typename T>
BasicTensor<T> softmax_channels_vjp(const BasicTensor<T>& y, const BasicTensor<T>& upstream);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& x);
// `y` is the sigmoid output.
template <typename T>
BasicTensor<T> sigmoid_vjp(const BasicTensor<T>& y, const BasicTensor<T>& upstream);

}  // namespace adacof::nn
