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

#include "adacof/synthnet.hpp"

namespace adacof {

struct AdamaxSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double u_floor = 1e-8;
};

// AdaMax: m <- b1*m + (1-b1)*g;  u <- max(b2*u, |g|);
//         theta <- theta - lr / (1 - b1^t) * m / max(u, floor).
template <typename T>
struct AdamaxState {
  AdamaxSettings settings;
  std::uint64_t step = 0;
  ParameterSet<T> m;  // first moment
  ParameterSet<T> u;  // exponentially weighted infinity norm, >= 0
};

template <typename T>
AdamaxState<T> make_adamax_state(const ParameterSet<T>& params, const AdamaxSettings& settings = {});

// Throws NumericError (naming the offending tensor) on a non-finite gradient;
// nothing is modified in that case.
template <typename T>
void adamax_step(AdamaxState<T>& state, ParameterSet<T>& params, const ParameterSet<T>& grads);

// Step decay: the rate halves every `halving_period` epochs (epochs count from 0).
struct LrSchedule {
  double initial_lr = 1e-3;
  int halving_period = 20;

  double lr_at(int epoch) const;
};

}  // namespace adacof
