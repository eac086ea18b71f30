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

#include "adacof/optim.hpp"

#include <algorithm>
#include <cmath>

#include "adacof/errors.hpp"

namespace adacof {

template <typename T>
AdamaxState<T> make_adamax_state(const ParameterSet<T>& params, const AdamaxSettings& settings) {
  if (!(settings.lr >= 0.0) || !(settings.beta1 >= 0.0 && settings.beta1 < 1.0) ||
      !(settings.beta2 >= 0.0 && settings.beta2 < 1.0) || !(settings.u_floor > 0.0)) {
    throw ConfigError("invalid AdaMax settings");
  }
  return AdamaxState<T>{settings, 0, params.zeros_like(), params.zeros_like()};
}

template <typename T>
void adamax_step(AdamaxState<T>& state, ParameterSet<T>& params, const ParameterSet<T>& grads) {
  if (!params.congruent_with(grads) || !params.congruent_with(state.m) ||
      !params.congruent_with(state.u)) {
    throw ConfigError("adamax_step: parameters, gradients and state are not congruent");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!grads[i].value.all_finite()) {
      throw NumericError("adamax_step: non-finite gradient in '" + grads[i].name + "' at step " +
                         std::to_string(state.step + 1));
    }
  }

  const auto& s = state.settings;
  ++state.step;
  const double bias_correction = 1.0 - std::pow(s.beta1, static_cast<double>(state.step));
  const double step_size = s.lr / bias_correction;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& theta = params.mutable_value(i);
    auto& m = state.m.mutable_value(i);
    auto& u = state.u.mutable_value(i);
    const auto& g = grads[i].value;
    for (std::size_t e = 0; e < theta.size(); ++e) {
      const double gd = static_cast<double>(g[e]);
      const double md = s.beta1 * static_cast<double>(m[e]) + (1.0 - s.beta1) * gd;
      const double ud = std::max(s.beta2 * static_cast<double>(u[e]), std::abs(gd));
      m[e] = static_cast<T>(md);
      u[e] = static_cast<T>(ud);
      theta[e] = static_cast<T>(static_cast<double>(theta[e]) - step_size * md / std::max(ud, s.u_floor));
    }
  }
}

double LrSchedule::lr_at(int epoch) const {
  if (halving_period <= 0) throw ConfigError("LR halving period must be positive");
  if (epoch < 0) throw ConfigError("epoch must be nonnegative");
  return initial_lr * std::pow(0.5, epoch / halving_period);
}

template AdamaxState<float> make_adamax_state(const ParameterSet<float>&, const AdamaxSettings&);
template AdamaxState<double> make_adamax_state(const ParameterSet<double>&, const AdamaxSettings&);
template void adamax_step(AdamaxState<float>&, ParameterSet<float>&, const ParameterSet<float>&);
template void adamax_step(AdamaxState<double>&, ParameterSet<double>&, const ParameterSet<double>&);

}  // namespace adacof
