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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adacof {

// Central finite differences in double precision against the analytic VJPs.
enum class GradcheckModule { adacof, network, losses };

std::string_view to_string(GradcheckModule module);
std::optional<GradcheckModule> parse_gradcheck_module(std::string_view name);

struct GradcheckBlock {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t entries = 0;
};

struct GradcheckReport {
  GradcheckModule module = GradcheckModule::adacof;
  double threshold = 0.0;
  std::vector<GradcheckBlock> blocks;

  double max_rel_error() const;
  bool passed() const { return max_rel_error() < threshold; }
};

// Pass thresholds: 1e-4 for the operator and the losses, 1e-3 end to end.
double gradcheck_threshold(GradcheckModule module);

// Per entry |a - n| / max(|a|, |n|, floor), maximized over the block.
double relative_error(double analytic, double numeric, double floor);

GradcheckReport run_gradcheck(GradcheckModule module, std::uint64_t seed);

}  // namespace adacof
