//
// Copyright 2026 The NISS Simulator Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef NISS_TESTS_GRADIENT_CHECK_HPP_
#define NISS_TESTS_GRADIENT_CHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "niss/models.hpp"

namespace niss::testing {

struct GradientCheck {
  double worst_relative = 0.0;
  std::size_t coordinates = 0;  // probes compared
  std::size_t kinks = 0;        // probes redrawn because they straddled a ReLU kink
};

// Loss over the batch plus the sign pattern of every hidden pre-activation.
inline double loss_and_pattern(const ModelSpec& spec, const ModelVector& params, const Dataset& data,
                               std::span<const std::size_t> batch, std::vector<bool>& pattern) {
  const auto widths = spec.layer_widths();
  detail::Workspace ws;
  pattern.clear();
  double total = 0.0;
  for (std::size_t idx : batch) {
    const auto& logits = detail::forward(widths, params.data(), data.row(idx), ws);
    total += detail::log_partition(logits) - logits[data.labels[idx]];
    for (std::size_t l = 1; l + 1 < widths.size(); ++l) {
      for (double a : ws.activations[l]) pattern.push_back(a > 0.0);
    }
  }
  return total / static_cast<double>(batch.size());
}

// Central differences with step h on `count` random coordinates. The relative
// error of a coordinate is |g - fd| / max(|g|, |fd|), and 0 when both vanish.
// The loss is not differentiable where a hidden unit switches on or off, so a
// probe whose +h and -h evaluations disagree on any unit's state is redrawn.
inline GradientCheck check_gradient(const ModelSpec& spec, const ModelVector& params, const Dataset& data,
                                    std::span<const std::size_t> batch, std::size_t count, RngStream& rng,
                                    double h = 1e-5) {
  const auto analytic = forward_loss_grad(spec, params, data, batch).grad;
  ModelVector probe = params;
  std::vector<bool> up_pattern, down_pattern;
  GradientCheck out;
  while (out.coordinates < count) {
    const std::size_t j = rng.uniform_index(params.size());
    const double orig = probe[j];
    probe[j] = orig + h;
    const double up = loss_and_pattern(spec, probe, data, batch, up_pattern);
    probe[j] = orig - h;
    const double down = loss_and_pattern(spec, probe, data, batch, down_pattern);
    probe[j] = orig;
    if (up_pattern != down_pattern) {
      ++out.kinks;
      continue;
    }
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max(std::abs(analytic[j]), std::abs(fd));
    if (denom > 0.0) out.worst_relative = std::max(out.worst_relative, std::abs(analytic[j] - fd) / denom);
    ++out.coordinates;
  }
  return out;
}

}  // namespace niss::testing

#endif  // NISS_TESTS_GRADIENT_CHECK_HPP_
