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

#ifndef NISS_DP_MECHANISM_HPP_
#define NISS_DP_MECHANISM_HPP_

#include <cmath>
#include <cstddef>

#include "niss/errors.hpp"
#include "niss/numerics.hpp"

namespace niss {

// (epsilon, delta) budget of one client plus the L2 sensitivity of the
// released quantity. The Gaussian-mechanism guarantee is proven for
// epsilon < 1, but any positive epsilon is accepted.
struct PrivacySpec {
  double epsilon = 10.0;
  double delta = 1e-4;
  double sensitivity = 3.0;

  void validate() const {
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
    if (!(sensitivity > 0.0)) throw ParameterError("sensitivity must be positive");
  }
};

// Per-dimension standard deviation of the client's Gaussian noise.
class NoiseScale {
 public:
  NoiseScale() = default;
  static NoiseScale from_sigma(double sigma) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ParameterError("sigma must be finite and >= 0");
    return NoiseScale(sigma);
  }

  double sigma() const noexcept { return sigma_; }
  double sigma_sq() const noexcept { return sigma_sq_; }

 private:
  explicit NoiseScale(double sigma) : sigma_(sigma), sigma_sq_(sigma * sigma) {}

  double sigma_ = 0.0;
  double sigma_sq_ = 0.0;
};

// Smallest admissible calibration constant, c = sqrt(2 ln(1.25 / delta)).
inline double compute_c(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ParameterError("delta must lie in (0, 1)");
  return std::sqrt(2.0 * std::log(1.25 / delta));
}

// Minimal Gaussian-mechanism scale sigma = c * sensitivity / epsilon.
inline NoiseScale compute_sigma(const PrivacySpec& spec) {
  spec.validate();
  return NoiseScale::from_sigma(compute_c(spec.delta) * spec.sensitivity / spec.epsilon);
}

inline ModelVector generate_dp_noise(const NoiseScale& scale, std::size_t dim, RngStream& rng) {
  return sample_gaussian(dim, 0.0, scale.sigma_sq(), rng);
}

}  // namespace niss

#endif  // NISS_DP_MECHANISM_HPP_
