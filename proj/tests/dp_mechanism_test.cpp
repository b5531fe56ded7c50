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

#include "niss/dp_mechanism.hpp"

#include <cmath>
#include <limits>

#include "gtest/gtest.h"

namespace niss {
namespace {

// Reference values evaluated with 30-digit arithmetic (mpmath):
//   sqrt(2 ln(1.25 / 1e-4))  = 4.34361230389877049667...
//   * 3 / 10                 = 1.30308369116963114900...
//   * 3 / 20                 = 0.65154184558481557450...
constexpr double kC1e4 = 4.34361230389877049667;
constexpr double kSigmaEps10 = 1.30308369116963114900;
constexpr double kSigmaEps20 = 0.65154184558481557450;

TEST(ComputeCTest, MatchesHighPrecisionReference) {
  EXPECT_NEAR(compute_c(1e-4), kC1e4, 1e-13);
  EXPECT_NEAR(compute_c(1e-4), 4.34361, 1e-5);
}

TEST(ComputeCTest, RejectsDeltaOutsideUnitInterval) {
  EXPECT_THROW(compute_c(1.25), ParameterError);
  EXPECT_THROW(compute_c(1.0), ParameterError);
  EXPECT_THROW(compute_c(0.0), ParameterError);
  EXPECT_THROW(compute_c(-0.1), ParameterError);
}

TEST(ComputeSigmaTest, PaperSettings) {
  const auto s = compute_sigma({10.0, 1e-4, 3.0});
  EXPECT_NEAR(s.sigma(), kSigmaEps10, 1e-13);
  EXPECT_EQ(s.sigma_sq(), s.sigma() * s.sigma());
}

TEST(ComputeSigmaTest, DoublingEpsilonHalvesSigma) {
  EXPECT_NEAR(compute_sigma({20.0, 1e-4, 3.0}).sigma(), kSigmaEps20, 1e-13);
}

TEST(ComputeSigmaTest, RejectsInvalidSpecs) {
  EXPECT_THROW(compute_sigma({10.0, 1e-4, 0.0}), ParameterError);
  EXPECT_THROW(compute_sigma({0.0, 1e-4, 3.0}), ParameterError);
  EXPECT_THROW(compute_sigma({10.0, 1.0, 3.0}), ParameterError);
}

TEST(ComputeSigmaTest, Monotonicity) {
  double prev = compute_sigma({0.1, 1e-4, 1.0}).sigma();
  for (double eps = 0.2; eps < 50; eps *= 1.7) {
    const double s = compute_sigma({eps, 1e-4, 1.0}).sigma();
    EXPECT_LT(s, prev);
    prev = s;
  }
  prev = 0.0;
  for (double df = 0.1; df < 50; df *= 1.7) {
    const double s = compute_sigma({1.0, 1e-4, df}).sigma();
    EXPECT_GT(s, prev);
    prev = s;
  }
  prev = 0.0;
  for (double delta = 0.5; delta > 1e-12; delta /= 3.0) {
    const double s = compute_sigma({1.0, delta, 1.0}).sigma();
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(ComputeSigmaTest, ScaleConsistency) {
  for (double eps : {0.3, 1.0, 10.0, 123.0}) {
    for (double delta : {1e-2, 1e-4, 1e-9}) {
      for (double df : {0.5, 3.0, 17.0}) {
        const double back = compute_sigma({eps, delta, df}).sigma() * eps / df;
        // Two roundings separate the two routes.
        EXPECT_NEAR(back, compute_c(delta), 4 * std::numeric_limits<double>::epsilon() * compute_c(delta));
      }
    }
  }
}

TEST(GenerateDpNoiseTest, ZeroScaleGivesZeros) {
  RngStream rng(1, {"dp"});
  EXPECT_EQ(generate_dp_noise(NoiseScale::from_sigma(0.0), 4, rng), ModelVector(4, 0.0));
}

TEST(GenerateDpNoiseTest, SampleVariance) {
  RngStream rng(2, {"dp"});
  const auto n = generate_dp_noise(NoiseScale::from_sigma(0.1), 1'000'000, rng);
  RunningStats s;
  for (double x : n) s.add(x);
  EXPECT_NEAR(s.variance(), 0.01, 0.02 * 0.01);
}

TEST(GenerateDpNoiseTest, DeterministicPerLabel) {
  RngStream a(3, {"dp", 4, 5});
  RngStream b(3, {"dp", 4, 5});
  const auto scale = NoiseScale::from_sigma(1.3);
  EXPECT_EQ(generate_dp_noise(scale, 100, a), generate_dp_noise(scale, 100, b));
}

// The sum of v independent N(0, s^2) draws has variance v s^2; this is what
// lets a client's noise be emitted as v unit shares.
TEST(GenerateDpNoiseTest, SumOfSharesHasSummedVariance) {
  const std::size_t v = 25, dim = 40'000;
  const double unit = 0.04;
  RngStream rng(6, {"dp"});
  ModelVector acc(dim, 0.0);
  for (std::size_t i = 0; i < v; ++i) acc += generate_dp_noise(NoiseScale::from_sigma(std::sqrt(unit)), dim, rng);
  RunningStats s;
  for (double x : acc) s.add(x);
  const double expected = v * unit;
  EXPECT_NEAR(s.variance(), expected, 3 * std::sqrt(2.0 / dim) * expected);
}

}  // namespace
}  // namespace niss
