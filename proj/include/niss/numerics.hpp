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

#ifndef NISS_NUMERICS_HPP_
#define NISS_NUMERICS_HPP_

// Vector arithmetic, labeled random streams, Gaussian sampling and L2
// clipping. Everything else in the library is built on these.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "niss/errors.hpp"

namespace niss {

// A dense h-dimensional real vector: model parameters, updates and noise all
// travel as ModelVector. Element access is unchecked; arithmetic checks shape.
class ModelVector {
 public:
  ModelVector() = default;
  explicit ModelVector(std::size_t dim, double fill = 0.0) : values_(dim, fill) {}
  ModelVector(std::initializer_list<double> values) : values_(values) {}
  explicit ModelVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  ModelVector& operator+=(const ModelVector& other) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }

  ModelVector& operator-=(const ModelVector& other) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }

  ModelVector& operator*=(double factor) noexcept {
    for (double& x : values_) x *= factor;
    return *this;
  }

  // axpy: *this += factor * other
  ModelVector& add_scaled(const ModelVector& other, double factor) {
    check_same_size(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * other.values_[i];
    return *this;
  }

  friend bool operator==(const ModelVector&, const ModelVector&) = default;

 private:
  void check_same_size(const ModelVector& other) const {
    if (other.size() != size()) {
      throw ShapeError("vector length mismatch: " + std::to_string(size()) +
                       " vs " + std::to_string(other.size()));
    }
  }

  std::vector<double> values_;
};

inline ModelVector add(ModelVector a, const ModelVector& b) {
  a += b;
  return a;
}

inline ModelVector subtract(ModelVector a, const ModelVector& b) {
  a -= b;
  return a;
}

inline ModelVector scale(ModelVector v, double factor) {
  v *= factor;
  return v;
}

inline ModelVector negate(ModelVector v) { return scale(std::move(v), -1.0); }

inline double dot(const ModelVector& a, const ModelVector& b) {
  if (a.size() != b.size()) throw ShapeError("dot: vector length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(const ModelVector& v) { return std::sqrt(dot(v, v)); }

inline bool all_finite(const ModelVector& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Element-wise sum in sequence order. Throws ShapeError on an empty input or
// a length mismatch.
inline ModelVector sum(std::span<const ModelVector> vectors) {
  if (vectors.empty()) throw ShapeError("sum of an empty vector sequence");
  ModelVector acc = vectors.front();
  for (std::size_t i = 1; i < vectors.size(); ++i) acc += vectors[i];
  return acc;
}

// Rescales v onto the L2 ball of radius `threshold`. Vectors already inside
// the ball (including zero) are returned untouched.
inline ModelVector clip_l2(ModelVector v, double threshold) {
  if (!(threshold > 0.0)) throw ParameterError("clip threshold must be positive");
  const double norm = l2_norm(v);
  if (norm <= threshold) return v;
  v *= threshold / norm;
  // Rounding in the division can leave the norm one ulp above threshold.
  while (l2_norm(v) > threshold) v *= std::nextafter(1.0, 0.0);
  return v;
}

// ---------------------------------------------------------------------------
// Random streams

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// xoshiro256** (Blackman and Vigna). Seeding costs four splitmix64 steps,
// which matters because a stream is created per noise share.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept {
    for (auto& word : state_) {
      seed += 0x9E3779B97F4A7C15ULL;
      word = splitmix64(seed);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
};

}  // namespace detail

// Identifies one independent stream: what it is used for, by whom, when.
// `index` distinguishes several streams of the same purpose within a round
// (for example one per noise share).
struct StreamLabel {
  std::string_view purpose;
  std::uint64_t client = 0;
  std::uint64_t round = 0;
  std::uint64_t index = 0;
};

// Derives the child seed of a label by chaining the label fields through
// splitmix64 keyed with the master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, const StreamLabel& label) noexcept {
  std::uint64_t h = detail::splitmix64(master_seed ^ 0x6E6973735F726E67ULL);
  h = detail::splitmix64(h ^ detail::fnv1a64(label.purpose));
  h = detail::splitmix64(h ^ label.client);
  h = detail::splitmix64(h ^ (label.round * 0xD1B54A32D192ED03ULL));
  h = detail::splitmix64(h ^ (label.index * 0xABC98388FB8FAC03ULL));
  return h;
}

// A deterministic random stream owned by one worker. The sequence depends only
// on (master_seed, label); the sampling routines below are implemented here
// rather than through <random> distributions, whose output differs between
// standard library implementations.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, const StreamLabel& label)
      : master_seed_(master_seed), engine_(derive_seed(master_seed, label)) {}

  // A sibling stream under the same master seed.
  RngStream derive(std::string_view purpose, std::uint64_t client = 0,
                   std::uint64_t round = 0, std::uint64_t index = 0) const {
    return RngStream(master_seed_, StreamLabel{purpose, client, round, index});
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ParameterError("uniform_index over an empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Standard normal via the Marsaglia polar method.
  double standard_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t master_seed_;
  detail::Xoshiro256 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// dim i.i.d. draws from N(mean, variance). Zero variance yields the constant
// vector without consuming randomness.
inline ModelVector sample_gaussian(std::size_t dim, double mean, double variance, RngStream& rng) {
  if (!(variance >= 0.0)) throw ParameterError("variance must be nonnegative");
  if (dim == 0) throw ParameterError("dimension must be at least 1");
  ModelVector out(dim, mean);
  if (variance == 0.0) return out;
  const double stddev = std::sqrt(variance);
  for (double& x : out) x += stddev * rng.standard_normal();
  return out;
}

// Running mean/variance (Welford) used by the Monte Carlo harnesses.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  // Unbiased sample variance; zero for fewer than two samples.
  double variance() const noexcept {
    return count_ < 2 ? 0.0 : m2_ / static_cast<double>(count_ - 1);
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace niss

#endif  // NISS_NUMERICS_HPP_
