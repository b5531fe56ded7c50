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

#ifndef NISS_ANALYSIS_HPP_
#define NISS_ANALYSIS_HPP_

// Closed-form noise variances of the share exchange and the Monte Carlo
// harnesses that check them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "niss/errors.hpp"
#include "niss/niss_protocol.hpp"
#include "niss/numerics.hpp"

namespace niss {

// Server-side aggregate noise variance per dimension: sum_k sigma_k^2 tau_k^2.
inline double theoretical_aggregate_variance(std::span<const double> sigmas_sq,
                                             std::span<const double> taus_sq) {
  if (sigmas_sq.size() != taus_sq.size()) throw ShapeError("sigma and tau lists differ in length");
  double v = 0.0;
  for (std::size_t k = 0; k < sigmas_sq.size(); ++k) v += sigmas_sq[k] * taus_sq[k];
  return v;
}

// Same quantity from share configurations, using the effective v_k sigma^2.
inline double theoretical_aggregate_variance(std::span<const ShareConfig> clients) {
  double v = 0.0;
  for (const auto& c : clients) v += effective_sigma_sq(c) * c.tau_sq;
  return v;
}

// Smallest distortion variance keeping the attacker-view variance at or above
// sigma_k^2 when a fraction rho of the neighbors collude: max(2 rho - 1, 0).
inline double min_tau_sq(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
  return std::max(2.0 * rho - 1.0, 0.0);
}

struct CollusionScenario {
  double rho = 0.0;
  double tau_sq = 0.0;
  double client_sigma_sq = 1.0;

  void validate() const {
    if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
    if (!(tau_sq >= 0.0)) throw ParameterError("tau_sq must be nonnegative");
    if (!(client_sigma_sq > 0.0)) throw ParameterError("client_sigma_sq must be positive");
  }
};

// Variance of the target's upload noise after the attacker removes what the
// colluders reveal: (1 - rho)(tau^2 + 2) sigma_k^2 + tau^2 rho sigma_k^2.
inline double attacker_effective_variance(const CollusionScenario& sc) {
  sc.validate();
  return (1.0 - sc.rho) * (sc.tau_sq + 2.0) * sc.client_sigma_sq +
         sc.tau_sq * sc.rho * sc.client_sigma_sq;
}

// ---------------------------------------------------------------------------
// Monte Carlo

inline constexpr std::size_t kMinMonteCarloTrials = 1000;

struct VarianceEstimate {
  double variance = 0.0;        // pooled over dimensions and trials
  double standard_error = 0.0;  // of `variance`, from per-trial spread
  std::size_t trials = 0;
  std::size_t samples = 0;      // trials * dim
};

namespace detail {

// Accumulates one trial's vector into the pooled estimate. The standard error
// treats each trial's mean square as one independent observation, which stays
// valid when coordinates within a trial are correlated.
class PooledVariance {
 public:
  void add_trial(const ModelVector& values) {
    double sq = 0.0;
    for (double x : values) {
      pooled_.add(x);
      sq += x * x;
    }
    per_trial_.add(sq / static_cast<double>(values.size()));
  }

  VarianceEstimate result() const {
    VarianceEstimate e;
    e.variance = pooled_.variance();
    e.trials = per_trial_.count();
    e.samples = pooled_.count();
    e.standard_error = e.trials > 1 ? std::sqrt(per_trial_.variance() / static_cast<double>(e.trials)) : 0.0;
    return e;
  }

 private:
  RunningStats pooled_;
  RunningStats per_trial_;
};

}  // namespace detail

struct ExchangeSetup {
  std::vector<ShareConfig> clients;  // client k gets id k
  std::size_t dim = 1;
  DistortionMode distortion = DistortionMode::kPerShare;
  std::size_t workers = 1;
};

// Runs `trials` independent exchanges (no training, zero model) and returns
// the pooled per-dimension variance of the server-side summed perturbation.
inline VarianceEstimate empirical_aggregate_variance(const ExchangeSetup& setup, std::size_t trials,
                                                     std::uint64_t master_seed) {
  if (trials < kMinMonteCarloTrials) throw ParameterError("at least 1000 trials required");
  if (setup.clients.size() < 2) throw ProtocolError("share exchange needs at least two clients");
  std::vector<ExchangeParticipant> participants;
  for (std::size_t k = 0; k < setup.clients.size(); ++k) {
    participants.push_back({static_cast<ClientId>(k), setup.clients[k]});
  }
  ExchangeOptions options{setup.dim, 0, setup.distortion, setup.workers};
  detail::PooledVariance pooled;
  for (std::size_t t = 0; t < trials; ++t) {
    options.round = t;
    pooled.add_trial(run_share_exchange(participants, options, master_seed).aggregate_noise());
  }
  return pooled.result();
}

struct CollusionSetup {
  double unit_sigma_sq = 0.01;
  double tau_sq = 0.0;
  std::size_t shares = 100;  // v; the target has exactly v distinct neighbors
  std::size_t dim = 1;
  DistortionMode distortion = DistortionMode::kPerShare;

  double client_sigma_sq() const { return static_cast<double>(shares) * unit_sigma_sq; }
};

// Attacker-view residual of one target client's upload noise.
//
// The target (id 0) has v distinct neighbors (ids 1..v). With each neighbor
// u_i it sends -n_i and receives r_i, which it scales by its own s_i. In each
// trial round(rho * v) neighbors chosen uniformly collude: they reveal n_i
// (they received its negation) and r_i (they sent it). The attacker then
// knows n_i exactly and r_i as a constant, so it subtracts n_i + r_i, leaving
// (s_i - 1) r_i for colluders and n_i + s_i r_i for honest neighbors.
inline VarianceEstimate simulate_collusion(const CollusionSetup& setup, double rho, std::size_t trials,
                                           std::uint64_t master_seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
  if (trials < kMinMonteCarloTrials) throw ParameterError("at least 1000 trials required");
  if (setup.shares == 0) throw ParameterError("share count must be at least 1");
  const std::size_t v = setup.shares;
  const ShareConfig target_cfg{setup.unit_sigma_sq, setup.tau_sq, setup.client_sigma_sq()};
  const ShareConfig peer_cfg{setup.unit_sigma_sq, 0.0, setup.unit_sigma_sq};
  const auto colluding = static_cast<std::size_t>(std::llround(rho * static_cast<double>(v)));

  std::vector<ClientId> ids(v + 1);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  const TrackerState tracker(ids);
  constexpr ClientId kTarget = 0;

  detail::PooledVariance pooled;
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream base(master_seed, StreamLabel{"collusion/neighbors", kTarget, t, 0});
    const auto neighbors = select_neighbors(tracker, kTarget, v, base);

    // Mark colluders among the neighbor slots.
    std::vector<std::size_t> slots(v);
    std::iota(slots.begin(), slots.end(), std::size_t{0});
    RngStream mark = base.derive("collusion/mark", kTarget, t);
    mark.shuffle(std::span<std::size_t>(slots));
    std::vector<bool> is_colluder(v, false);
    for (std::size_t j = 0; j < colluding; ++j) is_colluder[slots[j]] = true;

    RngStream own_rng = base.derive("collusion/own", kTarget, t);
    const auto own = generate_shares(v, target_cfg, setup.dim, own_rng);
    RngStream distort_rng = base.derive("collusion/distort", kTarget, t);

    ModelVector residual(setup.dim, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
      RngStream peer_rng = base.derive("collusion/peer", neighbors[i], t, i);
      const auto peer_share = generate_shares(1, peer_cfg, setup.dim, peer_rng);
      const NoiseShare received{neighbors[i], kTarget, t, static_cast<std::uint32_t>(i),
                                negate(peer_share.front()), true};
      const ModelVector distorted = distort_share(received, setup.tau_sq, distort_rng, setup.distortion);
      residual += distorted;
      if (is_colluder[i]) {
        residual -= received.payload;  // r_i revealed; n_i revealed and never added
      } else {
        residual += own[i];
      }
    }
    pooled.add_trial(residual);
  }
  return pooled.result();
}

}  // namespace niss

#endif  // NISS_ANALYSIS_HPP_
