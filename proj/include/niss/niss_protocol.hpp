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

#ifndef NISS_NISS_PROTOCOL_HPP_
#define NISS_NISS_PROTOCOL_HPP_

// Noise-share exchange between clients.
//
// A client whose Gaussian-mechanism noise has variance sigma_k^2 splits it
// into v = ceil(sigma_k^2 / sigma^2) shares, each N(0, sigma^2 I_h) where
// sigma^2 is the unit variance shared by all clients. Each share is negated
// and sent to a random peer chosen by the tracker. A receiver multiplies every
// negated share it receives by a scalar s ~ N(1, tau^2) of its own choosing and
// adds it to its upload. The client's upload noise is therefore
//
//   n~ = sum_i n_i + sum_j s_j r_j,
//
// and in the server's sum every share n_i meets its negation scaled by
// (1 - s), leaving per-dimension variance sum_k v_k sigma^2 tau^2 when every
// receiver uses the same tau^2 (zero when tau^2 = 0).
//
// Shares are unit variance, not sigma_k^2 / v: only that reading makes the
// aggregate variance come out to sum_k sigma_k^2 tau_k^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "niss/errors.hpp"
#include "niss/numerics.hpp"
#include "niss/parallel.hpp"

namespace niss {

using ClientId = std::uint32_t;

struct ShareConfig {
  double unit_sigma_sq = 0.01;    // sigma^2, common to all clients
  double tau_sq = 0.0;            // distortion variance of this client
  double client_sigma_sq = 1.0;   // sigma_k^2 from the Gaussian mechanism

  void validate() const {
    if (!(unit_sigma_sq > 0.0)) throw ParameterError("unit_sigma_sq must be positive");
    if (!(client_sigma_sq > 0.0)) throw ParameterError("client_sigma_sq must be positive");
    if (!(tau_sq >= 0.0)) throw ParameterError("tau_sq must be nonnegative");
    if (unit_sigma_sq > client_sigma_sq) {
      throw ParameterError("unit_sigma_sq must not exceed client_sigma_sq");
    }
  }
};

// How the receiver's distortion factor is drawn.
enum class DistortionMode {
  kPerShare,      // one scalar s per received share, applied to all dimensions
  kPerDimension,  // an independent s for every coordinate
};

struct NoiseShare {
  ClientId sender = 0;
  ClientId receiver = 0;
  std::uint64_t round = 0;
  std::uint32_t index = 0;  // position among the sender's shares this round
  ModelVector payload;
  bool negated = false;
};

// v = ceil(sigma_k^2 / sigma^2). Ratios within 1e-9 relative of an integer are
// taken as that integer so that e.g. 0.07 / 0.01 yields 7, not 8.
inline std::size_t share_count(const ShareConfig& cfg) {
  cfg.validate();
  const double ratio = cfg.client_sigma_sq / cfg.unit_sigma_sq;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * ratio) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

// Own-noise variance actually emitted: v * sigma^2 >= sigma_k^2.
inline double effective_sigma_sq(const ShareConfig& cfg) {
  return static_cast<double>(share_count(cfg)) * cfg.unit_sigma_sq;
}

inline std::vector<ModelVector> generate_shares(std::size_t v, const ShareConfig& cfg,
                                                std::size_t dim, RngStream& rng) {
  if (v == 0) throw ParameterError("share count must be at least 1");
  cfg.validate();
  std::vector<ModelVector> shares;
  shares.reserve(v);
  for (std::size_t i = 0; i < v; ++i) shares.push_back(sample_gaussian(dim, 0.0, cfg.unit_sigma_sq, rng));
  return shares;
}

// In-process tracker: the set of clients registered for the current round.
// It hands out neighbor lists and never sees any noise.
class TrackerState {
 public:
  TrackerState() = default;
  explicit TrackerState(std::span<const ClientId> clients) {
    for (ClientId id : clients) register_client(id);
  }

  void register_client(ClientId id) {
    auto it = std::lower_bound(live_.begin(), live_.end(), id);
    if (it == live_.end() || *it != id) live_.insert(it, id);
  }

  void clear() noexcept { live_.clear(); }

  bool is_live(ClientId id) const {
    return std::binary_search(live_.begin(), live_.end(), id);
  }

  // Sorted ascending.
  std::span<const ClientId> live_clients() const noexcept { return live_; }

 private:
  std::vector<ClientId> live_;
};

// v peers drawn uniformly from live \ {requester}: without replacement while
// v <= number of peers, with replacement beyond that.
inline std::vector<ClientId> select_neighbors(const TrackerState& tracker, ClientId requester,
                                              std::size_t v, RngStream& rng) {
  if (!tracker.is_live(requester)) {
    throw ProtocolError("client " + std::to_string(requester) + " is not registered with the tracker");
  }
  std::vector<ClientId> peers;
  peers.reserve(tracker.live_clients().size());
  for (ClientId id : tracker.live_clients()) {
    if (id != requester) peers.push_back(id);
  }
  if (peers.empty()) {
    throw ProtocolError("client " + std::to_string(requester) + " has no live peer to share with");
  }
  std::vector<ClientId> chosen;
  chosen.reserve(v);
  if (v <= peers.size()) {
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < v; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(peers.size() - i));
      std::swap(peers[i], peers[j]);
      chosen.push_back(peers[i]);
    }
  } else {
    for (std::size_t i = 0; i < v; ++i) chosen.push_back(peers[rng.uniform_index(peers.size())]);
  }
  return chosen;
}

// s * r.payload with s ~ N(1, tau_sq). In per-share mode the single scalar
// correlates the coordinates of the result; per-coordinate variance is the
// same in both modes.
inline ModelVector distort_share(const NoiseShare& r, double tau_sq, RngStream& rng,
                                 DistortionMode mode = DistortionMode::kPerShare) {
  if (!r.negated) throw ProtocolError("only received (negated) shares are distorted");
  if (!(tau_sq >= 0.0)) throw ParameterError("tau_sq must be nonnegative");
  ModelVector out = r.payload;
  if (tau_sq == 0.0) return out;
  const double tau = std::sqrt(tau_sq);
  if (mode == DistortionMode::kPerShare) {
    out *= rng.normal(1.0, tau);
  } else {
    for (double& x : out) x *= rng.normal(1.0, tau);
  }
  return out;
}

// n~ = sum(own) + sum(distorted_received).
inline ModelVector assemble_perturbation(std::span<const ModelVector> own_shares,
                                         std::span<const ModelVector> distorted_received) {
  if (own_shares.empty()) throw ShapeError("a client assembles at least one own share");
  ModelVector acc = sum(own_shares);
  for (const ModelVector& r : distorted_received) acc += r;
  return acc;
}

// Per-dimension variance of one client's upload noise when it receives as
// many shares as it sends: v sigma^2 from its own shares plus
// v sigma^2 (1 + tau^2) from the distorted received ones.
inline double local_perturbation_variance(const ShareConfig& cfg) {
  return effective_sigma_sq(cfg) * (2.0 + cfg.tau_sq);
}

// ---------------------------------------------------------------------------
// Round-level exchange

struct ExchangeParticipant {
  ClientId id = 0;
  ShareConfig config;
};

struct ExchangeOptions {
  std::size_t dim = 1;
  std::uint64_t round = 0;
  DistortionMode distortion = DistortionMode::kPerShare;
  std::size_t workers = 1;
};

struct Delivery {
  ClientId sender = 0;
  ClientId receiver = 0;
  std::uint32_t share_index = 0;
};

struct ExchangeResult {
  std::vector<ClientId> clients;             // participant order
  std::vector<ModelVector> perturbations;    // n~ per client, same order
  std::vector<std::size_t> received_counts;  // shares received per client
  std::vector<Delivery> deliveries;
  std::size_t generated = 0;
  std::size_t undelivered = 0;

  const ModelVector& perturbation_of(ClientId id) const {
    auto it = std::find(clients.begin(), clients.end(), id);
    if (it == clients.end()) throw ProtocolError("client " + std::to_string(id) + " took no part in the exchange");
    return perturbations[static_cast<std::size_t>(it - clients.begin())];
  }

  // What the server sees of the noise: the sum of every upload's perturbation.
  ModelVector aggregate_noise() const { return sum(perturbations); }
};

namespace stream_purpose {
inline constexpr std::string_view kShare = "niss/share";
inline constexpr std::string_view kNeighbors = "niss/neighbors";
inline constexpr std::string_view kDistort = "niss/distort";
}  // namespace stream_purpose

// Regenerates share `index` of `sender` for `round`. Each share has its own
// stream so it can be recomputed by whoever needs it without buffering the
// v x h payloads of every client.
inline ModelVector share_payload(std::uint64_t master_seed, ClientId sender, std::uint64_t round,
                                 std::uint32_t index, double unit_sigma_sq, std::size_t dim) {
  RngStream rng(master_seed, StreamLabel{stream_purpose::kShare, sender, round, index});
  return sample_gaussian(dim, 0.0, unit_sigma_sq, rng);
}

// One synchronous share exchange among `participants`.
//
// Phase 1 (per sender, parallel): draw v own shares, sum them, ask the tracker
// for v neighbors. Routing then deposits every negated share in its
// receiver's inbox in (sender, index) order. Phase 2 (per receiver, parallel)
// starts only after routing completes; it distorts each inbox entry and adds
// it to the receiver's perturbation. Results depend only on master_seed.
inline ExchangeResult run_share_exchange(std::span<const ExchangeParticipant> participants,
                                         const ExchangeOptions& options, std::uint64_t master_seed) {
  if (participants.empty()) throw ProtocolError("share exchange with no participants");
  if (options.dim == 0) throw ParameterError("dimension must be at least 1");

  TrackerState tracker;
  for (const auto& p : participants) {
    p.config.validate();
    if (tracker.is_live(p.id)) throw ProtocolError("duplicate participant " + std::to_string(p.id));
    tracker.register_client(p.id);
  }

  const std::size_t n = participants.size();
  ExchangeResult result;
  result.clients.reserve(n);
  for (const auto& p : participants) result.clients.push_back(p.id);

  std::vector<std::size_t> slot_of_id;  // participant slot by client id
  {
    ClientId max_id = *std::max_element(result.clients.begin(), result.clients.end());
    slot_of_id.assign(static_cast<std::size_t>(max_id) + 1, n);
    for (std::size_t s = 0; s < n; ++s) slot_of_id[result.clients[s]] = s;
  }

  // Phase 1.
  std::vector<ModelVector> own_sums(n);
  std::vector<std::vector<ClientId>> neighbors(n);
  parallel_for(n, options.workers, [&](std::size_t s) {
    const auto& p = participants[s];
    const std::size_t v = share_count(p.config);
    ModelVector acc(options.dim, 0.0);
    for (std::size_t i = 0; i < v; ++i) {
      acc += share_payload(master_seed, p.id, options.round, static_cast<std::uint32_t>(i),
                           p.config.unit_sigma_sq, options.dim);
    }
    own_sums[s] = std::move(acc);
    RngStream rng(master_seed, StreamLabel{stream_purpose::kNeighbors, p.id, options.round, 0});
    neighbors[s] = select_neighbors(tracker, p.id, v, rng);
  });

  // Routing.
  std::vector<std::vector<Delivery>> inbox(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t i = 0; i < neighbors[s].size(); ++i) {
      const ClientId to = neighbors[s][i];
      Delivery d{participants[s].id, to, static_cast<std::uint32_t>(i)};
      ++result.generated;
      if (to == d.sender || to >= slot_of_id.size() || slot_of_id[to] == n) {
        ++result.undelivered;
        continue;
      }
      inbox[slot_of_id[to]].push_back(d);
      result.deliveries.push_back(d);
    }
  }

  // Phase 2.
  result.perturbations.resize(n);
  result.received_counts.resize(n);
  parallel_for(n, options.workers, [&](std::size_t s) {
    const auto& p = participants[s];
    RngStream distort_rng(master_seed, StreamLabel{stream_purpose::kDistort, p.id, options.round, 0});
    ModelVector acc = std::move(own_sums[s]);
    for (const Delivery& d : inbox[s]) {
      const double unit = participants[slot_of_id[d.sender]].config.unit_sigma_sq;
      NoiseShare share{d.sender, d.receiver, options.round, d.share_index,
                       negate(share_payload(master_seed, d.sender, options.round, d.share_index,
                                            unit, options.dim)),
                       true};
      acc += distort_share(share, p.config.tau_sq, distort_rng, options.distortion);
    }
    result.received_counts[s] = inbox[s].size();
    result.perturbations[s] = std::move(acc);
  });
  return result;
}

}  // namespace niss

#endif  // NISS_NISS_PROTOCOL_HPP_
