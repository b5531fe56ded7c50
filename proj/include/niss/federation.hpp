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

#ifndef NISS_FEDERATION_HPP_
#define NISS_FEDERATION_HPP_

// Federated rounds: participant sampling, local SGD with update clipping,
// mode-dependent noise and server-side aggregation.
//
// Each participant k uploads p_k w^k + noise_k and the server simply sums the
// uploads. noise_k is absent (plain FedAvg), a fresh N(0, sigma_k^2 I) draw
// (DP-FedAvg) or the perturbation assembled by the share exchange (NISS).
// Training randomness is drawn from streams that do not depend on the mode,
// so runs of different modes under one seed see the same batches.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "niss/analysis.hpp"
#include "niss/dataset.hpp"
#include "niss/dp_mechanism.hpp"
#include "niss/errors.hpp"
#include "niss/models.hpp"
#include "niss/niss_protocol.hpp"
#include "niss/numerics.hpp"
#include "niss/parallel.hpp"

namespace niss {

enum class Mode { kPlainFedAvg, kDpFedAvg, kNiss };

inline std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kPlainFedAvg: return "plain-fedavg";
    case Mode::kDpFedAvg: return "dp-fedavg";
    case Mode::kNiss: return "niss";
  }
  return "?";
}

inline Mode parse_mode(std::string_view name) {
  if (name == "plain-fedavg" || name == "fedavg" || name == "plain") return Mode::kPlainFedAvg;
  if (name == "dp-fedavg" || name == "dp") return Mode::kDpFedAvg;
  if (name == "niss") return Mode::kNiss;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

struct FederationConfig {
  std::size_t num_clients = 100;   // K
  double participation = 0.3;      // C
  std::size_t local_epochs = 5;    // E
  std::size_t batch_size = 10;     // B
  double learning_rate = 0.01;     // eta
  std::size_t rounds = 1;
  Mode mode = Mode::kPlainFedAvg;
  double clip_threshold = 3.0;     // zeta
  DistortionMode distortion = DistortionMode::kPerShare;
  std::size_t workers = 1;

  void validate() const {
    if (num_clients == 0) throw ConfigError("k must be positive");
    if (!(participation > 0.0 && participation <= 1.0)) throw ConfigError("c must lie in (0, 1]");
    if (local_epochs == 0) throw ConfigError("local_epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
    if (!(clip_threshold > 0.0)) throw ConfigError("clip_threshold must be positive");
  }
};

// m = max(round(C K), 1), rounding half up.
inline std::size_t participants_per_round(std::size_t k, double c) {
  const auto m = static_cast<std::size_t>(std::floor(c * static_cast<double>(k) + 0.5));
  return std::max<std::size_t>(m, 1);
}

struct ClientProfile {
  ClientId id = 0;
  std::shared_ptr<const Dataset> data;
  PrivacySpec privacy;
  ShareConfig share_cfg;  // client_sigma_sq follows from `privacy`

  std::size_t sample_count() const { return data ? data->size() : 0; }
};

// Builds a profile whose sigma_k^2 comes from the Gaussian mechanism.
inline ClientProfile make_profile(ClientId id, std::shared_ptr<const Dataset> data, const PrivacySpec& privacy,
                                  double unit_sigma_sq, double tau_sq) {
  const NoiseScale scale = compute_sigma(privacy);
  return ClientProfile{id, std::move(data), privacy, ShareConfig{unit_sigma_sq, tau_sq, scale.sigma_sq()}};
}

namespace stream_purpose {
inline constexpr std::string_view kParticipants = "fed/participants";
inline constexpr std::string_view kBatches = "fed/batches";
inline constexpr std::string_view kDpNoise = "fed/dp-noise";
inline constexpr std::string_view kInit = "fed/init";
}  // namespace stream_purpose

// m distinct ids drawn uniformly from [0, K), returned sorted.
inline std::vector<ClientId> select_participants(std::size_t k, double c, RngStream& rng) {
  if (!(c > 0.0 && c <= 1.0)) throw ParameterError("participation fraction must lie in (0, 1]");
  if (k == 0) throw ParameterError("no clients to select from");
  const std::size_t m = std::min(participants_per_round(k, c), k);
  std::vector<ClientId> ids(k);
  std::iota(ids.begin(), ids.end(), ClientId{0});
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(k - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace detail {

inline double total_samples(std::span<const std::size_t> sample_counts) {
  if (sample_counts.empty()) throw ProtocolError("no participants to weight");
  double total = 0.0;
  for (std::size_t d : sample_counts) {
    if (d == 0) throw ProtocolError("participant with no samples");
    total += static_cast<double>(d);
  }
  return total;
}

}  // namespace detail

// p_k = d_k / sum_i d_i over the round's participants.
inline double aggregation_weight(std::size_t d_k, std::span<const std::size_t> sample_counts) {
  if (d_k == 0) throw ProtocolError("participant with no samples");
  return static_cast<double>(d_k) / detail::total_samples(sample_counts);
}

inline std::vector<double> aggregation_weights(std::span<const std::size_t> sample_counts) {
  const double total = detail::total_samples(sample_counts);
  std::vector<double> p;
  p.reserve(sample_counts.size());
  for (std::size_t d : sample_counts) p.push_back(static_cast<double>(d) / total);
  return p;
}

struct LocalTraining {
  ModelSpec model;
  std::size_t epochs = 5;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  double clip_threshold = 3.0;
};

// E epochs of minibatch SGD from w_t over one shuffled split of the client's
// data (the final short batch is kept). Returns the update w - w_t clipped to
// clip_threshold in L2 norm.
inline ModelVector local_update(const ClientProfile& client, const ModelVector& w_t, const LocalTraining& train,
                                RngStream& rng) {
  if (!client.data || client.data->empty()) {
    throw ConfigError("client " + std::to_string(client.id) + " has an empty dataset");
  }
  if (w_t.size() != train.model.parameter_count()) throw ShapeError("global model has the wrong dimension");
  const Dataset& data = *client.data;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  ModelVector w = w_t;
  if (train.learning_rate > 0.0) {
    for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
      for (std::size_t begin = 0; begin < order.size(); begin += train.batch_size) {
        const std::size_t len = std::min(train.batch_size, order.size() - begin);
        const auto lg = forward_loss_grad(train.model, w, data, std::span<const std::size_t>(order).subspan(begin, len));
        w.add_scaled(lg.grad, -train.learning_rate);
      }
    }
  }
  return clip_l2(subtract(std::move(w), w_t), train.clip_threshold);
}

// The locally trained model w_t + clipped update.
inline ModelVector local_train(const ClientProfile& client, const ModelVector& w_t, const LocalTraining& train,
                               RngStream& rng) {
  return add(w_t, local_update(client, w_t, train, rng));
}

// p_k w + perturbation, where w is the locally trained (clipped) model.
inline ModelVector client_update(const ClientProfile& client, const ModelVector& w_t, double p_k,
                                 const LocalTraining& train, RngStream& rng,
                                 const ModelVector* perturbation = nullptr) {
  ModelVector upload = scale(local_train(client, w_t, train, rng), p_k);
  if (perturbation != nullptr) upload += *perturbation;
  return upload;
}

// Server step: element-wise sum of the (already weighted) uploads.
inline ModelVector aggregate(std::span<const ModelVector> updates) {
  if (updates.empty()) throw ProtocolError("aggregation over zero updates");
  return sum(updates);
}

struct RoundReport {
  std::size_t round = 0;                 // 1-based
  std::vector<ClientId> participants;
  ModelVector model;                     // w_{t+1}
  double weight_sum = 0.0;
  double noise_var_empirical = 0.0;      // pooled over dimensions of the summed noise
  double noise_var_theoretical = 0.0;
  double test_accuracy = 0.0;
  double wall_ms = 0.0;
};

// Expected per-dimension variance of the summed noise for one round.
inline double expected_round_noise_variance(Mode mode, std::span<const ClientProfile* const> participants) {
  double v = 0.0;
  for (const ClientProfile* p : participants) {
    if (mode == Mode::kDpFedAvg) v += p->share_cfg.client_sigma_sq;
    if (mode == Mode::kNiss) v += effective_sigma_sq(p->share_cfg) * p->share_cfg.tau_sq;
  }
  return v;
}

// Runs cfg.rounds global rounds. Any failure inside a round is rethrown as a
// RoundError carrying the round index. `on_round` (optional) sees each report
// as it is produced.
inline std::vector<RoundReport> run_training(const FederationConfig& cfg, std::span<const ClientProfile> profiles,
                                             const ModelSpec& model, const Dataset& test, std::uint64_t master_seed,
                                             const std::function<void(const RoundReport&)>& on_round = {}) {
  cfg.validate();
  if (profiles.size() != cfg.num_clients) {
    throw ConfigError("expected " + std::to_string(cfg.num_clients) + " client profiles, got " +
                      std::to_string(profiles.size()));
  }
  for (std::size_t k = 0; k < profiles.size(); ++k) {
    if (profiles[k].id != k) throw ConfigError("client profiles must be ordered by id 0..K-1");
  }
  if (test.empty()) throw ConfigError("empty test set");

  const LocalTraining train{model, cfg.local_epochs, cfg.batch_size, cfg.learning_rate, cfg.clip_threshold};
  RngStream init_rng(master_seed, StreamLabel{stream_purpose::kInit});
  ModelVector w = init_params(model, init_rng);
  const std::size_t dim = w.size();

  std::vector<RoundReport> reports;
  reports.reserve(cfg.rounds);
  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const auto started = std::chrono::steady_clock::now();
    try {
      RngStream select_rng(master_seed, StreamLabel{stream_purpose::kParticipants, 0, t});
      const auto ids = select_participants(cfg.num_clients, cfg.participation, select_rng);
      const std::size_t m = ids.size();
      std::vector<const ClientProfile*> members;
      std::vector<std::size_t> counts;
      for (ClientId id : ids) {
        members.push_back(&profiles[id]);
        counts.push_back(profiles[id].sample_count());
      }
      const auto weights = aggregation_weights(counts);

      // Noise for every participant. The share exchange completes here, before
      // any upload is assembled.
      std::vector<ModelVector> noise;
      if (cfg.mode == Mode::kNiss) {
        std::vector<ExchangeParticipant> ex;
        for (const ClientProfile* p : members) ex.push_back({p->id, p->share_cfg});
        if (ex.size() < 2) throw ProtocolError("share exchange needs at least two participants");
        auto result = run_share_exchange(ex, ExchangeOptions{dim, t, cfg.distortion, cfg.workers}, master_seed);
        noise = std::move(result.perturbations);
      } else if (cfg.mode == Mode::kDpFedAvg) {
        noise.resize(m);
        parallel_for(m, cfg.workers, [&](std::size_t i) {
          RngStream rng(master_seed, StreamLabel{stream_purpose::kDpNoise, ids[i], t});
          noise[i] = generate_dp_noise(NoiseScale::from_sigma(std::sqrt(members[i]->share_cfg.client_sigma_sq)),
                                       dim, rng);
        });
      }

      std::vector<ModelVector> uploads(m);
      parallel_for(m, cfg.workers, [&](std::size_t i) {
        RngStream rng(master_seed, StreamLabel{stream_purpose::kBatches, ids[i], t});
        uploads[i] = client_update(*members[i], w, weights[i], train, rng, noise.empty() ? nullptr : &noise[i]);
      });
      w = aggregate(uploads);
      if (!all_finite(w)) throw ProtocolError("aggregated model has non-finite entries");

      RoundReport report;
      report.round = t;
      report.participants = ids;
      report.weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
      if (!noise.empty()) {
        RunningStats stats;
        for (double x : sum(noise)) stats.add(x);
        report.noise_var_empirical = stats.variance();
      }
      report.noise_var_theoretical = expected_round_noise_variance(cfg.mode, members);
      report.test_accuracy = evaluate(model, w, test);
      report.model = w;
      report.wall_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      if (on_round) on_round(report);
      reports.push_back(std::move(report));
    } catch (const RoundError&) {
      throw;
    } catch (const std::exception& e) {
      throw RoundError(t, e.what());
    }
  }
  return reports;
}

}  // namespace niss

#endif  // NISS_FEDERATION_HPP_
