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

#ifndef NISS_EXPERIMENT_HPP_
#define NISS_EXPERIMENT_HPP_

// Drivers behind the CLI subcommands: the federated scenario matrix, the
// aggregate-variance harness and the collusion harness. Each writes CSV files
// into cfg.out_dir and is deterministic for a fixed config and seed.
//
//   rounds.csv     scenario_id, round, mode, tau_sq, partition, test_accuracy,
//                  aggregate_noise_var_empirical, aggregate_noise_var_theoretical,
//                  wall_ms
//   summary.csv    scenario_id, final_accuracy, mean_noise_var, config_hash
//   variance.csv   k, tau_sq, trials, dim, empirical_var, standard_error,
//                  theoretical_var, relative_error
//   collusion.csv  rho, tau_sq, client_sigma_sq, shares, trials, empirical_var,
//                  standard_error, theoretical_var, relative_error

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "niss/analysis.hpp"
#include "niss/config.hpp"
#include "niss/csv.hpp"
#include "niss/dataset.hpp"
#include "niss/federation.hpp"
#include "niss/models.hpp"

namespace niss {

inline const std::vector<std::string> kRoundsColumns = {
    "scenario_id", "round", "mode", "tau_sq", "partition", "test_accuracy",
    "aggregate_noise_var_empirical", "aggregate_noise_var_theoretical", "wall_ms"};
inline const std::vector<std::string> kSummaryColumns = {"scenario_id", "final_accuracy", "mean_noise_var",
                                                         "config_hash"};
inline const std::vector<std::string> kVarianceColumns = {"k", "tau_sq", "trials", "dim", "empirical_var",
                                                          "standard_error", "theoretical_var", "relative_error"};
inline const std::vector<std::string> kCollusionColumns = {
    "rho", "tau_sq", "client_sigma_sq", "shares", "trials", "empirical_var", "standard_error", "theoretical_var",
    "relative_error"};

struct Scenario {
  std::string id;
  Mode mode = Mode::kPlainFedAvg;
  std::vector<double> tau_sq;  // niss only: one value or one per client
  double tau_label = 0.0;      // tau_sq column: niss level (mean if per client), 0 plain, 1 dp
  PartitionScheme partition = PartitionScheme::kIid;
  ModelKind model = ModelKind::kSoftmaxRegression;
};

// mode x tau level x partition x model. Only niss scenarios expand over the
// tau levels; tau_sq_sweep (if set) supplies the levels, otherwise tau_sq.
inline std::vector<Scenario> expand_scenarios(const ExperimentConfig& cfg) {
  std::vector<std::vector<double>> levels;
  if (!cfg.tau_sq_sweep.empty()) {
    for (double t : cfg.tau_sq_sweep) levels.push_back({t});
  } else {
    levels.push_back(cfg.tau_sq);
  }
  std::vector<Scenario> out;
  for (ModelKind model : cfg.models) {
    for (PartitionScheme part : cfg.partitions) {
      for (Mode mode : cfg.modes) {
        const std::string suffix =
            "_" + std::string(detail::to_string(part)) + "_" + std::string(to_string(model));
        if (mode != Mode::kNiss) {
          out.push_back({std::string(to_string(mode)) + suffix, mode, {0.0},
                         mode == Mode::kDpFedAvg ? 1.0 : 0.0, part, model});
          continue;
        }
        for (const auto& level : levels) {
          double mean = 0.0;
          for (double t : level) mean += t;
          mean /= static_cast<double>(level.size());
          const std::string tau = level.size() == 1 ? csv::format_short(level.front()) : "vec";
          out.push_back({"niss_tau" + tau + suffix, mode, level, mean, part, model});
        }
      }
    }
  }
  return out;
}

struct TrainTestData {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
};

inline TrainTestData load_data(const ExperimentConfig& cfg) {
  if (cfg.dataset == DatasetKind::kMnist) {
    const std::filesystem::path dir = cfg.mnist_dir;
    return {std::make_shared<const Dataset>(
                load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte")),
            std::make_shared<const Dataset>(
                load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte"))};
  }
  RngStream train_rng(cfg.seed, StreamLabel{"data/train"});
  RngStream test_rng(cfg.seed, StreamLabel{"data/test"});
  return {std::make_shared<const Dataset>(
              synth_dataset(cfg.num_classes, cfg.input_dim, cfg.train_size, cfg.separation, train_rng)),
          std::make_shared<const Dataset>(
              synth_dataset(cfg.num_classes, cfg.input_dim, cfg.test_size, cfg.separation, test_rng))};
}

struct ScenarioResult {
  Scenario scenario;
  std::vector<RoundReport> reports;
};

struct ExperimentResult {
  std::vector<ScenarioResult> scenarios;
  std::string config_hash;
};

// Runs every scenario of the matrix and writes rounds.csv and summary.csv.
// Failures are rethrown as std::runtime_error naming the scenario (and the
// round, via RoundError's message); configuration problems stay ConfigError.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TrainTestData data = load_data(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out_dir = cfg.out_dir;

  ExperimentResult result;
  result.config_hash = cfg.hash();
  csv::Writer rounds_csv(out_dir / "rounds.csv", kRoundsColumns);
  csv::Writer summary_csv(out_dir / "summary.csv", kSummaryColumns);

  // One partition per scheme, shared by every scenario that uses it.
  std::vector<std::vector<std::shared_ptr<const Dataset>>> shards(2);
  auto client_data = [&](PartitionScheme scheme) -> const std::vector<std::shared_ptr<const Dataset>>& {
    auto& slot = shards[scheme == PartitionScheme::kIid ? 0 : 1];
    if (slot.empty()) {
      RngStream rng(cfg.seed, StreamLabel{"data/partition", 0, 0, static_cast<std::uint64_t>(scheme)});
      for (auto& part : partition(*data.train, cfg.k, scheme, cfg.shards_per_client, rng)) {
        slot.push_back(std::make_shared<const Dataset>(std::move(part)));
      }
    }
    return slot;
  };

  for (const Scenario& sc : expand_scenarios(cfg)) {
    const auto& parts = client_data(sc.partition);
    std::vector<ClientProfile> profiles;
    profiles.reserve(cfg.k);
    for (std::size_t k = 0; k < cfg.k; ++k) {
      const double tau = sc.tau_sq.size() == 1 ? sc.tau_sq.front() : sc.tau_sq[k];
      profiles.push_back(ClientProfile{static_cast<ClientId>(k), parts[k], cfg.privacy(),
                                       ShareConfig{cfg.unit_sigma_sq, tau, cfg.client_sigma_sq_for(k)}});
    }
    FederationConfig fed{cfg.k,     cfg.c,    cfg.local_epochs, cfg.batch_size,  cfg.learning_rate,
                         cfg.rounds, sc.mode, cfg.clip_threshold, cfg.distortion, cfg.workers};
    const ModelSpec model{sc.model, data.train->input_dim, data.train->num_classes};

    ScenarioResult sr{sc, {}};
    try {
      sr.reports = run_training(fed, profiles, model, *data.test, cfg.seed, [&](const RoundReport& r) {
        rounds_csv.write_row({sc.id, std::to_string(r.round), std::string(to_string(sc.mode)),
                              csv::format_double(sc.tau_label), std::string(detail::to_string(sc.partition)),
                              csv::format_double(r.test_accuracy), csv::format_double(r.noise_var_empirical),
                              csv::format_double(r.noise_var_theoretical),
                              csv::format_double(cfg.record_wall_time ? r.wall_ms : 0.0)});
      });
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error("scenario " + sc.id + ": " + e.what());
    }
    for (auto& r : sr.reports) r.model = ModelVector();  // keep reports light
    if (!sr.reports.empty()) {
      double mean_noise = 0.0;
      for (const auto& r : sr.reports) mean_noise += r.noise_var_empirical;
      mean_noise /= static_cast<double>(sr.reports.size());
      summary_csv.write_row({sc.id, csv::format_double(sr.reports.back().test_accuracy),
                             csv::format_double(mean_noise), result.config_hash});
    }
    result.scenarios.push_back(std::move(sr));
  }
  return result;
}

struct VarianceRow {
  std::size_t k = 0;
  double tau_sq = 0.0;
  VarianceEstimate estimate;
  double theoretical = 0.0;
};

inline double relative_error(double empirical, double theoretical) {
  if (theoretical == 0.0) return std::abs(empirical);
  return std::abs(empirical - theoretical) / theoretical;
}

// Aggregate-variance harness over tau levels (tau_sq_sweep, else tau_sq)
// with k clients whose sigma_k^2 come from client_sigma_sq or calibration.
inline std::vector<VarianceRow> run_variance(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.k < 2) throw ConfigError("the variance harness needs k >= 2");
  std::vector<std::vector<double>> levels;
  if (!cfg.tau_sq_sweep.empty()) {
    for (double t : cfg.tau_sq_sweep) levels.push_back({t});
  } else {
    levels.push_back(cfg.tau_sq);
  }
  std::filesystem::create_directories(cfg.out_dir);
  csv::Writer out(std::filesystem::path(cfg.out_dir) / "variance.csv", kVarianceColumns);
  std::vector<VarianceRow> rows;
  for (const auto& level : levels) {
    ExchangeSetup setup;
    setup.dim = cfg.noise_dim;
    setup.distortion = cfg.distortion;
    setup.workers = cfg.workers;
    double mean_tau = 0.0;
    for (std::size_t k = 0; k < cfg.k; ++k) {
      const double tau = level.size() == 1 ? level.front() : level[k];
      mean_tau += tau / static_cast<double>(cfg.k);
      setup.clients.push_back(ShareConfig{cfg.unit_sigma_sq, tau, cfg.client_sigma_sq_for(k)});
    }
    VarianceRow row{cfg.k, mean_tau, empirical_aggregate_variance(setup, cfg.trials, cfg.seed),
                    theoretical_aggregate_variance(setup.clients)};
    out.write_row({std::to_string(row.k), csv::format_double(row.tau_sq), std::to_string(row.estimate.trials),
                   std::to_string(cfg.noise_dim), csv::format_double(row.estimate.variance),
                   csv::format_double(row.estimate.standard_error), csv::format_double(row.theoretical),
                   csv::format_double(relative_error(row.estimate.variance, row.theoretical))});
    rows.push_back(row);
  }
  return rows;
}

struct CollusionRow {
  double rho = 0.0;
  double tau_sq = 0.0;
  double client_sigma_sq = 0.0;
  std::size_t shares = 0;
  VarianceEstimate estimate;
  double theoretical = 0.0;
};

// Collusion harness for each rho, with tau^2 = collusion_tau_sq or, when that
// is unset, the threshold min_tau_sq(rho). sigma_k^2 is that of client 0.
inline std::vector<CollusionRow> run_collusion(const ExperimentConfig& cfg) {
  cfg.validate();
  std::filesystem::create_directories(cfg.out_dir);
  csv::Writer out(std::filesystem::path(cfg.out_dir) / "collusion.csv", kCollusionColumns);
  const ShareConfig base{cfg.unit_sigma_sq, 0.0, cfg.client_sigma_sq_for(0)};
  const std::size_t v = share_count(base);
  std::vector<CollusionRow> rows;
  for (double rho : cfg.rho) {
    CollusionSetup setup{cfg.unit_sigma_sq, cfg.collusion_tau_sq.value_or(min_tau_sq(rho)), v,
                         cfg.noise_dim, cfg.distortion};
    CollusionRow row{rho, setup.tau_sq, setup.client_sigma_sq(), v, simulate_collusion(setup, rho, cfg.trials, cfg.seed),
                     attacker_effective_variance({rho, setup.tau_sq, setup.client_sigma_sq()})};
    out.write_row({csv::format_double(row.rho), csv::format_double(row.tau_sq),
                   csv::format_double(row.client_sigma_sq), std::to_string(row.shares),
                   std::to_string(row.estimate.trials), csv::format_double(row.estimate.variance),
                   csv::format_double(row.estimate.standard_error), csv::format_double(row.theoretical),
                   csv::format_double(relative_error(row.estimate.variance, row.theoretical))});
    rows.push_back(row);
  }
  return rows;
}

}  // namespace niss

#endif  // NISS_EXPERIMENT_HPP_
