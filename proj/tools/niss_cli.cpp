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

// Command-line front end.
//
//   niss train      --config exp.cfg [--seed N]   federated scenario matrix
//   niss variance   --config exp.cfg [--seed N]   aggregate-noise variance harness
//   niss collusion  --config exp.cfg [--seed N]   attacker-view variance harness
//   niss calibrate  [--config exp.cfg] [--epsilon E] [--delta D] [--sensitivity S]
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "niss/niss.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> sensitivity;
};

niss::ExperimentConfig load(const Options& opts, bool config_required) {
  niss::ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = niss::load_config(opts.config_path);
  } else if (config_required) {
    throw niss::ConfigError("--config is required");
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.epsilon) cfg.epsilon = *opts.epsilon;
  if (opts.delta) cfg.delta = *opts.delta;
  if (opts.sensitivity) cfg.sensitivity = *opts.sensitivity;
  cfg.validate();
  return cfg;
}

int cmd_train(const Options& opts) {
  const auto cfg = load(opts, true);
  const auto result = niss::run_experiment(cfg);
  for (const auto& s : result.scenarios) {
    if (s.reports.empty()) continue;
    std::printf("%-40s final accuracy %.4f\n", s.scenario.id.c_str(), s.reports.back().test_accuracy);
  }
  std::printf("wrote %s/rounds.csv and %s/summary.csv\n", cfg.out_dir.c_str(), cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_variance(const Options& opts) {
  const auto cfg = load(opts, true);
  for (const auto& row : niss::run_variance(cfg)) {
    std::printf("k=%zu tau_sq=%g empirical=%.6g (se %.2g) theoretical=%.6g\n", row.k, row.tau_sq,
                row.estimate.variance, row.estimate.standard_error, row.theoretical);
  }
  std::printf("wrote %s/variance.csv\n", cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_collusion(const Options& opts) {
  const auto cfg = load(opts, true);
  for (const auto& row : niss::run_collusion(cfg)) {
    std::printf("rho=%g tau_sq=%g v=%zu empirical=%.6g (se %.2g) formula=%.6g\n", row.rho, row.tau_sq, row.shares,
                row.estimate.variance, row.estimate.standard_error, row.theoretical);
  }
  std::printf("wrote %s/collusion.csv\n", cfg.out_dir.c_str());
  return kExitOk;
}

int cmd_calibrate(const Options& opts) {
  const auto cfg = load(opts, false);
  const auto spec = cfg.privacy();
  const double c = niss::compute_c(spec.delta);
  const auto scale = niss::compute_sigma(spec);
  std::printf("epsilon=%.17g delta=%.17g sensitivity=%.17g\n", spec.epsilon, spec.delta, spec.sensitivity);
  std::printf("c=%.17g\nsigma=%.17g\nsigma_sq=%.17g\n", c, scale.sigma(), scale.sigma_sq());
  std::printf("shares=%zu (unit_sigma_sq=%g)\n",
              niss::share_count({cfg.unit_sigma_sq, 0.0, scale.sigma_sq()}), cfg.unit_sigma_sq);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NISS federated-learning noise-offsetting simulator"};
  app.require_subcommand(1);
  Options opts;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "experiment config file (key = value)");
    sub->add_option("--seed", opts.seed, "override the master seed");
  };
  auto* train = app.add_subcommand("train", "run the federated scenario matrix");
  auto* variance = app.add_subcommand("variance", "aggregate-noise variance harness");
  auto* collusion = app.add_subcommand("collusion", "collusion (attacker-view) harness");
  auto* calibrate = app.add_subcommand("calibrate", "print the Gaussian-mechanism noise scale");
  for (auto* sub : {train, variance, collusion, calibrate}) add_common(sub);
  calibrate->add_option("--epsilon", opts.epsilon, "privacy budget epsilon");
  calibrate->add_option("--delta", opts.delta, "privacy slack delta");
  calibrate->add_option("--sensitivity", opts.sensitivity, "L2 sensitivity (defaults to clip_threshold)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (train->parsed()) return cmd_train(opts);
    if (variance->parsed()) return cmd_variance(opts);
    if (collusion->parsed()) return cmd_collusion(opts);
    return cmd_calibrate(opts);
  } catch (const niss::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const niss::ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
