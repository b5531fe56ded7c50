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

#ifndef NISS_CONFIG_HPP_
#define NISS_CONFIG_HPP_

// Experiment configuration: a flat `key = value` text file. Blank lines and
// text after '#' are ignored; list values are comma separated. Every key is
// optional. Unknown keys, duplicate keys and unparsable values are rejected
// with the offending line number.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "niss/csv.hpp"
#include "niss/dataset.hpp"
#include "niss/errors.hpp"
#include "niss/federation.hpp"
#include "niss/models.hpp"
#include "niss/niss_protocol.hpp"

namespace niss {

enum class DatasetKind { kSynthetic, kMnist };

struct ExperimentConfig {
  // Federation
  std::size_t k = 100;
  double c = 0.3;
  std::size_t rounds = 10;
  std::size_t local_epochs = 5;
  std::size_t batch_size = 10;
  double learning_rate = 0.01;
  double clip_threshold = 3.0;
  std::size_t workers = 1;

  // Privacy and shares
  double unit_sigma_sq = 0.01;
  double epsilon = 10.0;
  double delta = 1e-4;
  std::optional<double> sensitivity;      // defaults to clip_threshold
  std::vector<double> tau_sq = {0.0};     // one value, or one per client
  std::vector<double> tau_sq_sweep;       // niss scenarios, one per level
  DistortionMode distortion = DistortionMode::kPerShare;

  // Scenario matrix
  std::vector<Mode> modes = {Mode::kNiss};
  std::vector<ModelKind> models = {ModelKind::kSoftmaxRegression};
  std::vector<PartitionScheme> partitions = {PartitionScheme::kIid};
  std::size_t shards_per_client = 2;

  // Data
  DatasetKind dataset = DatasetKind::kSynthetic;
  std::string mnist_dir = "data/mnist";
  std::size_t num_classes = 10;
  std::size_t input_dim = 20;
  std::size_t train_size = 2000;
  std::size_t test_size = 1000;
  double separation = 3.0;

  // Harnesses
  std::size_t trials = 10000;
  std::size_t noise_dim = 4;
  std::vector<double> client_sigma_sq;    // overrides the calibrated sigma_k^2
  std::vector<double> rho = {0.0, 0.75, 1.0};
  std::optional<double> collusion_tau_sq;  // unset: min_tau_sq(rho) per row

  // Output
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  bool record_wall_time = false;

  double effective_sensitivity() const { return sensitivity.value_or(clip_threshold); }

  PrivacySpec privacy() const { return PrivacySpec{epsilon, delta, effective_sensitivity()}; }

  // sigma_k^2 for client k: explicit list (cycled) or the Gaussian mechanism.
  double client_sigma_sq_for(std::size_t client) const {
    if (!client_sigma_sq.empty()) return client_sigma_sq[client % client_sigma_sq.size()];
    return compute_sigma(privacy()).sigma_sq();
  }

  double tau_sq_for(std::size_t client) const { return tau_sq.size() == 1 ? tau_sq.front() : tau_sq[client]; }

  void validate() const;
  std::string canonical() const;
  std::string hash() const;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

struct ConfigLine {
  std::size_t line;
  std::string key;
  std::string value;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("line " + std::to_string(line) + ", field '" + key + "': " + what);
  }

  double as_double() const {
    double x = 0.0;
    const std::string v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) fail("expected a number, got '" + value + "'");
    return x;
  }

  std::uint64_t as_u64() const {
    std::uint64_t x = 0;
    const std::string v = trim(value);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
      fail("expected a nonnegative integer, got '" + value + "'");
    }
    return x;
  }

  std::size_t as_size() const { return static_cast<std::size_t>(as_u64()); }

  bool as_bool() const {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    fail("expected true or false");
  }

  std::vector<double> as_doubles() const {
    std::vector<double> out;
    for (const auto& item : split_list(value)) out.push_back(ConfigLine{line, key, item}.as_double());
    if (out.empty()) fail("empty list");
    return out;
  }

  template <typename Parse>
  auto as_list(Parse parse) const {
    std::vector<decltype(parse(std::string_view{}))> out;
    for (const auto& item : split_list(value)) {
      try {
        out.push_back(parse(item));
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    }
    if (out.empty()) fail("empty list");
    return out;
  }
};

inline PartitionScheme parse_partition(std::string_view s) {
  if (s == "iid") return PartitionScheme::kIid;
  if (s == "non-iid" || s == "noniid") return PartitionScheme::kNonIid;
  throw ConfigError("unknown partition '" + std::string(s) + "'");
}

inline std::string_view to_string(PartitionScheme p) { return p == PartitionScheme::kIid ? "iid" : "non-iid"; }

inline std::string_view to_string(DistortionMode d) {
  return d == DistortionMode::kPerShare ? "per-share" : "per-dimension";
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + csv::format_double(xs[i]);
  return s;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  FederationConfig{k, c, local_epochs, batch_size, learning_rate, 1, Mode::kPlainFedAvg, clip_threshold}.validate();
  try {
    privacy().validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (!(unit_sigma_sq > 0.0)) throw ConfigError("unit_sigma_sq must be positive");
  if (tau_sq.empty() || (tau_sq.size() != 1 && tau_sq.size() != k)) {
    throw ConfigError("tau_sq must be a single value or one value per client (" + std::to_string(k) + ")");
  }
  for (double t : tau_sq) {
    if (!(t >= 0.0)) throw ConfigError("tau_sq entries must be nonnegative");
  }
  for (double t : tau_sq_sweep) {
    if (!(t >= 0.0)) throw ConfigError("tau_sq_sweep entries must be nonnegative");
  }
  for (double s : client_sigma_sq) {
    if (!(s > 0.0)) throw ConfigError("client_sigma_sq entries must be positive");
  }
  for (std::size_t client = 0; client < k; ++client) {
    if (client_sigma_sq_for(client) < unit_sigma_sq) {
      throw ConfigError("unit_sigma_sq exceeds the noise variance of client " + std::to_string(client));
    }
  }
  if (collusion_tau_sq && !(*collusion_tau_sq >= 0.0)) throw ConfigError("collusion_tau_sq must be nonnegative");
  for (double r : rho) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("rho entries must lie in [0, 1]");
  }
  if (modes.empty() || models.empty() || partitions.empty()) throw ConfigError("empty scenario list");
  if (shards_per_client == 0) throw ConfigError("shards_per_client must be positive");
  if (dataset == DatasetKind::kSynthetic) {
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (train_size < num_classes || train_size < k) throw ConfigError("train_size too small for k and num_classes");
    if (test_size == 0) throw ConfigError("test_size must be positive");
    if (!(separation > 0.0)) throw ConfigError("separation must be positive");
  }
  if (trials < kMinMonteCarloTrials) throw ConfigError("trials must be at least 1000");
  if (noise_dim == 0) throw ConfigError("noise_dim must be positive");
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

// Every effective setting, one `key=value` per line in a fixed order.
inline std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  auto d = [](double x) { return csv::format_double(x); };
  o << "k=" << k << "\nc=" << d(c) << "\nrounds=" << rounds << "\nlocal_epochs=" << local_epochs
    << "\nbatch_size=" << batch_size << "\nlearning_rate=" << d(learning_rate)
    << "\nclip_threshold=" << d(clip_threshold) << "\nunit_sigma_sq=" << d(unit_sigma_sq)
    << "\nepsilon=" << d(epsilon) << "\ndelta=" << d(delta) << "\nsensitivity=" << d(effective_sensitivity())
    << "\ntau_sq=" << detail::join_doubles(tau_sq) << "\ntau_sq_sweep=" << detail::join_doubles(tau_sq_sweep)
    << "\ndistortion=" << detail::to_string(distortion) << "\nmode=";
  for (std::size_t i = 0; i < modes.size(); ++i) o << (i ? "," : "") << to_string(modes[i]);
  o << "\nmodel=";
  for (std::size_t i = 0; i < models.size(); ++i) o << (i ? "," : "") << to_string(models[i]);
  o << "\npartition=";
  for (std::size_t i = 0; i < partitions.size(); ++i) o << (i ? "," : "") << detail::to_string(partitions[i]);
  o << "\nshards_per_client=" << shards_per_client
    << "\ndataset=" << (dataset == DatasetKind::kSynthetic ? "synthetic" : "mnist") << "\nmnist_dir=" << mnist_dir
    << "\nnum_classes=" << num_classes << "\ninput_dim=" << input_dim << "\ntrain_size=" << train_size
    << "\ntest_size=" << test_size << "\nseparation=" << d(separation) << "\ntrials=" << trials
    << "\nnoise_dim=" << noise_dim << "\nclient_sigma_sq=" << detail::join_doubles(client_sigma_sq)
    << "\nrho=" << detail::join_doubles(rho) << "\ncollusion_tau_sq="
    << (collusion_tau_sq ? d(*collusion_tau_sq) : std::string("threshold")) << "\nseed=" << seed << '\n';
  return o.str();
}

// 64-bit FNV-1a of canonical(), as 16 hex digits. Output location, worker
// count and timing do not enter the hash.
inline std::string ExperimentConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(niss::detail::fnv1a64(canonical())));
  return buf;
}

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  for (std::size_t line_no = 1; std::getline(in, raw); ++line_no) {
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const detail::ConfigLine l{line_no, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1))};
    if (l.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    if (auto [it, fresh] = seen.emplace(l.key, line_no); !fresh) {
      l.fail("duplicate key (first set on line " + std::to_string(it->second) + ")");
    }

    const std::string& key = l.key;
    if (key == "k") cfg.k = l.as_size();
    else if (key == "c") cfg.c = l.as_double();
    else if (key == "rounds") cfg.rounds = l.as_size();
    else if (key == "local_epochs" || key == "e") cfg.local_epochs = l.as_size();
    else if (key == "batch_size" || key == "b") cfg.batch_size = l.as_size();
    else if (key == "learning_rate" || key == "eta") cfg.learning_rate = l.as_double();
    else if (key == "clip_threshold" || key == "zeta") cfg.clip_threshold = l.as_double();
    else if (key == "workers") cfg.workers = l.as_size();
    else if (key == "unit_sigma_sq") cfg.unit_sigma_sq = l.as_double();
    else if (key == "epsilon") cfg.epsilon = l.as_double();
    else if (key == "delta") cfg.delta = l.as_double();
    else if (key == "sensitivity") cfg.sensitivity = l.as_double();
    else if (key == "tau_sq") cfg.tau_sq = l.as_doubles();
    else if (key == "tau_sq_sweep") cfg.tau_sq_sweep = l.as_doubles();
    else if (key == "distortion") {
      if (l.value == "per-share") cfg.distortion = DistortionMode::kPerShare;
      else if (l.value == "per-dimension") cfg.distortion = DistortionMode::kPerDimension;
      else l.fail("expected per-share or per-dimension");
    }
    else if (key == "mode") cfg.modes = l.as_list(parse_mode);
    else if (key == "model") cfg.models = l.as_list(parse_model_kind);
    else if (key == "partition") cfg.partitions = l.as_list(detail::parse_partition);
    else if (key == "shards_per_client") cfg.shards_per_client = l.as_size();
    else if (key == "dataset") {
      if (l.value == "synthetic") cfg.dataset = DatasetKind::kSynthetic;
      else if (l.value == "mnist") cfg.dataset = DatasetKind::kMnist;
      else l.fail("expected synthetic or mnist");
    }
    else if (key == "mnist_dir") cfg.mnist_dir = l.value;
    else if (key == "num_classes") cfg.num_classes = l.as_size();
    else if (key == "input_dim") cfg.input_dim = l.as_size();
    else if (key == "train_size") cfg.train_size = l.as_size();
    else if (key == "test_size") cfg.test_size = l.as_size();
    else if (key == "separation") cfg.separation = l.as_double();
    else if (key == "trials") cfg.trials = l.as_size();
    else if (key == "noise_dim") cfg.noise_dim = l.as_size();
    else if (key == "client_sigma_sq") cfg.client_sigma_sq = l.as_doubles();
    else if (key == "rho") cfg.rho = l.as_doubles();
    else if (key == "collusion_tau_sq") {
      if (l.value != "threshold") cfg.collusion_tau_sq = l.as_double();
    }
    else if (key == "seed") cfg.seed = l.as_u64();
    else if (key == "out_dir") cfg.out_dir = l.value;
    else if (key == "record_wall_time") cfg.record_wall_time = l.as_bool();
    else l.fail("unknown key");
  }
  return cfg;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace niss

#endif  // NISS_CONFIG_HPP_
