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

#include "niss/config.hpp"

#include <string>

#include "gtest/gtest.h"
#include "niss/experiment.hpp"

namespace niss {
namespace {

TEST(ConfigTest, DefaultsMatchExperimentSettings) {
  const ExperimentConfig cfg = parse_config_string("");
  EXPECT_EQ(cfg.k, 100u);
  EXPECT_EQ(cfg.c, 0.3);
  EXPECT_EQ(cfg.clip_threshold, 3.0);
  EXPECT_EQ(cfg.effective_sensitivity(), 3.0);
  EXPECT_EQ(cfg.epsilon, 10.0);
  EXPECT_EQ(cfg.delta, 1e-4);
  EXPECT_EQ(cfg.shards_per_client, 2u);
  EXPECT_NEAR(cfg.client_sigma_sq_for(0), 1.30308369116963114900 * 1.30308369116963114900, 1e-12);
  cfg.validate();
}

TEST(ConfigTest, ParsesEveryDocumentedKey) {
  const ExperimentConfig cfg = parse_config_string(R"(
# federation
k = 20
c = 0.5
rounds = 7
local_epochs = 2   # E
batch_size = 16
learning_rate = 0.05
clip_threshold = 2
unit_sigma_sq = 0.02
epsilon = 20
delta = 1e-5
tau_sq = 0.3
mode = plain-fedavg, dp-fedavg, niss
model = softmax-regression, mlp-2x200
dataset = synthetic
partition = iid, non-iid
shards_per_client = 3
seed = 18446744073709551615
out_dir = results/a
)");
  EXPECT_EQ(cfg.k, 20u);
  EXPECT_EQ(cfg.c, 0.5);
  EXPECT_EQ(cfg.rounds, 7u);
  EXPECT_EQ(cfg.local_epochs, 2u);
  EXPECT_EQ(cfg.batch_size, 16u);
  EXPECT_EQ(cfg.learning_rate, 0.05);
  EXPECT_EQ(cfg.clip_threshold, 2.0);
  EXPECT_EQ(cfg.effective_sensitivity(), 2.0);
  EXPECT_EQ(cfg.unit_sigma_sq, 0.02);
  EXPECT_EQ(cfg.epsilon, 20.0);
  EXPECT_EQ(cfg.delta, 1e-5);
  EXPECT_EQ(cfg.tau_sq, std::vector<double>{0.3});
  EXPECT_EQ(cfg.modes, (std::vector<Mode>{Mode::kPlainFedAvg, Mode::kDpFedAvg, Mode::kNiss}));
  EXPECT_EQ(cfg.models, (std::vector<ModelKind>{ModelKind::kSoftmaxRegression, ModelKind::kMlp2x200}));
  EXPECT_EQ(cfg.partitions, (std::vector<PartitionScheme>{PartitionScheme::kIid, PartitionScheme::kNonIid}));
  EXPECT_EQ(cfg.shards_per_client, 3u);
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.out_dir, "results/a");
  cfg.validate();
}

TEST(ConfigTest, AliasesAndPerClientTau) {
  const ExperimentConfig cfg = parse_config_string("k = 3\ne = 4\nb = 8\neta = 0.2\nzeta = 5\ntau_sq = 0, 0.5, 1\n");
  EXPECT_EQ(cfg.local_epochs, 4u);
  EXPECT_EQ(cfg.batch_size, 8u);
  EXPECT_EQ(cfg.learning_rate, 0.2);
  EXPECT_EQ(cfg.clip_threshold, 5.0);
  EXPECT_EQ(cfg.tau_sq_for(1), 0.5);
  cfg.validate();
}

std::string ErrorOf(const std::string& text) {
  try {
    parse_config_string(text).validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ConfigTest, ErrorsNameLineAndField) {
  EXPECT_EQ(ErrorOf("k = 10\nc = lots\n"), "line 2, field 'c': expected a number, got 'lots'");
  EXPECT_EQ(ErrorOf("\nfoo = 1\n"), "line 2, field 'foo': unknown key");
  EXPECT_EQ(ErrorOf("k = 5\nk = 6\n"), "line 2, field 'k': duplicate key (first set on line 1)");
  EXPECT_EQ(ErrorOf("just words\n"), "line 1: expected 'key = value'");
  EXPECT_NE(ErrorOf("mode = niss, turbo\n").find("field 'mode'"), std::string::npos);
  EXPECT_NE(ErrorOf("k = -3\n").find("field 'k'"), std::string::npos);
}

TEST(ConfigTest, ValidationRejectsInconsistentSettings) {
  EXPECT_NE(ErrorOf("c = 0\n"), "");
  EXPECT_NE(ErrorOf("k = 4\ntau_sq = 0.1, 0.2\n"), "");
  EXPECT_NE(ErrorOf("tau_sq = -1\n"), "");
  EXPECT_NE(ErrorOf("epsilon = 0\n"), "");
  EXPECT_NE(ErrorOf("delta = 1\n"), "");
  EXPECT_NE(ErrorOf("unit_sigma_sq = 5\n"), "");
  EXPECT_NE(ErrorOf("k = 3000\n"), "");
  EXPECT_NE(ErrorOf("trials = 10\n"), "");
  EXPECT_NE(ErrorOf("rho = 1.5\n"), "");
  EXPECT_THROW(load_config("/nonexistent/niss.cfg"), ConfigError);
}

TEST(ConfigTest, HashTracksEffectiveSettingsOnly) {
  const auto a = parse_config_string("k = 10\nseed = 4\n");
  const auto b = parse_config_string("seed = 4\nk = 10   # same settings, other order\n");
  const auto c = parse_config_string("k = 10\nseed = 5\n");
  const auto d = parse_config_string("k = 10\nseed = 4\nout_dir = elsewhere\nworkers = 3\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash(), d.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(ScenarioTest, ExpandsModeTauPartitionModel) {
  const auto cfg = parse_config_string(
      "mode = plain-fedavg, niss, dp-fedavg\ntau_sq_sweep = 0, 0.3\npartition = iid, non-iid\n");
  const auto sc = expand_scenarios(cfg);
  ASSERT_EQ(sc.size(), 8u);
  EXPECT_EQ(sc[0].id, "plain-fedavg_iid_softmax-regression");
  EXPECT_EQ(sc[1].id, "niss_tau0_iid_softmax-regression");
  EXPECT_EQ(sc[2].id, "niss_tau0.3_iid_softmax-regression");
  EXPECT_EQ(sc[3].id, "dp-fedavg_iid_softmax-regression");
  EXPECT_EQ(sc[3].tau_label, 1.0);
  EXPECT_EQ(sc[4].partition, PartitionScheme::kNonIid);
}

}  // namespace
}  // namespace niss
