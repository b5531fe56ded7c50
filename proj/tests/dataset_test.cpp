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

#include "niss/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "gtest/gtest.h"
#include "niss/models.hpp"

namespace niss {
namespace {

namespace fs = std::filesystem;

class IdxTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("niss_idx_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    ds_.input_dim = 4;
    ds_.num_classes = 10;
    const std::vector<std::vector<double>> rows{{0, 1, 0.5, 1}, {1, 0, 0, 0}, {0.2, 0.4, 0.6, 0.8}};
    for (std::size_t i = 0; i < rows.size(); ++i) ds_.push_back(rows[i], static_cast<std::uint32_t>(i * 3));
    write_idx(ds_, 2, 2, images(), labels());
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path images() const { return dir_ / "images.idx"; }
  fs::path labels() const { return dir_ / "labels.idx"; }

  void Patch(const fs::path& p, std::size_t offset, unsigned char byte) {
    std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.put(static_cast<char>(byte));
  }

  std::string FieldOfError() {
    try {
      load_idx(images(), labels());
    } catch (const FormatError& e) {
      return e.field();
    }
    return "";
  }

  fs::path dir_;
  Dataset ds_;
};

TEST_F(IdxTest, RoundTrip) {
  const Dataset got = load_idx(images(), labels());
  ASSERT_EQ(got.size(), 3u);
  EXPECT_EQ(got.input_dim, 4u);
  EXPECT_EQ(got.num_classes, 10u);
  EXPECT_EQ(got.labels, ds_.labels);
  EXPECT_EQ(got.row(0)[1], 1.0);  // byte 255
  EXPECT_EQ(got.row(0)[0], 0.0);
  EXPECT_NEAR(got.row(2)[1], 0.4, 0.5 / 255);
}

TEST_F(IdxTest, WrongImageMagic) {
  Patch(images(), 3, 0x02);
  EXPECT_EQ(FieldOfError(), "images.magic");
}

TEST_F(IdxTest, WrongLabelMagic) {
  Patch(labels(), 3, 0x03);
  EXPECT_EQ(FieldOfError(), "labels.magic");
}

TEST_F(IdxTest, CountMismatch) {
  Patch(labels(), 7, 2);
  EXPECT_EQ(FieldOfError(), "labels.count");
}

TEST_F(IdxTest, TruncatedPixels) {
  fs::resize_file(images(), fs::file_size(images()) - 1);
  EXPECT_EQ(FieldOfError(), "images.data");
}

TEST_F(IdxTest, TruncatedHeader) {
  fs::resize_file(labels(), 6);
  EXPECT_EQ(FieldOfError(), "labels.count");
}

TEST_F(IdxTest, MissingFile) {
  fs::remove(images());
  EXPECT_THROW(load_idx(images(), labels()), FormatError);
}

// Runs only where the MNIST training files are available.
TEST(MnistTest, TrainCounts) {
  const char* dir = std::getenv("NISS_MNIST_DIR");
  if (dir == nullptr) GTEST_SKIP() << "NISS_MNIST_DIR not set";
  const Dataset ds = load_idx(fs::path(dir) / "train-images-idx3-ubyte", fs::path(dir) / "train-labels-idx1-ubyte");
  EXPECT_EQ(ds.size(), 60000u);
  EXPECT_EQ(ds.input_dim, 784u);
  EXPECT_EQ(ds.num_classes, 10u);
}

TEST(SynthDatasetTest, OnePointPerClass) {
  RngStream rng(1, {"synth"});
  const Dataset ds = synth_dataset(10, 20, 10, 3.0, rng);
  ASSERT_EQ(ds.size(), 10u);
  EXPECT_EQ(std::set<std::uint32_t>(ds.labels.begin(), ds.labels.end()).size(), 10u);
  ds.validate();
}

TEST(SynthDatasetTest, DeterministicGivenStream) {
  RngStream a(2, {"synth"}), b(2, {"synth"});
  const Dataset x = synth_dataset(5, 3, 50, 2.0, a);
  const Dataset y = synth_dataset(5, 3, 50, 2.0, b);
  EXPECT_EQ(x.features, y.features);
  EXPECT_EQ(x.labels, y.labels);
}

TEST(SynthDatasetTest, CentersAreSeparationApart) {
  RngStream rng(3, {"synth"});
  const std::size_t k = 4, d = 6, n = 40'000;
  const Dataset ds = synth_dataset(k, d, n, 5.0, rng);
  std::vector<std::vector<double>> mean(k, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[ds.labels[i]][j] += ds.row(i)[j] / (n / k);
  }
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) dist += (mean[a][j] - mean[b][j]) * (mean[a][j] - mean[b][j]);
      EXPECT_NEAR(std::sqrt(dist), 5.0, 0.1);
    }
  }
}

TEST(SynthDatasetTest, RejectsBadArguments) {
  RngStream rng(4, {"synth"});
  EXPECT_THROW(synth_dataset(10, 4, 9, 1.0, rng), ParameterError);
  EXPECT_THROW(synth_dataset(3, 4, 9, 0.0, rng), ParameterError);
}

TEST(SynthDatasetTest, VeryLargeSeparationIsLinearlySeparable) {
  RngStream rng(5, {"synth"});
  const Dataset ds = synth_dataset(10, 20, 1000, 100.0, rng);
  const ModelSpec spec{ModelKind::kSoftmaxRegression, 20, 10};
  ModelVector w(spec.parameter_count(), 0.0);
  for (int step = 0; step < 200; ++step) w.add_scaled(forward_loss_grad(spec, w, ds).grad, -0.1);
  EXPECT_GE(evaluate(spec, w, ds), 0.99);
}

TEST(SynthDatasetTest, CsvDump) {
  Dataset ds{2, 3, {}, {}};
  ds.push_back(std::vector<double>{0.1, -2.0}, 2);
  ds.push_back(std::vector<double>{1e-300, 3.0}, 0);
  std::ostringstream out;
  write_csv(ds, out);
  EXPECT_EQ(out.str(), "label,f0,f1\n2,0.10000000000000001,-2\n0,1e-300,3\n");
}

std::multiset<std::tuple<std::uint32_t, std::vector<double>>> Multiset(const std::vector<Dataset>& parts) {
  std::multiset<std::tuple<std::uint32_t, std::vector<double>>> out;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      out.insert({p.labels[i], std::vector<double>(p.row(i).begin(), p.row(i).end())});
    }
  }
  return out;
}

class PartitionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    RngStream rng(6, {"synth"});
    data_ = synth_dataset(10, 3, 1000, 2.0, rng);
  }
  Dataset data_;
};

std::vector<std::size_t> FirstN(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

TEST_F(PartitionTest, IidEvenSplit) {
  RngStream rng(7, {"part"});
  for (const auto& p : partition(data_.subset(FirstN(100)), 10, PartitionScheme::kIid, 2, rng)) {
    EXPECT_EQ(p.size(), 10u);
  }
  const auto parts = partition(data_.subset(FirstN(10)), 3, PartitionScheme::kIid, 2, rng);
  EXPECT_EQ(parts[0].size(), 3u);
  EXPECT_EQ(parts[1].size(), 3u);
  EXPECT_EQ(parts[2].size(), 4u);
}

TEST_F(PartitionTest, ConservationBothSchemes) {
  const std::vector<Dataset> whole{data_};
  for (auto scheme : {PartitionScheme::kIid, PartitionScheme::kNonIid}) {
    RngStream rng(8, {"part"});
    const auto parts = partition(data_, 17, scheme, 2, rng);
    ASSERT_EQ(parts.size(), 17u);
    EXPECT_EQ(Multiset(parts), Multiset(whole));
  }
}

TEST_F(PartitionTest, NonIidLabelSpread) {
  RngStream rng(9, {"part"});
  const auto parts = partition(data_, 50, PartitionScheme::kNonIid, 2, rng);
  std::size_t few_labels = 0;
  for (const auto& p : parts) {
    const std::set<std::uint32_t> labels(p.labels.begin(), p.labels.end());
    // Each shard of 10 sorted examples spans at most two labels.
    EXPECT_LE(labels.size(), 4u);
    if (labels.size() <= 2) ++few_labels;
  }
  EXPECT_GT(few_labels, 0u);
}

TEST_F(PartitionTest, TooManyClients) {
  RngStream rng(10, {"part"});
  EXPECT_THROW(partition(data_, 1001, PartitionScheme::kIid, 2, rng), ConfigError);
  EXPECT_THROW(partition(data_, 600, PartitionScheme::kNonIid, 2, rng), ConfigError);
}

}  // namespace
}  // namespace niss
