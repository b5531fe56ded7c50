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

#ifndef NISS_DATASET_HPP_
#define NISS_DATASET_HPP_

// Labeled datasets: IDX loading, synthetic Gaussian blobs, IID and
// label-sharded partitioning, CSV dump.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "niss/errors.hpp"
#include "niss/numerics.hpp"

namespace niss {

struct Dataset {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;        // row-major, size() x input_dim
  std::vector<std::uint32_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {features.data() + i * input_dim, input_dim};
  }

  void push_back(std::span<const double> x, std::uint32_t label) {
    if (x.size() != input_dim) throw ShapeError("feature row has wrong length");
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  void validate() const {
    if (features.size() != labels.size() * input_dim) {
      throw ShapeError("feature buffer does not match label count");
    }
    for (std::uint32_t y : labels) {
      if (y >= num_classes) throw ShapeError("label out of range");
    }
    for (double x : features) {
      if (!std::isfinite(x)) throw ShapeError("non-finite feature value");
    }
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out{input_dim, num_classes, {}, {}};
    out.features.reserve(indices.size() * input_dim);
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(row(i), labels[i]);
    return out;
  }
};

// ---------------------------------------------------------------------------
// IDX (the MNIST container format): big-endian u32 magic, u32 dimension
// sizes, then unsigned bytes.

namespace detail {

inline std::vector<unsigned char> read_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(what, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset,
                               const std::string& field) {
  if (buf.size() < offset + 4) throw FormatError(field, "file truncated inside header");
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

// Loads an images/labels IDX pair. Pixels are scaled to [0, 1] by 1/255.
// Label values define num_classes as max(label) + 1 (at least 10).
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto images = detail::read_file(images_path, "images");
  const auto labels = detail::read_file(labels_path, "labels");

  if (detail::read_be32(images, 0, "images.magic") != kIdxImagesMagic) {
    throw FormatError("images.magic", "expected 0x00000803");
  }
  if (detail::read_be32(labels, 0, "labels.magic") != kIdxLabelsMagic) {
    throw FormatError("labels.magic", "expected 0x00000801");
  }
  const std::size_t count = detail::read_be32(images, 4, "images.count");
  const std::size_t rows = detail::read_be32(images, 8, "images.rows");
  const std::size_t cols = detail::read_be32(images, 12, "images.cols");
  const std::size_t label_count = detail::read_be32(labels, 4, "labels.count");
  if (count != label_count) {
    throw FormatError("labels.count", "image count " + std::to_string(count) +
                                          " differs from label count " + std::to_string(label_count));
  }
  const std::size_t dim = rows * cols;
  if (images.size() < 16 + count * dim) throw FormatError("images.data", "file truncated");
  if (labels.size() < 8 + count) throw FormatError("labels.data", "file truncated");

  Dataset ds;
  ds.input_dim = dim;
  ds.features.resize(count * dim);
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count * dim; ++i) ds.features[i] = images[16 + i] / 255.0;
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = std::max<std::size_t>(10, std::size_t{max_label} + 1);
  return ds;
}

// Writes an IDX pair from a dataset whose features lie in [0, 1]. Used to
// produce fixtures; rows * cols must equal input_dim.
inline void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
                      const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
  if (rows * cols != ds.input_dim) throw ShapeError("rows * cols must equal input_dim");
  auto be32 = [](std::ofstream& out, std::uint32_t x) {
    const std::array<char, 4> b{static_cast<char>(x >> 24), static_cast<char>(x >> 16),
                                static_cast<char>(x >> 8), static_cast<char>(x)};
    out.write(b.data(), 4);
  };
  std::ofstream img(images_path, std::ios::binary);
  be32(img, kIdxImagesMagic);
  be32(img, static_cast<std::uint32_t>(ds.size()));
  be32(img, static_cast<std::uint32_t>(rows));
  be32(img, static_cast<std::uint32_t>(cols));
  for (double x : ds.features) {
    img.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0))));
  }
  std::ofstream lab(labels_path, std::ios::binary);
  be32(lab, kIdxLabelsMagic);
  be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (std::uint32_t y : ds.labels) lab.put(static_cast<char>(y));
}

// ---------------------------------------------------------------------------
// Synthetic workload

// Unit-variance Gaussian blobs, one per class, n points with labels i mod
// num_classes. When input_dim >= num_classes the centers are scaled one-hot
// vectors, pairwise exactly `separation` apart; otherwise they sit on the
// first axis at spacing `separation`.
inline Dataset synth_dataset(std::size_t num_classes, std::size_t input_dim, std::size_t n,
                             double separation, RngStream& rng) {
  if (num_classes == 0 || input_dim == 0) throw ParameterError("empty synthetic dataset shape");
  if (n < num_classes) throw ParameterError("need at least one point per class");
  if (!(separation > 0.0)) throw ParameterError("separation must be positive");
  Dataset ds;
  ds.input_dim = input_dim;
  ds.num_classes = num_classes;
  ds.features.reserve(n * input_dim);
  ds.labels.reserve(n);
  const bool one_hot = input_dim >= num_classes;
  std::vector<double> x(input_dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint32_t>(i % num_classes);
    for (double& xi : x) xi = rng.standard_normal();
    if (one_hot) {
      x[label] += separation / std::sqrt(2.0);
    } else {
      x[0] += separation * static_cast<double>(label);
    }
    ds.push_back(x, label);
  }
  return ds;
}

// CSV with header `label,f0,...,f{d-1}`; doubles printed round-trip exact.
inline void write_csv(const Dataset& ds, std::ostream& out) {
  out << "label";
  for (std::size_t j = 0; j < ds.input_dim; ++j) out << ",f" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i];
    for (double x : ds.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Partitioning

enum class PartitionScheme { kIid, kNonIid };

// iid: shuffle, then K equal contiguous pieces with the remainder going to
// the last client. non-iid: stable sort by label, cut into K *
// shards_per_client contiguous shards, deal shards_per_client random shards
// to each client.
inline std::vector<Dataset> partition(const Dataset& ds, std::size_t k, PartitionScheme scheme,
                                      std::size_t shards_per_client, RngStream& rng) {
  if (k == 0) throw ConfigError("partition needs at least one client");
  if (k > ds.size()) {
    throw ConfigError("cannot split " + std::to_string(ds.size()) + " examples across " +
                      std::to_string(k) + " clients");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Dataset> parts;
  parts.reserve(k);

  if (scheme == PartitionScheme::kIid) {
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t each = ds.size() / k;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t begin = c * each;
      const std::size_t end = (c + 1 == k) ? ds.size() : begin + each;
      parts.push_back(ds.subset(std::span<const std::size_t>(order).subspan(begin, end - begin)));
    }
    return parts;
  }

  if (shards_per_client == 0) throw ConfigError("shards_per_client must be positive");
  const std::size_t num_shards = k * shards_per_client;
  if (num_shards > ds.size()) {
    throw ConfigError("more shards (" + std::to_string(num_shards) + ") than examples");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ds.labels[a] < ds.labels[b]; });
  std::vector<std::size_t> shard_ids(num_shards);
  std::iota(shard_ids.begin(), shard_ids.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(shard_ids));
  const std::size_t shard_size = ds.size() / num_shards;
  auto shard_range = [&](std::size_t s) {
    const std::size_t begin = s * shard_size;
    const std::size_t end = (s + 1 == num_shards) ? ds.size() : begin + shard_size;
    return std::span<const std::size_t>(order).subspan(begin, end - begin);
  };
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < shards_per_client; ++j) {
      auto r = shard_range(shard_ids[c * shards_per_client + j]);
      idx.insert(idx.end(), r.begin(), r.end());
    }
    parts.push_back(ds.subset(idx));
  }
  return parts;
}

}  // namespace niss

#endif  // NISS_DATASET_HPP_
