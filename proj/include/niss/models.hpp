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

#ifndef NISS_MODELS_HPP_
#define NISS_MODELS_HPP_

// Dense classifiers with hand-written backpropagation.
//
// Both model kinds are stacks of fully connected layers; softmax regression
// has no hidden layer and the MLP has two hidden ReLU layers of 200 units.
// Parameters are flattened layer by layer, each layer storing its weight
// matrix (row-major, out x in) followed by its bias vector:
//
//   [W1 | b1 | W2 | b2 | ... | WL | bL]
//
// Loss is mean cross-entropy over the batch.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "niss/dataset.hpp"
#include "niss/errors.hpp"
#include "niss/numerics.hpp"

namespace niss {

enum class ModelKind { kSoftmaxRegression, kMlp2x200 };

inline constexpr std::size_t kMlpHiddenUnits = 200;

inline std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kSoftmaxRegression ? "softmax-regression" : "mlp-2x200";
}

inline ModelKind parse_model_kind(std::string_view name) {
  if (name == "softmax-regression" || name == "softmax") return ModelKind::kSoftmaxRegression;
  if (name == "mlp-2x200" || name == "mlp") return ModelKind::kMlp2x200;
  throw ConfigError("unknown model '" + std::string(name) + "'");
}

struct ModelSpec {
  ModelKind kind = ModelKind::kSoftmaxRegression;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  // Widths from input to output, e.g. {784, 200, 200, 10}.
  std::vector<std::size_t> layer_widths() const {
    if (kind == ModelKind::kSoftmaxRegression) return {input_dim, num_classes};
    return {input_dim, kMlpHiddenUnits, kMlpHiddenUnits, num_classes};
  }

  std::size_t parameter_count() const {
    const auto w = layer_widths();
    std::size_t total = 0;
    for (std::size_t l = 1; l < w.size(); ++l) total += w[l] * w[l - 1] + w[l];
    return total;
  }
};

// He-normal weights for the MLP, zeros for softmax regression; biases zero.
inline ModelVector init_params(const ModelSpec& spec, RngStream& rng) {
  ModelVector params(spec.parameter_count(), 0.0);
  if (spec.kind == ModelKind::kSoftmaxRegression) return params;
  const auto w = spec.layer_widths();
  std::size_t offset = 0;
  for (std::size_t l = 1; l < w.size(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(w[l - 1]));
    for (std::size_t i = 0; i < w[l] * w[l - 1]; ++i) params[offset + i] = stddev * rng.standard_normal();
    offset += w[l] * w[l - 1] + w[l];
  }
  return params;
}

namespace detail {

struct Workspace {
  std::vector<std::vector<double>> activations;  // a_0 .. a_L (a_L = logits)
  std::vector<std::vector<double>> deltas;
};

inline void check_params(const ModelSpec& spec, const ModelVector& params, const Dataset& data) {
  if (params.size() != spec.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params.size()) + " entries, model needs " +
                     std::to_string(spec.parameter_count()));
  }
  if (data.input_dim != spec.input_dim) throw ShapeError("dataset input_dim does not match model");
}

// Fills ws.activations for example x and returns the logits row.
inline const std::vector<double>& forward(const std::vector<std::size_t>& widths, const double* p,
                                          std::span<const double> x, Workspace& ws) {
  const std::size_t layers = widths.size() - 1;
  ws.activations.resize(widths.size());
  ws.activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 1; l <= layers; ++l) {
    const std::size_t in = widths[l - 1], out = widths[l];
    const double* weights = p;
    const double* bias = p + out * in;
    const auto& a_prev = ws.activations[l - 1];
    auto& a = ws.activations[l];
    a.resize(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = weights + o * in;
      double z = bias[o];
      for (std::size_t i = 0; i < in; ++i) z += row[i] * a_prev[i];
      a[o] = (l < layers) ? std::max(z, 0.0) : z;
    }
    p += out * in + out;
  }
  return ws.activations[layers];
}

// log-sum-exp of the logits.
inline double log_partition(const std::vector<double>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (double z : logits) s += std::exp(z - m);
  return m + std::log(s);
}

}  // namespace detail

struct LossGrad {
  double loss = 0.0;
  ModelVector grad;
};

// Mean cross-entropy over data[indices] and its exact gradient.
inline LossGrad forward_loss_grad(const ModelSpec& spec, const ModelVector& params, const Dataset& data,
                                  std::span<const std::size_t> indices) {
  detail::check_params(spec, params, data);
  if (indices.empty()) throw ShapeError("empty batch");
  const auto widths = spec.layer_widths();
  const std::size_t layers = widths.size() - 1;

  // Offsets of each layer's weight block.
  std::vector<std::size_t> offsets(layers + 1, 0);
  for (std::size_t l = 1; l <= layers; ++l) {
    offsets[l] = offsets[l - 1] + widths[l] * widths[l - 1] + widths[l];
  }

  LossGrad out{0.0, ModelVector(params.size(), 0.0)};
  double* g = out.grad.data();
  detail::Workspace ws;
  ws.deltas.resize(widths.size());

  for (std::size_t idx : indices) {
    if (idx >= data.size()) throw ShapeError("batch index out of range");
    const auto& logits = detail::forward(widths, params.data(), data.row(idx), ws);
    const std::uint32_t y = data.labels[idx];
    const double lse = detail::log_partition(logits);
    out.loss += lse - logits[y];

    auto& delta = ws.deltas[layers];
    delta.resize(widths[layers]);
    for (std::size_t c = 0; c < widths[layers]; ++c) delta[c] = std::exp(logits[c] - lse);
    delta[y] -= 1.0;

    for (std::size_t l = layers; l >= 1; --l) {
      const std::size_t in = widths[l - 1], out_w = widths[l];
      const double* weights = params.data() + offsets[l - 1];
      double* gw = g + offsets[l - 1];
      double* gb = gw + out_w * in;
      const auto& a_prev = ws.activations[l - 1];
      const auto& d = ws.deltas[l];
      for (std::size_t o = 0; o < out_w; ++o) {
        if (d[o] == 0.0) continue;
        double* row = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) row[i] += d[o] * a_prev[i];
        gb[o] += d[o];
      }
      if (l == 1) break;
      auto& d_prev = ws.deltas[l - 1];
      d_prev.assign(in, 0.0);
      for (std::size_t o = 0; o < out_w; ++o) {
        if (d[o] == 0.0) continue;
        const double* row = weights + o * in;
        for (std::size_t i = 0; i < in; ++i) d_prev[i] += row[i] * d[o];
      }
      // ReLU gate: a_prev > 0 exactly where the pre-activation was positive.
      for (std::size_t i = 0; i < in; ++i) {
        if (a_prev[i] <= 0.0) d_prev[i] = 0.0;
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(indices.size());
  out.loss *= inv;
  out.grad *= inv;
  return out;
}

inline LossGrad forward_loss_grad(const ModelSpec& spec, const ModelVector& params, const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return forward_loss_grad(spec, params, data, all);
}

// Loss only; used by finite-difference checks.
inline double loss(const ModelSpec& spec, const ModelVector& params, const Dataset& data,
                   std::span<const std::size_t> indices) {
  detail::check_params(spec, params, data);
  if (indices.empty()) throw ShapeError("empty batch");
  const auto widths = spec.layer_widths();
  detail::Workspace ws;
  double total = 0.0;
  for (std::size_t idx : indices) {
    const auto& logits = detail::forward(widths, params.data(), data.row(idx), ws);
    total += detail::log_partition(logits) - logits[data.labels[idx]];
  }
  return total / static_cast<double>(indices.size());
}

// argmax of the logits; ties go to the lowest class index.
inline std::uint32_t predict(const ModelSpec& spec, const ModelVector& params, std::span<const double> x) {
  detail::Workspace ws;
  const auto& logits = detail::forward(spec.layer_widths(), params.data(), x, ws);
  return static_cast<std::uint32_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

// Fraction of argmax-correct predictions.
inline double evaluate(const ModelSpec& spec, const ModelVector& params, const Dataset& test) {
  if (test.empty()) throw ShapeError("evaluation on an empty test set");
  detail::check_params(spec, params, test);
  const auto widths = spec.layer_widths();
  detail::Workspace ws;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& logits = detail::forward(widths, params.data(), test.row(i), ws);
    const auto guess = static_cast<std::uint32_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (guess == test.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace niss

#endif  // NISS_MODELS_HPP_
