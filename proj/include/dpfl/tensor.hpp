/*
 * Copyright 2026 The dpfl Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Dense parameter vectors and the two small classifiers used throughout the
// simulator: multinomial logistic regression and a one-hidden-layer ReLU MLP.
// Everything here is a pure function of its arguments.

#ifndef DPFL_TENSOR_HPP_
#define DPFL_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpfl/error.hpp"
#include "dpfl/random.hpp"

namespace dpfl {

class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0)
      : values_(dim, fill) {}
  explicit ParamVector(std::vector<double> values)
      : values_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : values_(values) {}

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const std::vector<double>& vector() const { return values_; }

  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }

  bool AllFinite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
};

inline double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double Norm2(const ParamVector& v) {
  return std::sqrt(Dot(v.values(), v.values()));
}

// y += a * x
inline void Axpy(double a, const ParamVector& x, ParamVector& y) {
  if (x.dim() != y.dim()) throw Error("shape-mismatch", "axpy");
  for (std::size_t i = 0; i < x.dim(); ++i) y[i] += a * x[i];
}

inline ParamVector Scaled(const ParamVector& v, double s) {
  ParamVector out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] * s;
  return out;
}

struct Example {
  std::vector<double> features;
  int label = 0;

  bool operator==(const Example&) const = default;
};

using Batch = std::span<const Example>;

enum class ModelKind { kLogisticRegression, kMlp1Hidden };

// Describes a classifier and doubles as its implementation. Parameter layout
// (row-major weights, then biases, layer by layer):
//   logistic: [W (classes x input) | b (classes)]
//   mlp:      [W1 (hidden x input) | b1 (hidden) | W2 (classes x hidden) |
//              b2 (classes)]
struct ModelSpec {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 0;
  std::size_t num_classes = 2;

  static ModelSpec Logistic(std::size_t input_dim, std::size_t num_classes) {
    return ModelSpec{ModelKind::kLogisticRegression, input_dim, 0,
                     num_classes};
  }
  static ModelSpec Mlp(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t num_classes) {
    return ModelSpec{ModelKind::kMlp1Hidden, input_dim, hidden_dim,
                     num_classes};
  }

  void Validate() const {
    if (input_dim == 0) throw Error("invalid-model-spec", "input_dim must be > 0");
    if (num_classes < 2) {
      throw Error("invalid-model-spec", "num_classes must be >= 2");
    }
    if (kind == ModelKind::kMlp1Hidden && hidden_dim == 0) {
      throw Error("invalid-model-spec", "mlp-1hidden needs hidden_dim > 0");
    }
    if (kind == ModelKind::kLogisticRegression && hidden_dim != 0) {
      throw Error("invalid-model-spec", "logistic regression has no hidden layer");
    }
  }

  std::size_t ParamCount() const {
    if (kind == ModelKind::kLogisticRegression) {
      return num_classes * input_dim + num_classes;
    }
    return hidden_dim * input_dim + hidden_dim + num_classes * hidden_dim +
           num_classes;
  }

  ParamVector InitParams(std::uint64_t seed) const;

  std::vector<double> Logits(const ParamVector& params,
                             const Example& example) const;

  // Mean softmax cross-entropy over the batch.
  double Loss(const ParamVector& params, Batch batch) const;

  std::vector<ParamVector> PerExampleGrads(const ParamVector& params,
                                           Batch batch) const;

  // Gradient of Loss(params, batch), accumulated in a single pass.
  ParamVector BatchGradient(const ParamVector& params, Batch batch) const;

  int Predict(const ParamVector& params, const Example& example) const;

  double Accuracy(const ParamVector& params, Batch dataset) const;

  bool operator==(const ModelSpec&) const = default;

 private:
  void CheckInputs(const ParamVector& params, const Example& example) const;
  double ExampleLossAndGrad(const ParamVector& params, const Example& example,
                            std::span<double> grad_out, double weight) const;
};

template <typename M>
concept DifferentiableModel =
    requires(const M& m, const ParamVector& p, Batch b) {
      { m.Loss(p, b) } -> std::convertible_to<double>;
      { m.PerExampleGrads(p, b) } -> std::same_as<std::vector<ParamVector>>;
    };

namespace internal {

inline double LogSumExp(std::span<const double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double acc = 0.0;
  for (double v : z) acc += std::exp(v - zmax);
  return zmax + std::log(acc);
}

}  // namespace internal

inline ParamVector ModelSpec::InitParams(std::uint64_t seed) const {
  Validate();
  RngStream rng({.seed = seed, .purpose = StreamPurpose::kInit});
  ParamVector params(ParamCount());
  std::size_t offset = 0;
  auto fill = [&](std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) {
      params[offset++] = bound * (2.0 * rng.Uniform() - 1.0);
    }
  };
  if (kind == ModelKind::kLogisticRegression) {
    fill(num_classes * input_dim + num_classes, input_dim);
  } else {
    fill(hidden_dim * input_dim + hidden_dim, input_dim);
    fill(num_classes * hidden_dim + num_classes, hidden_dim);
  }
  return params;
}

inline void ModelSpec::CheckInputs(const ParamVector& params,
                                   const Example& example) const {
  if (params.dim() != ParamCount()) {
    throw Error("shape-mismatch", "parameter vector has dim " +
                                      std::to_string(params.dim()) +
                                      ", model expects " +
                                      std::to_string(ParamCount()));
  }
  if (example.features.size() != input_dim) {
    throw Error("shape-mismatch", "example has " +
                                      std::to_string(example.features.size()) +
                                      " features, model expects " +
                                      std::to_string(input_dim));
  }
  if (example.label < 0 ||
      static_cast<std::size_t>(example.label) >= num_classes) {
    throw Error("invalid-label", std::to_string(example.label));
  }
}

inline std::vector<double> ModelSpec::Logits(const ParamVector& params,
                                             const Example& example) const {
  CheckInputs(params, example);
  const auto p = params.values();
  const auto x = std::span<const double>(example.features);
  std::vector<double> logits(num_classes);
  if (kind == ModelKind::kLogisticRegression) {
    const auto bias = p.subspan(num_classes * input_dim);
    for (std::size_t c = 0; c < num_classes; ++c) {
      logits[c] = Dot(p.subspan(c * input_dim, input_dim), x) + bias[c];
    }
    return logits;
  }
  const auto w1 = p.subspan(0, hidden_dim * input_dim);
  const auto b1 = p.subspan(hidden_dim * input_dim, hidden_dim);
  const auto w2 = p.subspan(hidden_dim * input_dim + hidden_dim,
                            num_classes * hidden_dim);
  const auto b2 = p.subspan(hidden_dim * input_dim + hidden_dim +
                            num_classes * hidden_dim);
  std::vector<double> hidden(hidden_dim);
  for (std::size_t h = 0; h < hidden_dim; ++h) {
    hidden[h] = std::max(0.0, Dot(w1.subspan(h * input_dim, input_dim), x) + b1[h]);
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    logits[c] = Dot(w2.subspan(c * hidden_dim, hidden_dim), hidden) + b2[c];
  }
  return logits;
}

// Adds weight * d(loss_example)/d(params) into grad_out and returns the
// example's cross-entropy.
inline double ModelSpec::ExampleLossAndGrad(const ParamVector& params,
                                            const Example& example,
                                            std::span<double> grad_out,
                                            double weight) const {
  CheckInputs(params, example);
  const auto p = params.values();
  const auto x = std::span<const double>(example.features);
  const auto label = static_cast<std::size_t>(example.label);

  if (kind == ModelKind::kLogisticRegression) {
    const auto logits = Logits(params, example);
    const double lse = internal::LogSumExp(logits);
    const std::size_t bias_offset = num_classes * input_dim;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double dz =
          weight * (std::exp(logits[c] - lse) - (c == label ? 1.0 : 0.0));
      for (std::size_t j = 0; j < input_dim; ++j) {
        grad_out[c * input_dim + j] += dz * x[j];
      }
      grad_out[bias_offset + c] += dz;
    }
    return lse - logits[label];
  }

  const std::size_t w1_size = hidden_dim * input_dim;
  const std::size_t b1_off = w1_size;
  const std::size_t w2_off = b1_off + hidden_dim;
  const std::size_t b2_off = w2_off + num_classes * hidden_dim;
  std::vector<double> pre(hidden_dim);
  std::vector<double> hidden(hidden_dim);
  for (std::size_t h = 0; h < hidden_dim; ++h) {
    pre[h] = Dot(p.subspan(h * input_dim, input_dim), x) + p[b1_off + h];
    hidden[h] = std::max(0.0, pre[h]);
  }
  std::vector<double> logits(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    logits[c] =
        Dot(p.subspan(w2_off + c * hidden_dim, hidden_dim), hidden) + p[b2_off + c];
  }
  const double lse = internal::LogSumExp(logits);
  std::vector<double> dhidden(hidden_dim, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double dz = std::exp(logits[c] - lse) - (c == label ? 1.0 : 0.0);
    for (std::size_t h = 0; h < hidden_dim; ++h) {
      grad_out[w2_off + c * hidden_dim + h] += weight * dz * hidden[h];
      dhidden[h] += dz * p[w2_off + c * hidden_dim + h];
    }
    grad_out[b2_off + c] += weight * dz;
  }
  for (std::size_t h = 0; h < hidden_dim; ++h) {
    if (pre[h] <= 0.0) continue;
    const double dpre = weight * dhidden[h];
    for (std::size_t j = 0; j < input_dim; ++j) {
      grad_out[h * input_dim + j] += dpre * x[j];
    }
    grad_out[b1_off + h] += dpre;
  }
  return lse - logits[label];
}

inline double ModelSpec::Loss(const ParamVector& params, Batch batch) const {
  if (batch.empty()) throw Error("empty-batch");
  double total = 0.0;
  for (const auto& example : batch) {
    const auto logits = Logits(params, example);
    total += internal::LogSumExp(logits) -
             logits[static_cast<std::size_t>(example.label)];
  }
  return total / static_cast<double>(batch.size());
}

inline std::vector<ParamVector> ModelSpec::PerExampleGrads(
    const ParamVector& params, Batch batch) const {
  if (batch.empty()) throw Error("empty-batch");
  std::vector<ParamVector> grads;
  grads.reserve(batch.size());
  for (const auto& example : batch) {
    ParamVector g(ParamCount());
    ExampleLossAndGrad(params, example, g.values(), 1.0);
    grads.push_back(std::move(g));
  }
  return grads;
}

inline ParamVector ModelSpec::BatchGradient(const ParamVector& params,
                                            Batch batch) const {
  if (batch.empty()) throw Error("empty-batch");
  ParamVector g(ParamCount());
  const double weight = 1.0 / static_cast<double>(batch.size());
  for (const auto& example : batch) {
    ExampleLossAndGrad(params, example, g.values(), weight);
  }
  return g;
}

inline int ModelSpec::Predict(const ParamVector& params,
                              const Example& example) const {
  const auto logits = Logits(params, example);
  // max_element returns the first maximum, so ties go to the lowest class.
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                          logits.begin());
}

inline double ModelSpec::Accuracy(const ParamVector& params,
                                  Batch dataset) const {
  if (dataset.empty()) throw Error("empty-dataset");
  std::size_t correct = 0;
  for (const auto& example : dataset) {
    if (Predict(params, example) == example.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace dpfl

#endif  // DPFL_TENSOR_HPP_
