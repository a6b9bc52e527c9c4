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

// Per-example clipping and the Gaussian mechanism used inside local DP-SGD.

#ifndef DPFL_DP_MECHANISM_HPP_
#define DPFL_DP_MECHANISM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "dpfl/error.hpp"
#include "dpfl/random.hpp"
#include "dpfl/tensor.hpp"

namespace dpfl {

struct NoiseConfig {
  double sigma = 0.0;  // noise multiplier; per-coordinate std is sigma * C
  StreamKey stream;
};

struct ClipReport {
  std::size_t num_clipped = 0;
  std::size_t num_total = 0;
  double mean_preclip_norm = 0.0;
  double clip_fraction = 0.0;
};

// Returns g / max(1, ||g|| / C). The result never exceeds C in computed norm,
// which makes clipping exactly idempotent.
inline ParamVector ClipGradient(const ParamVector& g, double clip_norm) {
  if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
    throw Error("invalid-clip-norm", std::to_string(clip_norm));
  }
  const double norm = Norm2(g);
  if (norm <= clip_norm) return g;
  double scale = clip_norm / norm;
  ParamVector out = Scaled(g, scale);
  while (Norm2(out) > clip_norm) {
    scale = std::nextafter(scale, 0.0);
    out = Scaled(g, scale);
  }
  return out;
}

// Draws one noise vector with per-coordinate standard deviation sigma * C.
inline ParamVector GaussianNoise(std::size_t dim, double sigma,
                                 double clip_norm, RngStream& rng) {
  ParamVector noise(dim);
  const double stddev = sigma * clip_norm;
  for (std::size_t i = 0; i < dim; ++i) noise[i] = stddev * rng.Gaussian();
  return noise;
}

// (sum_i clipped_i + N(0, sigma^2 C^2 I)) / batch_size
inline ParamVector NoisyMean(std::span<const ParamVector> clipped,
                             double clip_norm, double sigma,
                             std::size_t batch_size, RngStream& rng) {
  if (clipped.empty() || batch_size == 0) throw Error("empty-batch");
  if (sigma < 0.0) throw Error("invalid-sigma", std::to_string(sigma));
  const std::size_t dim = clipped.front().dim();
  ParamVector sum(dim);
  for (const auto& g : clipped) {
    if (g.dim() != dim) throw Error("shape-mismatch", "noisy mean");
    if (Norm2(g) > clip_norm * (1.0 + 1e-9)) {
      throw Error("unclipped-input",
                  "norm " + std::to_string(Norm2(g)) + " exceeds C = " +
                      std::to_string(clip_norm));
    }
    Axpy(1.0, g, sum);
  }
  if (sigma > 0.0) Axpy(1.0, GaussianNoise(dim, sigma, clip_norm, rng), sum);
  return Scaled(sum, 1.0 / static_cast<double>(batch_size));
}

inline ParamVector NoisyMean(std::span<const ParamVector> clipped,
                             double clip_norm, const NoiseConfig& noise,
                             std::size_t batch_size) {
  RngStream rng(noise.stream);
  return NoisyMean(clipped, clip_norm, noise.sigma, batch_size, rng);
}

// Clips every per-example gradient of the batch to C. Fills `report`.
template <DifferentiableModel Model>
std::vector<ParamVector> ClippedGradients(const Model& model,
                                          const ParamVector& params,
                                          Batch batch, double clip_norm,
                                          ClipReport& report) {
  auto grads = model.PerExampleGrads(params, batch);
  report = ClipReport{};
  report.num_total = grads.size();
  double norm_sum = 0.0;
  for (auto& g : grads) {
    const double norm = Norm2(g);
    norm_sum += norm;
    if (norm > clip_norm) ++report.num_clipped;
    g = ClipGradient(g, clip_norm);
  }
  report.mean_preclip_norm = norm_sum / static_cast<double>(grads.size());
  report.clip_fraction = static_cast<double>(report.num_clipped) /
                         static_cast<double>(report.num_total);
  return grads;
}

// One DP-SGD update: params - lr * NoisyMean(clip(per-example grads)).
template <DifferentiableModel Model>
std::pair<ParamVector, ClipReport> DpSgdStep(const Model& model,
                                             const ParamVector& params,
                                             Batch batch, double clip_norm,
                                             double sigma, double lr,
                                             RngStream& rng) {
  if (batch.empty()) throw Error("empty-batch");
  ClipReport report;
  const auto clipped = ClippedGradients(model, params, batch, clip_norm, report);
  const auto update = NoisyMean(clipped, clip_norm, sigma, batch.size(), rng);
  ParamVector next = params;
  Axpy(-lr, update, next);
  return {std::move(next), report};
}

template <DifferentiableModel Model>
std::pair<ParamVector, ClipReport> DpSgdStep(const Model& model,
                                             const ParamVector& params,
                                             Batch batch, double clip_norm,
                                             const NoiseConfig& noise,
                                             double lr) {
  RngStream rng(noise.stream);
  return DpSgdStep(model, params, batch, clip_norm, noise.sigma, lr, rng);
}

}  // namespace dpfl

#endif  // DPFL_DP_MECHANISM_HPP_
