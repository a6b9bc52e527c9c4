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

// Multi-objective clipping-norm optimization.
//
// The clipping norm C is treated as a trainable scalar that minimizes
//
//     L(C) = L_model(C) + kappa * C
//
// where kappa trades utility (low model loss, favouring large C) against
// privacy-driven noise magnitude (sigma * C, favouring small C). C follows a
// gradient step with learning rate eta_C and is clamped from below:
//
//     C <- max(C - eta_C * grad_C, 1e-3)
//
// Two forms of grad_C are available:
//   kPaperEq10        grad_C = kappa - (dL_model/dC) / C
//   kDirectDerivative grad_C = dL_model/dC + kappa
// The first is the published update rule; the second is the literal
// derivative of L(C). They disagree in sign on the model-loss term.
//
// dL_model/dC has no closed form. It is estimated by probing: two virtual,
// noise-free clipped-SGD steps with clip norms C(1+h) and C(1-h) are taken
// from the current parameters and the batch loss is compared at each.

#ifndef DPFL_MOO_CLIPPING_HPP_
#define DPFL_MOO_CLIPPING_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dpfl/dp_mechanism.hpp"
#include "dpfl/error.hpp"
#include "dpfl/tensor.hpp"

namespace dpfl {

inline constexpr double kClipFloor = 1e-3;

enum class ClipGradientVariant { kPaperEq10, kDirectDerivative };

struct ClippingState {
  double clip_norm = 1.0;
  double kappa = 0.0;
  double eta_c = 0.01;
  double floor = kClipFloor;
  double probe_h = 0.1;
  ClipGradientVariant variant = ClipGradientVariant::kPaperEq10;

  void Validate() const {
    if (!(floor > 0.0)) throw Error("invalid-clipping-state", "floor must be > 0");
    if (!(clip_norm >= floor) || !std::isfinite(clip_norm)) {
      throw Error("invalid-clipping-state", "clip norm below floor");
    }
    if (!(kappa >= 0.0)) throw Error("invalid-clipping-state", "kappa < 0");
    if (!(eta_c > 0.0)) throw Error("invalid-clipping-state", "eta_C must be > 0");
    if (!(probe_h > 0.0 && probe_h < 1.0)) {
      throw Error("invalid-clipping-state", "probe_h must lie in (0, 1)");
    }
  }

  bool operator==(const ClippingState&) const = default;
};

inline double CompositeLoss(double model_loss, const ClippingState& state) {
  return model_loss + state.kappa * state.clip_norm;
}

enum class ProbeScheme {
  kSymmetric,  // (L(C(1+h)) - L(C(1-h))) / (2Ch)
  kForward,    // (L(C(1+h)) - L(C)) / (Ch), usable at the floor
};

inline bool SymmetricProbeFits(const ClippingState& state) {
  return state.clip_norm * (1.0 - state.probe_h) >= state.floor;
}

// Estimates dL_model/dC on `batch` by finite differences over virtual
// noise-free clipped-SGD steps of size probe_lr. Reads only; no parameter,
// RNG or clipping state is touched.
template <DifferentiableModel Model>
double EstimateLossSensitivity(const Model& model, const ParamVector& params,
                               Batch batch, const ClippingState& state,
                               double probe_lr,
                               ProbeScheme scheme = ProbeScheme::kSymmetric) {
  if (batch.empty()) throw Error("empty-batch");
  if (scheme == ProbeScheme::kSymmetric && !SymmetricProbeFits(state)) {
    throw Error("probe-below-floor",
                "C(1-h) = " +
                    std::to_string(state.clip_norm * (1.0 - state.probe_h)));
  }
  const auto grads = model.PerExampleGrads(params, batch);
  const double inv_n = 1.0 / static_cast<double>(grads.size());
  auto probe_loss = [&](double clip_norm) {
    ParamVector moved = params;
    for (const auto& g : grads) {
      Axpy(-probe_lr * inv_n, ClipGradient(g, clip_norm), moved);
    }
    return model.Loss(moved, batch);
  };
  const double c = state.clip_norm;
  const double h = state.probe_h;
  if (scheme == ProbeScheme::kForward) {
    return (probe_loss(c * (1.0 + h)) - probe_loss(c)) / (c * h);
  }
  return (probe_loss(c * (1.0 + h)) - probe_loss(c * (1.0 - h))) /
         (2.0 * c * h);
}

inline double GradWrtClip(double dloss_dclip, const ClippingState& state) {
  if (state.variant == ClipGradientVariant::kDirectDerivative) {
    return dloss_dclip + state.kappa;
  }
  return state.kappa - dloss_dclip / state.clip_norm;
}

inline ClippingState UpdateClip(ClippingState state, double grad_c) {
  state.clip_norm = std::max(state.clip_norm - state.eta_c * grad_c, state.floor);
  return state;
}

// Scalar objective f(C) with a declared Polyak-Lojasiewicz constant mu and
// gradient-Lipschitz constant (smoothness).
struct SyntheticPLObjective {
  double mu = 1.0;
  double smoothness = 1.0;
  double optimum_value = 0.0;
  double optimum = 0.0;
  std::function<double(double)> value;
  std::function<double(double)> gradient;

  // f(C) = a (C - c*)^2 + f*, whose tightest PL constant equals its
  // smoothness 2a.
  static SyntheticPLObjective Quadratic(double a, double minimizer,
                                        double min_value = 0.0) {
    SyntheticPLObjective f;
    f.mu = 2.0 * a;
    f.smoothness = 2.0 * a;
    f.optimum_value = min_value;
    f.optimum = minimizer;
    f.value = [=](double c) { return a * (c - minimizer) * (c - minimizer) + min_value; };
    f.gradient = [=](double c) { return 2.0 * a * (c - minimizer); };
    return f;
  }
};

// Runs plain gradient descent C <- C - eta_c f'(C) and returns the gaps
// f(C_t) - f* for t = 0..steps.
inline std::vector<double> PlDescentTrace(const SyntheticPLObjective& objective,
                                          double c0, double eta_c, int steps) {
  if (!(eta_c > 0.0) || eta_c > 2.0 / objective.smoothness) {
    throw Error("unstable-step-size",
                "eta_c = " + std::to_string(eta_c) + ", limit 2/L = " +
                    std::to_string(2.0 / objective.smoothness));
  }
  std::vector<double> gaps;
  gaps.reserve(static_cast<std::size_t>(std::max(steps, 0)) + 1);
  double c = c0;
  gaps.push_back(objective.value(c) - objective.optimum_value);
  for (int t = 0; t < steps; ++t) {
    c -= eta_c * objective.gradient(c);
    gaps.push_back(objective.value(c) - objective.optimum_value);
  }
  return gaps;
}

}  // namespace dpfl

#endif  // DPFL_MOO_CLIPPING_HPP_
