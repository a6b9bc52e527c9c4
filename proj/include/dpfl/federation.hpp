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

// Synchronous federated rounds with sample-level DP.
//
// Server loop, one round t:
//   1. select clients independently with probability q_c (redraw if empty)
//   2. each selected client runs ClientTraining from the current global model
//   3. aggregate: theta <- sum_k (n_k / n_S) theta_k, in client-id order
//   4. compose the privacy ledger with the number of noisy batch updates
//
// ClientTraining runs N local batches. Each batch is Poisson sampled with
// rate expected_batch / n_k; empty draws are skipped. In adaptive mode the
// client first updates its clipping norm from a probe-based estimate of
// dL_model/dC, then takes one DP-SGD step with that norm. Clipping state is
// private to the client and persists across rounds.

#ifndef DPFL_FEDERATION_HPP_
#define DPFL_FEDERATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <thread>
#include <utility>
#include <vector>

#include "dpfl/accountant.hpp"
#include "dpfl/data.hpp"
#include "dpfl/dp_mechanism.hpp"
#include "dpfl/error.hpp"
#include "dpfl/experiment_config.hpp"
#include "dpfl/moo_clipping.hpp"
#include "dpfl/random.hpp"
#include "dpfl/tensor.hpp"

namespace dpfl {

struct ClientShard {
  int client_id = 0;
  std::vector<Example> dataset;
  ClippingState clipping;
  ClippingState initial_clipping;

  std::size_t n() const { return dataset.size(); }
};

inline std::vector<ClientShard> MakeClientShards(const Dataset& dataset,
                                                 const PartitionSpec& spec,
                                                 const ClippingState& clipping) {
  const auto parts = Partition(dataset, spec);
  std::vector<ClientShard> shards;
  shards.reserve(parts.size());
  for (std::size_t k = 0; k < parts.size(); ++k) {
    ClientShard shard;
    shard.client_id = static_cast<int>(k);
    shard.clipping = clipping;
    shard.initial_clipping = clipping;
    shard.dataset.reserve(parts[k].size());
    for (auto idx : parts[k]) shard.dataset.push_back(dataset.examples[idx]);
    shards.push_back(std::move(shard));
  }
  return shards;
}

struct RoundRecord {
  std::int64_t round_index = 0;
  std::vector<int> selected_client_ids;
  ParamVector global_params_after;
  double mean_clip = 0.0;
  double clip_fraction = 0.0;
  double epsilon_so_far = 0.0;
  double best_order = 0.0;
  std::int64_t privacy_steps = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
};

// Everything ClientTraining needs beyond the shard and the global model.
struct LocalTrainingSetup {
  FederationConfig federation;
  double sigma = 0.0;          // resolved noise multiplier
  ClipCadence cadence = ClipCadence::kPerBatch;
  std::uint64_t seed = 0;      // master seed
};

struct LocalResult {
  ParamVector params;
  ClippingState clipping;
  ClipReport report;
  std::int64_t batches_executed = 0;
};

inline constexpr int kMaxSelectionRedraws = 100;

inline std::vector<int> SelectClients(std::size_t num_clients,
                                      double selection_prob, RngStream& rng) {
  if (!(selection_prob > 0.0 && selection_prob <= 1.0)) {
    throw Error("invalid-selection-prob", std::to_string(selection_prob));
  }
  for (int attempt = 0; attempt <= kMaxSelectionRedraws; ++attempt) {
    std::vector<int> selected;
    for (std::size_t k = 0; k < num_clients; ++k) {
      if (rng.Bernoulli(selection_prob)) selected.push_back(static_cast<int>(k));
    }
    if (!selected.empty()) return selected;
  }
  throw Error("empty-selection",
              "no client selected after " + std::to_string(kMaxSelectionRedraws) +
                  " redraws");
}

inline std::vector<int> SelectClients(std::size_t num_clients,
                                      double selection_prob, std::uint64_t seed,
                                      std::int64_t round) {
  RngStream rng({.seed = seed,
                 .purpose = StreamPurpose::kClientSelection,
                 .round = static_cast<std::uint64_t>(round)});
  return SelectClients(num_clients, selection_prob, rng);
}

// Poisson-samples one local batch: every example is kept independently with
// probability `rate`.
inline std::vector<Example> PoissonBatch(const std::vector<Example>& dataset,
                                         double rate, RngStream& rng) {
  std::vector<Example> batch;
  for (const auto& e : dataset) {
    if (rng.Bernoulli(rate)) batch.push_back(e);
  }
  return batch;
}

namespace internal {

template <DifferentiableModel Model>
ClippingState AdaptClip(const Model& model, const ParamVector& params,
                        Batch batch, const ClippingState& state, double lr) {
  // At the floor the symmetric probe would dip below 1e-3; fall back to a
  // forward difference there.
  const auto scheme = SymmetricProbeFits(state) ? ProbeScheme::kSymmetric
                                                : ProbeScheme::kForward;
  const double sensitivity =
      EstimateLossSensitivity(model, params, batch, state, lr, scheme);
  return UpdateClip(state, GradWrtClip(sensitivity, state));
}

}  // namespace internal

template <DifferentiableModel Model>
LocalResult ClientTraining(const Model& model, const ParamVector& global_params,
                           const ClientShard& shard,
                           const LocalTrainingSetup& setup, std::int64_t round) {
  if (shard.dataset.empty()) throw Error("empty-shard", std::to_string(shard.client_id));
  const auto& fed = setup.federation;
  const double lr = fed.LearningRate(round);
  const double rate =
      std::min(1.0, fed.expected_batch / static_cast<double>(shard.n()));
  const bool adaptive = fed.mode == TrainingMode::kAdaptive;
  const bool private_mode = fed.mode != TrainingMode::kNonPrivate;
  const double sigma = private_mode ? setup.sigma : 0.0;

  LocalResult result;
  result.params = global_params;
  result.clipping =
      fed.reset_clip_each_round ? shard.initial_clipping : shard.clipping;

  if (adaptive && setup.cadence == ClipCadence::kPerRound && fed.local_batches > 0) {
    result.clipping = internal::AdaptClip(model, result.params, shard.dataset,
                                          result.clipping, lr);
    if (!std::isfinite(result.clipping.clip_norm)) throw NumericError(round);
  }

  double norm_weighted = 0.0;
  for (std::int64_t b = 0; b < fed.local_batches; ++b) {
    const StreamKey key{.seed = setup.seed,
                        .purpose = StreamPurpose::kBatchSampling,
                        .round = static_cast<std::uint64_t>(round),
                        .client = static_cast<std::uint64_t>(shard.client_id),
                        .batch = static_cast<std::uint64_t>(b)};
    RngStream batch_rng(key);
    const auto batch = PoissonBatch(shard.dataset, rate, batch_rng);
    if (batch.empty()) continue;

    if (adaptive && setup.cadence == ClipCadence::kPerBatch) {
      result.clipping = internal::AdaptClip(model, result.params, batch,
                                            result.clipping, lr);
      if (!std::isfinite(result.clipping.clip_norm)) throw NumericError(round);
    }
    const double clip_norm =
        private_mode ? result.clipping.clip_norm : kNonPrivateClipNorm;
    StreamKey noise_key = key;
    noise_key.purpose = StreamPurpose::kGradientNoise;
    RngStream noise_rng(noise_key);
    auto [next, report] =
        DpSgdStep(model, result.params, batch, clip_norm, sigma, lr, noise_rng);
    if (!next.AllFinite()) throw NumericError(round);
    result.params = std::move(next);
    result.report.num_clipped += report.num_clipped;
    result.report.num_total += report.num_total;
    norm_weighted += report.mean_preclip_norm * static_cast<double>(report.num_total);
    ++result.batches_executed;
  }
  if (result.report.num_total > 0) {
    const auto total = static_cast<double>(result.report.num_total);
    result.report.mean_preclip_norm = norm_weighted / total;
    result.report.clip_fraction =
        static_cast<double>(result.report.num_clipped) / total;
  }
  return result;
}

inline std::vector<double> AggregationWeights(const std::vector<std::size_t>& sizes) {
  double total = 0.0;
  for (auto n : sizes) total += static_cast<double>(n);
  std::vector<double> weights;
  weights.reserve(sizes.size());
  for (auto n : sizes) weights.push_back(static_cast<double>(n) / total);
  return weights;
}

// Weighted mean with weights n_k / sum(n), folded in ascending client id as a
// running mean so that identical inputs come back bit-for-bit.
inline ParamVector Aggregate(const std::vector<std::pair<int, ParamVector>>& updates,
                             const std::map<int, std::size_t>& shard_sizes) {
  if (updates.empty()) throw Error("no-updates");
  auto ordered = updates;
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t dim = ordered.front().second.dim();
  ParamVector mean = ordered.front().second;
  double seen = 0.0;
  for (const auto& [client, params] : ordered) {
    if (params.dim() != dim) throw Error("shape-mismatch", "client " + std::to_string(client));
    const auto it = shard_sizes.find(client);
    if (it == shard_sizes.end() || it->second == 0) {
      throw Error("missing-shard-size", std::to_string(client));
    }
    const auto weight = static_cast<double>(it->second);
    seen += weight;
    const double step = weight / seen;
    for (std::size_t i = 0; i < dim; ++i) mean[i] += step * (params[i] - mean[i]);
  }
  return mean;
}

struct SimulationState {
  ModelSpec model;
  ParamVector global_params;
  std::vector<ClientShard> shards;
  Dataset train;
  Dataset test;
  std::int64_t round = 0;
};

// One synchronous round. Selected clients may train on up to `workers`
// threads; results do not depend on the thread count.
inline RoundRecord RunRound(SimulationState& state, const LocalTrainingSetup& setup,
                            PrivacyLedger& ledger, std::size_t workers = 1) {
  const std::int64_t round = state.round + 1;
  const auto selected = SelectClients(state.shards.size(),
                                      setup.federation.selection_prob, setup.seed, round);

  std::vector<LocalResult> results(selected.size());
  std::vector<std::exception_ptr> errors(selected.size());
  auto train_slot = [&](std::size_t slot) {
    try {
      const auto& shard = state.shards[static_cast<std::size_t>(selected[slot])];
      results[slot] =
          ClientTraining(state.model, state.global_params, shard, setup, round);
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(workers, 1, selected.size());
  if (threads == 1) {
    for (std::size_t slot = 0; slot < selected.size(); ++slot) train_slot(slot);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t slot = w; slot < selected.size(); slot += threads) {
          train_slot(slot);
        }
      });
    }
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  std::vector<std::pair<int, ParamVector>> updates;
  std::map<int, std::size_t> sizes;
  std::int64_t steps = 0;
  std::size_t clipped = 0;
  std::size_t seen = 0;
  double clip_sum = 0.0;
  const bool private_mode = setup.federation.mode != TrainingMode::kNonPrivate;
  for (std::size_t slot = 0; slot < selected.size(); ++slot) {
    auto& shard = state.shards[static_cast<std::size_t>(selected[slot])];
    auto& local = results[slot];
    shard.clipping = local.clipping;
    sizes[shard.client_id] = shard.n();
    steps += local.batches_executed;
    clipped += local.report.num_clipped;
    seen += local.report.num_total;
    clip_sum += private_mode ? local.clipping.clip_norm : kNonPrivateClipNorm;
    updates.emplace_back(shard.client_id, std::move(local.params));
  }

  auto next = Aggregate(updates, sizes);
  if (!next.AllFinite()) throw NumericError(round);
  state.global_params = std::move(next);
  state.round = round;
  ledger = ledger.Compose(steps);

  RoundRecord record;
  record.round_index = round;
  record.selected_client_ids = selected;
  record.global_params_after = state.global_params;
  record.mean_clip = clip_sum / static_cast<double>(selected.size());
  record.clip_fraction =
      seen > 0 ? static_cast<double>(clipped) / static_cast<double>(seen) : 0.0;
  const auto eps = ledger.ToEpsilon();
  record.epsilon_so_far = eps.epsilon;
  record.best_order = eps.best_order;
  record.privacy_steps = ledger.steps();
  record.train_loss = state.model.Loss(state.global_params, state.train.view());
  record.test_accuracy = state.test.size() > 0
                             ? state.model.Accuracy(state.global_params, state.test.view())
                             : 0.0;
  if (!std::isfinite(record.train_loss)) throw NumericError(round);
  return record;
}

}  // namespace dpfl

#endif  // DPFL_FEDERATION_HPP_
