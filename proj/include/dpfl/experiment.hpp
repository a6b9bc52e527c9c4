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

// Turns an ExperimentConfig into a ready-to-run simulation and drives it for
// the configured number of rounds (no early stopping).

#ifndef DPFL_EXPERIMENT_HPP_
#define DPFL_EXPERIMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "dpfl/accountant.hpp"
#include "dpfl/data.hpp"
#include "dpfl/experiment_config.hpp"
#include "dpfl/federation.hpp"

namespace dpfl {

struct LoadedData {
  Dataset train;
  Dataset test;
  bool used_fallback = false;
};

inline LoadedData LoadData(const DataConfig& data, std::uint64_t seed) {
  const std::uint64_t data_seed = data.seed.value_or(seed);
  auto synthetic = [&] {
    const auto all = SynthBlobs(data.synthetic_classes, data.synthetic_input_dim,
                                data.synthetic_examples, data.synthetic_separation,
                                data_seed);
    auto [train, test] = TrainTestSplit(all, data.test_fraction, data_seed);
    return LoadedData{std::move(train), std::move(test), false};
  };
  if (data.source == DataSource::kSynthetic) return synthetic();

  const bool present =
      std::filesystem::exists(data.train_images) &&
      std::filesystem::exists(data.train_labels) &&
      (data.test_images.empty() || (std::filesystem::exists(data.test_images) &&
                                    std::filesystem::exists(data.test_labels)));
  if (!present && data.fallback_to_synthetic) {
    auto loaded = synthetic();
    loaded.used_fallback = true;
    return loaded;
  }

  auto restrict = [&](const Dataset& d, std::size_t limit) {
    if (data.classes.empty() && limit == 0) return d;
    std::vector<int> classes = data.classes;
    if (classes.empty()) {
      for (std::size_t c = 0; c < d.num_classes; ++c) classes.push_back(static_cast<int>(c));
    }
    return SelectClasses(d, classes, limit);
  };
  LoadedData out;
  const auto train_all = ReadIdx(data.train_images, data.train_labels);
  if (!data.test_images.empty()) {
    out.train = restrict(train_all, data.max_train);
    out.test = restrict(ReadIdx(data.test_images, data.test_labels), data.max_test);
    // Both sides must agree on the label space.
    const auto classes = std::max(out.train.num_classes, out.test.num_classes);
    out.train.num_classes = out.test.num_classes = classes;
  } else {
    auto [train, test] =
        TrainTestSplit(restrict(train_all, 0), data.test_fraction, data_seed);
    if (data.max_train != 0 && train.examples.size() > data.max_train) {
      train.examples.resize(data.max_train);
    }
    if (data.max_test != 0 && test.examples.size() > data.max_test) {
      test.examples.resize(data.max_test);
    }
    out.train = std::move(train);
    out.test = std::move(test);
  }
  return out;
}

// Number of noisy batch updates the configuration plans for, assuming every
// Poisson draw is nonempty and ceil(K * q_c) clients per round.
inline std::int64_t PlannedPrivacySteps(const FederationConfig& fed) {
  const auto per_round = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(fed.num_clients) * fed.selection_prob - 1e-12));
  return fed.rounds * fed.local_batches * std::max<std::int64_t>(per_round, 1);
}

struct PreparedExperiment {
  SimulationState state;
  LocalTrainingSetup setup;
  PrivacyLedger ledger;
  double sampling_rate = 1.0;
  std::int64_t planned_steps = 0;
  bool used_fallback_data = false;
};

// Loads data, partitions it, resolves sigma (calibrating to a target epsilon
// when requested) and initializes the global model.
inline PreparedExperiment PrepareExperiment(const ExperimentConfig& config,
                                            std::uint64_t seed) {
  config.Validate();
  auto data = LoadData(config.data, seed);
  if (data.train.size() == 0) throw Error("empty-dataset", "training split is empty");

  PreparedExperiment prepared;
  prepared.used_fallback_data = data.used_fallback;
  auto& state = prepared.state;
  state.model = config.model.kind == ModelKind::kMlp1Hidden
                    ? ModelSpec::Mlp(data.train.input_dim, config.model.hidden_dim,
                                     data.train.num_classes)
                    : ModelSpec::Logistic(data.train.input_dim, data.train.num_classes);
  state.model.Validate();
  state.global_params = state.model.InitParams(seed);

  const PartitionSpec partition{.scheme = config.data.partition,
                                .beta = config.data.dirichlet_beta,
                                .num_clients = config.federation.num_clients,
                                .seed = seed};
  state.shards = MakeClientShards(data.train, partition, config.moo.InitialState());
  state.train = std::move(data.train);
  state.test = std::move(data.test);

  std::size_t smallest = std::numeric_limits<std::size_t>::max();
  for (const auto& shard : state.shards) smallest = std::min(smallest, shard.n());
  prepared.sampling_rate =
      std::min(1.0, config.federation.expected_batch / static_cast<double>(smallest));
  prepared.planned_steps = PlannedPrivacySteps(config.federation);

  double sigma = 0.0;
  if (config.federation.mode != TrainingMode::kNonPrivate) {
    sigma = config.dp.sigma ? *config.dp.sigma
                            : CalibrateSigma(prepared.sampling_rate, prepared.planned_steps,
                                             *config.dp.target_epsilon, config.dp.delta);
  }
  prepared.setup = LocalTrainingSetup{.federation = config.federation,
                                      .sigma = sigma,
                                      .cadence = config.moo.cadence,
                                      .seed = seed};
  prepared.ledger = PrivacyLedger(prepared.sampling_rate, sigma, config.dp.delta);
  return prepared;
}

using RoundCallback = std::function<void(const RoundRecord&)>;

inline std::vector<RoundRecord> RunPrepared(PreparedExperiment& prepared,
                                            std::size_t workers = 1,
                                            const RoundCallback& on_round = {}) {
  std::vector<RoundRecord> records;
  const auto rounds = prepared.setup.federation.rounds;
  records.reserve(static_cast<std::size_t>(std::max<std::int64_t>(rounds, 0)));
  for (std::int64_t t = 0; t < rounds; ++t) {
    records.push_back(RunRound(prepared.state, prepared.setup, prepared.ledger, workers));
    if (on_round) on_round(records.back());
  }
  return records;
}

inline std::vector<RoundRecord> RunExperiment(const ExperimentConfig& config,
                                              std::uint64_t seed,
                                              std::size_t workers = 1) {
  auto prepared = PrepareExperiment(config, seed);
  return RunPrepared(prepared, workers);
}

}  // namespace dpfl

#endif  // DPFL_EXPERIMENT_HPP_
