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

#ifndef DPFL_EXPERIMENT_CONFIG_HPP_
#define DPFL_EXPERIMENT_CONFIG_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpfl/data.hpp"
#include "dpfl/error.hpp"
#include "dpfl/moo_clipping.hpp"
#include "dpfl/tensor.hpp"

namespace dpfl {

inline constexpr int kSchemaVersion = 1;

// Clip norm used for non-private runs; large enough never to bind.
inline constexpr double kNonPrivateClipNorm = 1e9;

class ValidationError : public Error {
 public:
  ValidationError(const std::string& key, const std::string& detail)
      : Error("validation-error(" + key + ")", detail), key_(key) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

enum class DataSource { kSynthetic, kIdx };
enum class TrainingMode { kAdaptive, kFixedClip, kNonPrivate };
enum class LrSchedule { kConstant, kInverseDecay };
enum class ClipCadence { kPerBatch, kPerRound };

struct DataConfig {
  DataSource source = DataSource::kSynthetic;
  std::optional<std::uint64_t> seed;  // defaults to the run's master seed

  std::size_t synthetic_classes = 2;
  std::size_t synthetic_input_dim = 20;
  std::size_t synthetic_examples = 2500;
  double synthetic_separation = 3.0;

  std::string train_images;
  std::string train_labels;
  std::string test_images;  // optional; empty means split the train file
  std::string test_labels;
  std::vector<int> classes;  // empty keeps every class
  std::size_t max_train = 0;  // 0 = unlimited
  std::size_t max_test = 0;
  bool fallback_to_synthetic = false;

  double test_fraction = 0.2;
  PartitionScheme partition = PartitionScheme::kIid;
  double dirichlet_beta = 0.5;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kLogisticRegression;
  std::size_t hidden_dim = 0;
};

struct FederationConfig {
  std::size_t num_clients = 10;
  double selection_prob = 1.0;
  std::int64_t rounds = 30;
  std::int64_t local_batches = 5;
  double expected_batch = 20.0;  // Poisson rate = expected_batch / n_k
  LrSchedule lr_schedule = LrSchedule::kConstant;
  double lr = 0.5;
  TrainingMode mode = TrainingMode::kAdaptive;
  bool reset_clip_each_round = false;

  // constant: lr; inverse-decay: lr / t for round t = 1, 2, ...
  double LearningRate(std::int64_t round) const {
    if (lr_schedule == LrSchedule::kInverseDecay) {
      return lr / static_cast<double>(std::max<std::int64_t>(round, 1));
    }
    return lr;
  }
};

struct DpConfig {
  std::optional<double> sigma;
  std::optional<double> target_epsilon;
  double delta = 1e-5;
};

struct MooConfig {
  double kappa = 0.01;
  double eta_c = 0.01;
  double probe_h = 0.1;
  ClipGradientVariant variant = ClipGradientVariant::kPaperEq10;
  double initial_clip = 1.0;
  ClipCadence cadence = ClipCadence::kPerBatch;

  ClippingState InitialState() const {
    return ClippingState{.clip_norm = initial_clip,
                         .kappa = kappa,
                         .eta_c = eta_c,
                         .floor = kClipFloor,
                         .probe_h = probe_h,
                         .variant = variant};
  }
};

struct OutputConfig {
  std::string dir;
  bool write_csv = true;
  bool write_json = true;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  DataConfig data;
  ModelConfig model;
  FederationConfig federation;
  DpConfig dp;
  MooConfig moo;
  OutputConfig output;

  void Validate() const;
};

inline void ExperimentConfig::Validate() const {
  auto require = [](bool ok, const char* key, const std::string& detail) {
    if (!ok) throw ValidationError(key, detail);
  };
  require(schema_version == kSchemaVersion, "schema_version",
          "unsupported schema version " + std::to_string(schema_version));

  if (data.source == DataSource::kSynthetic || data.fallback_to_synthetic) {
    require(data.synthetic_classes >= 2, "data.synthetic.num_classes", "must be >= 2");
    require(data.synthetic_input_dim >= 1, "data.synthetic.input_dim", "must be >= 1");
    require(data.synthetic_examples >= data.synthetic_classes,
            "data.synthetic.num_examples", "must be >= num_classes");
    require(std::isfinite(data.synthetic_separation) && data.synthetic_separation >= 0.0,
            "data.synthetic.separation", "must be finite and >= 0");
  }
  if (data.source == DataSource::kIdx) {
    require(!data.train_images.empty(), "data.idx.train_images", "required");
    require(!data.train_labels.empty(), "data.idx.train_labels", "required");
    require(data.test_images.empty() == data.test_labels.empty(), "data.idx.test_labels",
            "test images and labels must be given together");
    require(data.classes.empty() || data.classes.size() >= 2, "data.idx.classes",
            "need at least two classes");
  }
  require(data.test_fraction > 0.0 && data.test_fraction < 1.0, "data.test_fraction",
          "must lie in (0, 1)");
  require(data.dirichlet_beta > 0.0, "data.partition.beta", "must be > 0");

  if (model.kind == ModelKind::kMlp1Hidden) {
    require(model.hidden_dim > 0, "model.hidden_dim", "mlp-1hidden needs hidden_dim > 0");
  } else {
    require(model.hidden_dim == 0, "model.hidden_dim",
            "logistic-regression has no hidden layer");
  }

  const auto& fed = federation;
  require(fed.num_clients >= 1, "federation.num_clients", "must be >= 1");
  require(fed.selection_prob > 0.0 && fed.selection_prob <= 1.0,
          "federation.selection_prob", "must lie in (0, 1]");
  require(fed.rounds >= 0, "federation.rounds", "must be >= 0");
  require(fed.local_batches >= 0, "federation.local_batches", "must be >= 0");
  require(fed.expected_batch > 0.0, "federation.expected_batch", "must be > 0");
  require(fed.lr > 0.0 && std::isfinite(fed.lr), "federation.lr", "must be > 0");

  if (fed.mode != TrainingMode::kNonPrivate) {
    require(dp.sigma.has_value() != dp.target_epsilon.has_value(), "dp",
            "set exactly one of dp.sigma and dp.target_epsilon");
  } else {
    require(!(dp.sigma.has_value() && dp.target_epsilon.has_value()), "dp",
            "set at most one of dp.sigma and dp.target_epsilon");
  }
  if (dp.sigma) require(*dp.sigma > 0.0, "dp.sigma", "must be > 0");
  if (dp.target_epsilon) {
    require(*dp.target_epsilon > 0.0, "dp.target_epsilon", "must be > 0");
  }
  require(dp.delta > 0.0 && dp.delta < 1.0, "dp.delta", "must lie in (0, 1)");

  require(moo.initial_clip >= kClipFloor && std::isfinite(moo.initial_clip),
          "moo.initial_C", "must be >= 1e-3");
  require(moo.kappa >= 0.0, "moo.kappa", "must be >= 0");
  require(moo.eta_c > 0.0, "moo.eta_C", "must be > 0");
  require(moo.probe_h > 0.0 && moo.probe_h < 1.0, "moo.probe_h", "must lie in (0, 1)");
}

}  // namespace dpfl

#endif  // DPFL_EXPERIMENT_CONFIG_HPP_
