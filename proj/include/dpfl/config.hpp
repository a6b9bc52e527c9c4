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

// Experiment configuration files.
//
// Configs are YAML documents (comments allowed) with a required
// `schema_version: 1` and the sections data / model / federation / dp / moo /
// output. Unknown keys are rejected so that a typo cannot silently fall back
// to a default. See configs/ for annotated examples.
//
// ConfigToJson() produces the fully resolved echo that is stored in
// summary.json. Because JSON is valid YAML, LoadConfig() accepts either a
// config file or a summary.json (it then reads the "config" member).

#ifndef DPFL_CONFIG_HPP_
#define DPFL_CONFIG_HPP_

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpfl/error.hpp"
#include "dpfl/experiment_config.hpp"

namespace dpfl {

namespace internal {

template <typename Enum>
struct EnumNames;

template <>
struct EnumNames<DataSource> {
  static inline const std::map<std::string, DataSource> kByName = {
      {"synthetic", DataSource::kSynthetic}, {"idx", DataSource::kIdx}};
};
template <>
struct EnumNames<PartitionScheme> {
  static inline const std::map<std::string, PartitionScheme> kByName = {
      {"iid", PartitionScheme::kIid}, {"dirichlet", PartitionScheme::kDirichlet}};
};
template <>
struct EnumNames<ModelKind> {
  static inline const std::map<std::string, ModelKind> kByName = {
      {"logistic-regression", ModelKind::kLogisticRegression},
      {"mlp-1hidden", ModelKind::kMlp1Hidden}};
};
template <>
struct EnumNames<LrSchedule> {
  static inline const std::map<std::string, LrSchedule> kByName = {
      {"constant", LrSchedule::kConstant}, {"inverse-decay", LrSchedule::kInverseDecay}};
};
template <>
struct EnumNames<TrainingMode> {
  static inline const std::map<std::string, TrainingMode> kByName = {
      {"adaptive", TrainingMode::kAdaptive},
      {"fixed-clip", TrainingMode::kFixedClip},
      {"non-private", TrainingMode::kNonPrivate}};
};
template <>
struct EnumNames<ClipGradientVariant> {
  static inline const std::map<std::string, ClipGradientVariant> kByName = {
      {"paper-eq10", ClipGradientVariant::kPaperEq10},
      {"direct-derivative", ClipGradientVariant::kDirectDerivative}};
};
template <>
struct EnumNames<ClipCadence> {
  static inline const std::map<std::string, ClipCadence> kByName = {
      {"per-batch", ClipCadence::kPerBatch}, {"per-round", ClipCadence::kPerRound}};
};

}  // namespace internal

template <typename Enum>
std::string ToString(Enum value) {
  for (const auto& [name, v] : internal::EnumNames<Enum>::kByName) {
    if (v == value) return name;
  }
  return "unknown";
}

template <typename Enum>
Enum ParseEnum(const std::string& name, const std::string& key) {
  const auto& names = internal::EnumNames<Enum>::kByName;
  const auto it = names.find(name);
  if (it == names.end()) {
    std::string allowed;
    for (const auto& [n, v] : names) allowed += (allowed.empty() ? "" : ", ") + n;
    throw ValidationError(key, "'" + name + "' is not one of: " + allowed);
  }
  return it->second;
}

// Accepts the CLI spellings adaptive | fixed | nonprivate as well as the
// config spellings.
inline TrainingMode ParseModeFlag(const std::string& name) {
  if (name == "fixed") return TrainingMode::kFixedClip;
  if (name == "nonprivate") return TrainingMode::kNonPrivate;
  return ParseEnum<TrainingMode>(name, "mode");
}

namespace internal {

class Section {
 public:
  Section(const YAML::Node& node, std::string name,
          std::set<std::string> allowed)
      : node_(node), name_(std::move(name)) {
    if (!Present()) return;
    if (!node_.IsMap()) throw ValidationError(name_, "expected a mapping");
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) throw ValidationError(Key(key), "unknown key");
    }
  }

  std::string Key(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  bool Has(const std::string& key) const {
    if (!Present()) return false;
    const YAML::Node value = node_[key];
    return value && !value.IsNull();
  }

  Section Child(const std::string& key, std::set<std::string> allowed) const {
    return Section(Present() ? node_[key] : YAML::Node(), Key(key), std::move(allowed));
  }

  template <typename T>
  void Read(const std::string& key, T& out) const {
    if (!Has(key)) return;
    try {
      out = node_[key].as<T>();
    } catch (const YAML::Exception&) {
      throw ValidationError(Key(key), "wrong value type");
    }
  }

  template <typename T>
  void ReadOptional(const std::string& key, std::optional<T>& out) const {
    if (!Has(key)) return;
    T value{};
    Read(key, value);
    out = value;
  }

  template <typename Enum>
  void ReadEnum(const std::string& key, Enum& out) const {
    if (!Has(key)) return;
    std::string name;
    Read(key, name);
    out = ParseEnum<Enum>(name, Key(key));
  }

  void ReadPath(const std::string& key, std::string& out,
                const std::filesystem::path& base) const {
    if (!Has(key)) return;
    Read(key, out);
    if (out.empty()) return;
    std::filesystem::path p(out);
    if (p.is_relative() && !base.empty()) p = base / p;
    out = p.lexically_normal().string();
  }

 private:
  bool Present() const { return node_ && !node_.IsNull(); }

  const YAML::Node node_;
  std::string name_;
};

}  // namespace internal

// Builds a validated config from a parsed document. Relative data paths are
// resolved against `base_dir`.
inline ExperimentConfig ConfigFromYaml(YAML::Node document,
                                       const std::filesystem::path& base_dir = {}) {
  const YAML::Node& doc = document;
  YAML::Node root = doc;
  if (doc.IsMap() && doc["config"] && !doc["schema_version"]) {
    root = doc["config"];  // summary.json echo
  }
  if (!root.IsMap()) throw Error("parse-error", "top level must be a mapping");
  internal::Section top(root, "",
                        {"schema_version", "data", "model", "federation", "dp", "moo",
                         "output"});
  ExperimentConfig config;
  if (!top.Has("schema_version")) {
    throw ValidationError("schema_version", "required");
  }
  top.Read("schema_version", config.schema_version);

  const auto data = top.Child("data", {"source", "seed", "synthetic", "idx",
                                       "test_fraction", "partition"});
  auto& d = config.data;
  data.ReadEnum("source", d.source);
  data.ReadOptional("seed", d.seed);
  data.Read("test_fraction", d.test_fraction);
  const auto synth = data.Child(
      "synthetic", {"num_classes", "input_dim", "num_examples", "separation"});
  synth.Read("num_classes", d.synthetic_classes);
  synth.Read("input_dim", d.synthetic_input_dim);
  synth.Read("num_examples", d.synthetic_examples);
  synth.Read("separation", d.synthetic_separation);
  const auto idx = data.Child("idx", {"train_images", "train_labels", "test_images",
                                      "test_labels", "classes", "max_train",
                                      "max_test", "fallback_to_synthetic"});
  idx.ReadPath("train_images", d.train_images, base_dir);
  idx.ReadPath("train_labels", d.train_labels, base_dir);
  idx.ReadPath("test_images", d.test_images, base_dir);
  idx.ReadPath("test_labels", d.test_labels, base_dir);
  idx.Read("classes", d.classes);
  idx.Read("max_train", d.max_train);
  idx.Read("max_test", d.max_test);
  idx.Read("fallback_to_synthetic", d.fallback_to_synthetic);
  const auto partition = data.Child("partition", {"scheme", "beta"});
  partition.ReadEnum("scheme", d.partition);
  partition.Read("beta", d.dirichlet_beta);

  const auto model = top.Child("model", {"kind", "hidden_dim"});
  model.ReadEnum("kind", config.model.kind);
  model.Read("hidden_dim", config.model.hidden_dim);

  const auto fed = top.Child(
      "federation", {"num_clients", "selection_prob", "rounds", "local_batches",
                     "expected_batch", "lr_schedule", "lr", "mode",
                     "reset_clip_each_round"});
  auto& f = config.federation;
  fed.Read("num_clients", f.num_clients);
  fed.Read("selection_prob", f.selection_prob);
  fed.Read("rounds", f.rounds);
  fed.Read("local_batches", f.local_batches);
  fed.Read("expected_batch", f.expected_batch);
  fed.ReadEnum("lr_schedule", f.lr_schedule);
  fed.Read("lr", f.lr);
  fed.ReadEnum("mode", f.mode);
  fed.Read("reset_clip_each_round", f.reset_clip_each_round);

  const auto dp = top.Child("dp", {"sigma", "target_epsilon", "delta"});
  dp.ReadOptional("sigma", config.dp.sigma);
  dp.ReadOptional("target_epsilon", config.dp.target_epsilon);
  dp.Read("delta", config.dp.delta);

  const auto moo = top.Child(
      "moo", {"kappa", "eta_C", "probe_h", "variant", "initial_C", "cadence"});
  moo.Read("kappa", config.moo.kappa);
  moo.Read("eta_C", config.moo.eta_c);
  moo.Read("probe_h", config.moo.probe_h);
  moo.ReadEnum("variant", config.moo.variant);
  moo.Read("initial_C", config.moo.initial_clip);
  moo.ReadEnum("cadence", config.moo.cadence);

  const auto output = top.Child("output", {"dir", "formats"});
  output.Read("dir", config.output.dir);
  if (output.Has("formats")) {
    std::vector<std::string> formats;
    output.Read("formats", formats);
    config.output.write_csv = config.output.write_json = false;
    for (const auto& fmt : formats) {
      if (fmt == "csv") {
        config.output.write_csv = true;
      } else if (fmt == "json") {
        config.output.write_json = true;
      } else {
        throw ValidationError("output.formats", "unknown format '" + fmt + "'");
      }
    }
  }

  config.Validate();
  return config;
}

inline ExperimentConfig ParseConfig(const std::string& text,
                                    const std::filesystem::path& base_dir = {}) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw Error("parse-error", e.what());
  }
  return ConfigFromYaml(root, base_dir);
}

inline ExperimentConfig LoadConfig(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such config file: " + path);
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw IoError("cannot read config file: " + path);
  } catch (const YAML::Exception& e) {
    throw Error("parse-error", path + ": " + e.what());
  }
  return ConfigFromYaml(root, std::filesystem::absolute(path).parent_path());
}

inline nlohmann::ordered_json ConfigToJson(const ExperimentConfig& config) {
  using nlohmann::ordered_json;
  const auto& d = config.data;
  ordered_json data = {
      {"source", ToString(d.source)},
      {"synthetic",
       {{"num_classes", d.synthetic_classes},
        {"input_dim", d.synthetic_input_dim},
        {"num_examples", d.synthetic_examples},
        {"separation", d.synthetic_separation}}},
      {"idx",
       {{"train_images", d.train_images},
        {"train_labels", d.train_labels},
        {"test_images", d.test_images},
        {"test_labels", d.test_labels},
        {"classes", d.classes},
        {"max_train", d.max_train},
        {"max_test", d.max_test},
        {"fallback_to_synthetic", d.fallback_to_synthetic}}},
      {"test_fraction", d.test_fraction},
      {"partition", {{"scheme", ToString(d.partition)}, {"beta", d.dirichlet_beta}}},
  };
  if (d.seed) data["seed"] = *d.seed;
  const auto& f = config.federation;
  ordered_json dp = {{"delta", config.dp.delta}};
  if (config.dp.sigma) dp["sigma"] = *config.dp.sigma;
  if (config.dp.target_epsilon) dp["target_epsilon"] = *config.dp.target_epsilon;
  ordered_json formats = ordered_json::array();
  if (config.output.write_csv) formats.push_back("csv");
  if (config.output.write_json) formats.push_back("json");
  return {
      {"schema_version", config.schema_version},
      {"data", data},
      {"model",
       {{"kind", ToString(config.model.kind)}, {"hidden_dim", config.model.hidden_dim}}},
      {"federation",
       {{"num_clients", f.num_clients},
        {"selection_prob", f.selection_prob},
        {"rounds", f.rounds},
        {"local_batches", f.local_batches},
        {"expected_batch", f.expected_batch},
        {"lr_schedule", ToString(f.lr_schedule)},
        {"lr", f.lr},
        {"mode", ToString(f.mode)},
        {"reset_clip_each_round", f.reset_clip_each_round}}},
      {"dp", dp},
      {"moo",
       {{"kappa", config.moo.kappa},
        {"eta_C", config.moo.eta_c},
        {"probe_h", config.moo.probe_h},
        {"variant", ToString(config.moo.variant)},
        {"initial_C", config.moo.initial_clip},
        {"cadence", ToString(config.moo.cadence)}}},
      {"output", {{"dir", config.output.dir}, {"formats", formats}}},
  };
}

}  // namespace dpfl

#endif  // DPFL_CONFIG_HPP_
