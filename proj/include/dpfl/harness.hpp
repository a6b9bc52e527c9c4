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

// Experiment outputs: metrics.csv, summary.json, comparison.json and the
// gnuplot data export. Files are written to a temporary name and renamed into
// place, so a failed run never leaves partial outputs behind.

#ifndef DPFL_HARNESS_HPP_
#define DPFL_HARNESS_HPP_

#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "dpfl/config.hpp"
#include "dpfl/error.hpp"
#include "dpfl/experiment.hpp"

namespace dpfl {

inline constexpr const char* kOutputDirEnv = "DPFL_OUTPUT_DIR";
inline constexpr const char* kMetricsHeader =
    "round,train_loss,test_accuracy,epsilon,best_order,mean_C,clip_fraction,wall_ms";

enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitIo = 2,
  kExitNumeric = 3,
};

struct MetricsRow {
  std::int64_t round = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double epsilon = 0.0;
  double best_order = 0.0;
  double mean_clip = 0.0;
  double clip_fraction = 0.0;
  std::int64_t wall_ms = 0;
};

// Shortest representation that round-trips; "inf" / "nan" for non-finite.
inline std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline std::string FormatMetricsCsv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.round) + "," + FormatNumber(r.train_loss) + "," +
           FormatNumber(r.test_accuracy) + "," + FormatNumber(r.epsilon) + "," +
           FormatNumber(r.best_order) + "," + FormatNumber(r.mean_clip) + "," +
           FormatNumber(r.clip_fraction) + "," + std::to_string(r.wall_ms) + "\n";
  }
  return out;
}

inline std::vector<MetricsRow> ParseMetricsCsv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw Error("parse-error", "unexpected metrics.csv header");
  }
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 8) throw Error("parse-error", "bad metrics row: " + line);
    try {
      rows.push_back({std::stoll(cells[0]), std::stod(cells[1]), std::stod(cells[2]),
                      std::stod(cells[3]), std::stod(cells[4]), std::stod(cells[5]),
                      std::stod(cells[6]), std::stoll(cells[7])});
    } catch (const std::exception&) {
      throw Error("parse-error", "bad metrics row: " + line);
    }
  }
  return rows;
}

inline std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFileAtomically(const std::filesystem::path& path,
                                const std::string& contents) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp + ": " + ec.message());
}

// --out beats $DPFL_OUTPUT_DIR beats output.dir beats ./dpfl_out.
inline std::filesystem::path ResolveOutputDir(const std::optional<std::string>& flag,
                                              const ExperimentConfig& config) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') {
    return env;
  }
  if (!config.output.dir.empty()) return config.output.dir;
  return "dpfl_out";
}

struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path out_dir;
  bool record_wall_time = false;  // off keeps metrics.csv byte-reproducible
};

struct RunResult {
  std::vector<RoundRecord> records;
  std::vector<MetricsRow> rows;
  PrivacyLedger ledger;
  double sigma = 0.0;
  nlohmann::ordered_json summary;
  std::filesystem::path metrics_path;
  std::filesystem::path summary_path;
};

inline nlohmann::ordered_json NumberOrString(double value) {
  if (std::isfinite(value)) return value;
  return FormatNumber(value);
}

inline RunResult RunAndWrite(const ExperimentConfig& config, const RunOptions& options) {
  auto prepared = PrepareExperiment(config, options.seed);
  RunResult result;
  auto tick = std::chrono::steady_clock::now();
  result.records = RunPrepared(prepared, options.workers, [&](const RoundRecord& rec) {
    const auto now = std::chrono::steady_clock::now();
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now - tick).count();
    tick = now;
    result.rows.push_back({rec.round_index, rec.train_loss, rec.test_accuracy,
                           rec.epsilon_so_far, rec.best_order, rec.mean_clip,
                           rec.clip_fraction, options.record_wall_time ? ms : 0});
  });
  result.ledger = prepared.ledger;
  result.sigma = prepared.setup.sigma;

  const auto eps = prepared.ledger.ToEpsilon();
  auto& summary = result.summary;
  summary["seed"] = options.seed;
  summary["mode"] = ToString(config.federation.mode);
  summary["rounds"] = result.records.size();
  summary["final_test_accuracy"] =
      result.records.empty() ? 0.0 : result.records.back().test_accuracy;
  summary["final_train_loss"] =
      result.records.empty() ? 0.0 : result.records.back().train_loss;
  summary["final_epsilon"] = NumberOrString(eps.epsilon);
  summary["final_mean_C"] = result.records.empty() ? config.moo.initial_clip
                                                   : result.records.back().mean_clip;
  summary["used_fallback_data"] = prepared.used_fallback_data;
  summary["ledger"] = {{"q", prepared.ledger.q()},
                       {"sigma", prepared.ledger.sigma()},
                       {"steps", prepared.ledger.steps()},
                       {"epsilon", NumberOrString(eps.epsilon)},
                       {"best_order", eps.best_order},
                       {"delta", prepared.ledger.delta()}};
  summary["config"] = ConfigToJson(config);

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw IoError("cannot create " + options.out_dir.string() + ": " + ec.message());
  if (config.output.write_csv) {
    result.metrics_path = options.out_dir / "metrics.csv";
    WriteFileAtomically(result.metrics_path, FormatMetricsCsv(result.rows));
  }
  if (config.output.write_json) {
    result.summary_path = options.out_dir / "summary.json";
    WriteFileAtomically(result.summary_path, summary.dump(2) + "\n");
  }
  return result;
}

// Whitespace-separated columns with a '#' header, readable by gnuplot.
inline std::string PlotData(const std::vector<MetricsRow>& rows) {
  std::string out =
      "# round train_loss test_accuracy epsilon best_order mean_C clip_fraction wall_ms\n";
  for (const auto& r : rows) {
    out += std::to_string(r.round) + " " + FormatNumber(r.train_loss) + " " +
           FormatNumber(r.test_accuracy) + " " + FormatNumber(r.epsilon) + " " +
           FormatNumber(r.best_order) + " " + FormatNumber(r.mean_clip) + " " +
           FormatNumber(r.clip_fraction) + " " + std::to_string(r.wall_ms) + "\n";
  }
  return out;
}

struct ComparisonArm {
  std::string label;
  ExperimentConfig config;
};

struct ArmSummary {
  std::string label;
  std::string mode;
  std::vector<double> final_accuracy;
  std::vector<double> final_mean_clip;
  double mean = 0.0;
  double stddev = 0.0;
};

struct ComparisonResult {
  std::vector<ArmSummary> arms;
  std::string winner;  // label, or "tie"
  double margin = 0.0;  // winner mean minus runner-up mean
  nlohmann::ordered_json json;
};

inline ComparisonResult Compare(const std::vector<ComparisonArm>& arms,
                                const std::vector<std::uint64_t>& seeds,
                                std::size_t workers = 1) {
  if (seeds.size() < 2) throw Error("too-few-seeds", "compare needs at least two seeds");
  if (arms.size() != 2) throw Error("invalid-argument", "compare takes exactly two configs");

  ComparisonResult result;
  std::optional<std::tuple<double, double, std::int64_t, double>> budget;
  for (const auto& arm : arms) {
    ArmSummary summary{arm.label, ToString(arm.config.federation.mode), {}, {}, 0.0, 0.0};
    for (auto seed : seeds) {
      auto prepared = PrepareExperiment(arm.config, seed);
      const auto key = std::make_tuple(prepared.setup.sigma, prepared.sampling_rate,
                                       arm.config.federation.rounds, arm.config.dp.delta);
      if (!budget) {
        budget = key;
      } else if (*budget != key) {
        throw Error("unmatched-budgets",
                    "arms differ in (sigma, q, T, delta); sigma " +
                        FormatNumber(std::get<0>(*budget)) + " vs " +
                        FormatNumber(std::get<0>(key)));
      }
      const auto records = RunPrepared(prepared, workers);
      summary.final_accuracy.push_back(records.empty() ? 0.0 : records.back().test_accuracy);
      summary.final_mean_clip.push_back(records.empty() ? arm.config.moo.initial_clip
                                                        : records.back().mean_clip);
    }
    const auto n = static_cast<double>(summary.final_accuracy.size());
    for (double a : summary.final_accuracy) summary.mean += a / n;
    double ss = 0.0;
    for (double a : summary.final_accuracy) ss += (a - summary.mean) * (a - summary.mean);
    summary.stddev = std::sqrt(ss / (n - 1.0));
    result.arms.push_back(std::move(summary));
  }

  const auto& a = result.arms[0];
  const auto& b = result.arms[1];
  if (a.mean == b.mean) {
    result.winner = "tie";
  } else {
    result.winner = a.mean > b.mean ? a.label : b.label;
  }
  result.margin = std::abs(a.mean - b.mean);

  auto& json = result.json;
  json["seeds"] = seeds;
  json["matched_budget"] = {{"sigma", std::get<0>(*budget)},
                            {"q", std::get<1>(*budget)},
                            {"rounds", std::get<2>(*budget)},
                            {"delta", std::get<3>(*budget)}};
  json["arms"] = nlohmann::ordered_json::array();
  for (const auto& arm : result.arms) {
    json["arms"].push_back({{"label", arm.label},
                            {"mode", arm.mode},
                            {"final_test_accuracy", arm.final_accuracy},
                            {"final_mean_C", arm.final_mean_clip},
                            {"mean", arm.mean},
                            {"std", arm.stddev}});
  }
  json["winner"] = result.winner;
  json["margin"] = result.margin;
  return result;
}

}  // namespace dpfl

#endif  // DPFL_HARNESS_HPP_
