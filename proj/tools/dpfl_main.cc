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

// dpfl command line.
//
//   dpfl run --config <path> --seed <u64> [--mode adaptive|fixed|nonprivate]
//            [--workers N] [--out DIR] [--record-time]
//   dpfl compare --configs a.yaml b.yaml --seeds 1,2,3,4,5 [--out DIR]
//   dpfl plotdata --metrics metrics.csv [--out FILE]
//
// Exit codes: 0 success, 1 usage/config/other error, 2 I/O error,
// 3 numeric failure (NaN/Inf in parameters; the round is reported).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpfl/dpfl.hpp"

namespace {

int Fail(const dpfl::Error& e) {
  std::cerr << "dpfl: " << e.what() << "\n";
  if (dynamic_cast<const dpfl::NumericError*>(&e) != nullptr) return dpfl::kExitNumeric;
  if (dynamic_cast<const dpfl::IoError*>(&e) != nullptr) return dpfl::kExitIo;
  return dpfl::kExitError;
}

int RunCommand(const std::string& config_path, std::uint64_t seed,
               const std::optional<std::string>& mode, std::size_t workers,
               const std::optional<std::string>& out, bool record_time) {
  auto config = dpfl::LoadConfig(config_path);
  if (mode) {
    config.federation.mode = dpfl::ParseModeFlag(*mode);
    config.Validate();
  }
  dpfl::RunOptions options{.seed = seed,
                           .workers = workers,
                           .out_dir = dpfl::ResolveOutputDir(out, config),
                           .record_wall_time = record_time};
  const auto result = dpfl::RunAndWrite(config, options);
  std::cout << "rounds=" << result.records.size()
            << " final_test_accuracy=" << result.summary["final_test_accuracy"].dump()
            << " final_epsilon=" << result.summary["final_epsilon"].dump()
            << " out=" << options.out_dir.string() << "\n";
  return dpfl::kExitOk;
}

int CompareCommand(const std::vector<std::string>& config_paths,
                   const std::vector<std::uint64_t>& seeds, std::size_t workers,
                   const std::optional<std::string>& out) {
  std::vector<dpfl::ComparisonArm> arms;
  for (const auto& path : config_paths) {
    arms.push_back({std::filesystem::path(path).stem().string(), dpfl::LoadConfig(path)});
  }
  const auto result = dpfl::Compare(arms, seeds, workers);
  const auto dir = dpfl::ResolveOutputDir(out, arms.front().config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw dpfl::IoError("cannot create " + dir.string());
  dpfl::WriteFileAtomically(dir / "comparison.json", result.json.dump(2) + "\n");
  std::cout << result.json.dump(2) << "\n";
  return dpfl::kExitOk;
}

int PlotDataCommand(const std::string& metrics, const std::optional<std::string>& out) {
  const auto rows = dpfl::ParseMetricsCsv(dpfl::ReadTextFile(metrics));
  const auto text = dpfl::PlotData(rows);
  if (out) {
    dpfl::WriteFileAtomically(*out, text);
  } else {
    std::cout << text;
  }
  return dpfl::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private federated learning with adaptive clipping"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string config_path;
  std::uint64_t seed = 0;
  std::optional<std::string> mode;
  std::size_t workers = 1;
  std::optional<std::string> out;
  bool record_time = false;
  run->add_option("--config", config_path, "experiment config (YAML or summary.json)")
      ->required();
  run->add_option("--seed", seed, "master seed")->required();
  run->add_option("--mode", mode, "override federation.mode")
      ->check(CLI::IsMember({"adaptive", "fixed", "nonprivate", "fixed-clip", "non-private"}));
  run->add_option("--workers", workers, "client-level worker threads")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory (default: $DPFL_OUTPUT_DIR)");
  run->add_flag("--record-time", record_time, "fill the wall_ms column");

  auto* compare = app.add_subcommand("compare", "compare two configs over seeds");
  std::vector<std::string> config_paths;
  std::vector<std::uint64_t> seeds;
  compare->add_option("--configs", config_paths, "two experiment configs")
      ->required()
      ->expected(2);
  compare->add_option("--seeds", seeds, "comma separated seeds")
      ->required()
      ->delimiter(',');
  compare->add_option("--workers", workers, "client-level worker threads")
      ->check(CLI::PositiveNumber);
  compare->add_option("--out", out, "output directory for comparison.json");

  auto* plot = app.add_subcommand("plotdata", "export metrics.csv as gnuplot data");
  std::string metrics_path;
  plot->add_option("--metrics", metrics_path, "metrics.csv to convert")->required();
  plot->add_option("--out", out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dpfl::kExitOk : dpfl::kExitError;
  }

  try {
    if (*run) return RunCommand(config_path, seed, mode, workers, out, record_time);
    if (*compare) return CompareCommand(config_paths, seeds, workers, out);
    if (*plot) return PlotDataCommand(metrics_path, out);
  } catch (const dpfl::Error& e) {
    return Fail(e);
  } catch (const std::exception& e) {
    std::cerr << "dpfl: " << e.what() << "\n";
    return dpfl::kExitError;
  }
  return dpfl::kExitError;
}
