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

#include "dpfl/harness.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace dpfl {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("dpfl_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path WriteConfig(const std::string& name, const std::string& text) {
    const auto path = dir_ / name;
    std::ofstream(path) << text;
    return path;
  }

  // Runs the dpfl binary with `args`; returns its exit status.
  int Cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + DPFL_CLI_PATH + " " + args + " > " +
                            (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string Stderr() { return ReadTextFile(dir_ / "stderr.txt"); }
  std::string Stdout() { return ReadTextFile(dir_ / "stdout.txt"); }

  fs::path dir_;
};

constexpr const char* kSmall = R"(schema_version: 1
data:
  synthetic: {num_classes: 2, input_dim: 5, num_examples: 300, separation: 3.0}
federation: {num_clients: 3, rounds: 4, local_batches: 2, expected_batch: 10, lr: 0.5}
dp: {sigma: 1.0}
moo: {kappa: 0.01, eta_C: 0.05}
)";

TEST_F(CliTest, RunWritesOutputs) {
  const auto config = WriteConfig("a.yaml", kSmall);
  ASSERT_EQ(Cli("run --config " + config.string() + " --seed 3 --out " + (dir_ / "o").string()),
            0)
      << Stderr();
  const auto rows = ParseMetricsCsv(ReadTextFile(dir_ / "o" / "metrics.csv"));
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    EXPECT_EQ(rows[t].round, static_cast<std::int64_t>(t + 1));
    if (t > 0) {
      EXPECT_GE(rows[t].epsilon, rows[t - 1].epsilon);
    }
    EXPECT_EQ(rows[t].wall_ms, 0);
  }
  const auto summary = nlohmann::json::parse(ReadTextFile(dir_ / "o" / "summary.json"));
  EXPECT_EQ(summary["seed"], 3);
  EXPECT_EQ(summary["rounds"], 4);
  EXPECT_TRUE(summary["ledger"].contains("best_order"));
  EXPECT_EQ(summary["config"]["schema_version"], 1);
  EXPECT_FALSE(fs::exists(dir_ / "o" / "metrics.csv.tmp"));
}

TEST_F(CliTest, SameSeedByteIdenticalAcrossRunsAndWorkers) {
  const auto config = WriteConfig("a.yaml", kSmall);
  for (const char* run : {"r1 --workers 1", "r2 --workers 1", "r3 --workers 3"}) {
    const std::string r(run);
    const auto name = r.substr(0, 2);
    ASSERT_EQ(Cli("run --config " + config.string() + " --seed 11 --out " +
                  (dir_ / name).string() + r.substr(2)),
              0)
        << Stderr();
  }
  const auto m1 = ReadTextFile(dir_ / "r1" / "metrics.csv");
  EXPECT_EQ(m1, ReadTextFile(dir_ / "r2" / "metrics.csv"));
  EXPECT_EQ(m1, ReadTextFile(dir_ / "r3" / "metrics.csv"));
}

TEST_F(CliTest, SummaryEchoReproducesRun) {
  const auto config = WriteConfig("a.yaml", kSmall);
  ASSERT_EQ(Cli("run --config " + config.string() + " --seed 5 --out " + (dir_ / "a").string()),
            0);
  ASSERT_EQ(Cli("run --config " + (dir_ / "a" / "summary.json").string() + " --seed 5 --out " +
                (dir_ / "b").string()),
            0)
      << Stderr();
  EXPECT_EQ(ReadTextFile(dir_ / "a" / "metrics.csv"), ReadTextFile(dir_ / "b" / "metrics.csv"));
  EXPECT_EQ(ReadTextFile(dir_ / "a" / "summary.json"), ReadTextFile(dir_ / "b" / "summary.json"));
}

TEST_F(CliTest, ModesAndInfEpsilon) {
  const auto config = WriteConfig("a.yaml", kSmall);
  const auto base = "run --config " + config.string() + " --seed 2 --out ";
  ASSERT_EQ(Cli(base + (dir_ / "np").string() + " --mode nonprivate"), 0) << Stderr();
  for (const auto& row : ParseMetricsCsv(ReadTextFile(dir_ / "np" / "metrics.csv"))) {
    EXPECT_TRUE(std::isinf(row.epsilon));
  }
  EXPECT_NE(ReadTextFile(dir_ / "np" / "metrics.csv").find(",inf,"), std::string::npos);

  ASSERT_EQ(Cli(base + (dir_ / "fx").string() + " --mode fixed"), 0);
  ASSERT_EQ(Cli(base + (dir_ / "ad").string() + " --mode adaptive"), 0);
  const auto fixed = ParseMetricsCsv(ReadTextFile(dir_ / "fx" / "metrics.csv"));
  const auto adaptive = ParseMetricsCsv(ReadTextFile(dir_ / "ad" / "metrics.csv"));
  for (const auto& row : fixed) EXPECT_EQ(row.mean_clip, fixed.front().mean_clip);
  bool varies = false;
  for (const auto& row : adaptive) varies |= row.mean_clip != adaptive.front().mean_clip;
  EXPECT_TRUE(varies);
  for (std::size_t t = 0; t < fixed.size(); ++t) EXPECT_EQ(fixed[t].epsilon, adaptive[t].epsilon);
}

TEST_F(CliTest, EnvironmentSetsDefaultOutputDir) {
  const auto config = WriteConfig("a.yaml", kSmall);
  const auto env_dir = dir_ / "from_env";
  ASSERT_EQ(Cli("run --config " + config.string() + " --seed 1",
                std::string(kOutputDirEnv) + "=" + env_dir.string()),
            0)
      << Stderr();
  EXPECT_TRUE(fs::exists(env_dir / "metrics.csv"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(Cli("run --config " + (dir_ / "missing.yaml").string() + " --seed 1"), 2);
  const auto bad = WriteConfig("bad.yaml", "schema_version: 1\ndp: {sigma: 1, target_epsilon: 2}\n");
  EXPECT_EQ(Cli("run --config " + bad.string() + " --seed 1"), 1);
  EXPECT_NE(Stderr().find("validation-error(dp)"), std::string::npos) << Stderr();
  EXPECT_EQ(Cli("run --seed 1"), 1);

  // A learning rate this large overflows the logits within a few rounds.
  const auto nan = WriteConfig("nan.yaml", R"(schema_version: 1
data:
  synthetic: {num_classes: 2, input_dim: 5, num_examples: 300, separation: 3.0}
federation: {num_clients: 3, rounds: 30, local_batches: 2, expected_batch: 10, lr: 1.0e300}
dp: {sigma: 1.0}
)");
  EXPECT_EQ(Cli("run --config " + nan.string() + " --seed 1 --out " + (dir_ / "n").string()), 3);
  EXPECT_NE(Stderr().find("round"), std::string::npos) << Stderr();
  EXPECT_FALSE(fs::exists(dir_ / "n" / "metrics.csv"));

  const auto config = WriteConfig("a.yaml", kSmall);
  const auto blocker = WriteConfig("file", "x");
  EXPECT_EQ(Cli("run --config " + config.string() + " --seed 1 --out " +
                (blocker / "sub").string()),
            2);
}

TEST_F(CliTest, PlotData) {
  const auto config = WriteConfig("a.yaml", kSmall);
  ASSERT_EQ(Cli("run --config " + config.string() + " --seed 3 --out " + (dir_ / "o").string()),
            0);
  ASSERT_EQ(Cli("plotdata --metrics " + (dir_ / "o" / "metrics.csv").string()), 0);
  const auto text = Stdout();
  EXPECT_EQ(text.rfind("# round", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(Cli("plotdata --metrics " + (dir_ / "nope.csv").string()), 2);
}

TEST_F(CliTest, Compare) {
  const auto adaptive = WriteConfig("adaptive.yaml", kSmall);
  std::string fixed_text = kSmall;
  fixed_text.replace(fixed_text.find("lr: 0.5}"), 8, "lr: 0.5, mode: fixed-clip}");
  const auto fixed = WriteConfig("fixed.yaml", fixed_text);
  ASSERT_EQ(Cli("compare --configs " + adaptive.string() + " " + fixed.string() +
                " --seeds 1,2,3 --out " + (dir_ / "cmp").string()),
            0)
      << Stderr();
  const auto json = nlohmann::json::parse(ReadTextFile(dir_ / "cmp" / "comparison.json"));
  ASSERT_EQ(json["arms"].size(), 2u);
  EXPECT_EQ(json["arms"][0]["label"], "adaptive");
  EXPECT_EQ(json["arms"][1]["mode"], "fixed-clip");
  EXPECT_EQ(json["arms"][0]["final_test_accuracy"].size(), 3u);
  EXPECT_TRUE(json.contains("winner"));
  EXPECT_GE(json["margin"].get<double>(), 0.0);

  EXPECT_EQ(Cli("compare --configs " + adaptive.string() + " " + fixed.string() + " --seeds 1"),
            1);
  EXPECT_NE(Stderr().find("too-few-seeds"), std::string::npos);

  std::string other = kSmall;
  other.replace(other.find("sigma: 1.0"), 10, "sigma: 2.0");
  const auto mismatched = WriteConfig("other.yaml", other);
  EXPECT_EQ(Cli("compare --configs " + adaptive.string() + " " + mismatched.string() +
                " --seeds 1,2 --out " + (dir_ / "cmp2").string()),
            1);
  EXPECT_NE(Stderr().find("unmatched-budgets"), std::string::npos);
}

TEST(HarnessTest, IdenticalModesGiveZeroMargin) {
  // kappa = 0 and a clip norm that never binds: adaptive and fixed coincide.
  ExperimentConfig config;
  config.data.synthetic_examples = 300;
  config.data.synthetic_input_dim = 4;
  config.federation.num_clients = 3;
  config.federation.rounds = 3;
  config.dp.sigma = 1.0;
  config.moo.kappa = 0.0;
  config.moo.initial_clip = 1e6;
  auto fixed = config;
  fixed.federation.mode = TrainingMode::kFixedClip;
  const auto result = Compare({{"adaptive", config}, {"fixed", fixed}}, {1, 2});
  EXPECT_EQ(result.winner, "tie");
  EXPECT_EQ(result.margin, 0.0);
}

TEST(HarnessTest, MetricsCsvRoundTrip) {
  const std::vector<MetricsRow> rows = {{1, 0.5, 0.75, 1.25, 12, 0.9, 0.5, 3},
                                        {2, 0.1, 1.0, std::numeric_limits<double>::infinity(),
                                         0, 1e9, 0.0, 0}};
  const auto text = FormatMetricsCsv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
  const auto parsed = ParseMetricsCsv(text);
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[0].test_accuracy, 0.75);
  EXPECT_TRUE(std::isinf(parsed[1].epsilon));
  EXPECT_EQ(FormatMetricsCsv(parsed), text);
  EXPECT_THROW_CODE(ParseMetricsCsv("nope\n"), "parse-error");
}

}  // namespace
}  // namespace dpfl
