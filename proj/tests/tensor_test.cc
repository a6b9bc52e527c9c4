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

#include "dpfl/tensor.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.hpp"

namespace dpfl {
namespace {

TEST(ModelSpecTest, ParamCount) {
  EXPECT_EQ(ModelSpec::Logistic(2, 2).ParamCount(), 6u);
  EXPECT_EQ(ModelSpec::Logistic(784, 10).ParamCount(), 7850u);
  EXPECT_EQ(ModelSpec::Mlp(3, 4, 2).ParamCount(), 3u * 4 + 4 + 4 * 2 + 2);
}

TEST(ModelSpecTest, RejectsMlpWithoutHiddenLayer) {
  ModelSpec spec{ModelKind::kMlp1Hidden, 2, 0, 2};
  EXPECT_THROW(spec.Validate(), Error);
  EXPECT_THROW(spec.InitParams(1), Error);
  EXPECT_THROW((ModelSpec{ModelKind::kLogisticRegression, 2, 0, 1}.Validate()), Error);
}

TEST(InitParamsTest, DeterministicPerSeed) {
  const auto spec = ModelSpec::Logistic(2, 2);
  EXPECT_EQ(spec.InitParams(7), spec.InitParams(7));
  EXPECT_EQ(spec.InitParams(7).dim(), spec.ParamCount());
}

TEST(InitParamsTest, SeedsDiffer) {
  const auto spec = ModelSpec::Logistic(2, 2);
  EXPECT_NE(spec.InitParams(7), spec.InitParams(8));
}

TEST(InitParamsTest, LayerwiseFanInBounds) {
  const auto spec = ModelSpec::Mlp(16, 4, 3);
  const auto p = spec.InitParams(11);
  const std::size_t first_layer = 16 * 4 + 4;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    const double bound = i < first_layer ? 1.0 / 4.0 : 1.0 / 2.0;
    EXPECT_LE(std::abs(p[i]), bound);
  }
}

TEST(LossTest, UniformModelGivesLn2) {
  const auto spec = ModelSpec::Logistic(2, 2);
  const ParamVector zeros(spec.ParamCount());
  const std::vector<Example> batch = {{{1.0, -2.0}, 0}, {{0.3, 0.4}, 1}};
  EXPECT_NEAR(spec.Loss(zeros, batch), std::log(2.0), 1e-15);
}

TEST(LossTest, ConfidentCorrectPredictionHasZeroLoss) {
  const auto spec = ModelSpec::Logistic(1, 2);
  // logits = [1000, 0] for x = 1
  const ParamVector params = {1000.0, 0.0, 0.0, 0.0};
  const std::vector<Example> batch = {{{1.0}, 0}};
  EXPECT_NEAR(spec.Loss(params, batch), 0.0, 1e-12);
}

TEST(LossTest, MatchesHandComputedSoftmaxCrossEntropy) {
  const auto spec = ModelSpec::Logistic(2, 2);
  // W = [[0.5, -0.2], [0.1, 0.3]], b = [0.0, 0.1]
  const ParamVector params = {0.5, -0.2, 0.1, 0.3, 0.0, 0.1};
  const std::vector<Example> batch = {
      {{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}, {{1.0, 1.0}, 1}, {{0.5, -1.0}, 0}};
  // Independently evaluated: mean over examples of logsumexp(z) - z_y.
  EXPECT_NEAR(spec.Loss(params, batch), 0.5068675037054725, 1e-15);
}

TEST(LossTest, EmptyBatchIsAnError) {
  const auto spec = ModelSpec::Logistic(2, 2);
  const ParamVector zeros(spec.ParamCount());
  const std::vector<Example> empty;
  EXPECT_THROW_CODE(spec.Loss(zeros, empty), "empty-batch");
  EXPECT_THROW_CODE(spec.PerExampleGrads(zeros, empty), "empty-batch");
}

TEST(GradTest, ClosedFormLogisticAtZero) {
  const auto spec = ModelSpec::Logistic(2, 2);
  const ParamVector zeros(spec.ParamCount());
  const std::vector<Example> batch = {{{1.0, 0.0}, 0}};
  const auto grads = spec.PerExampleGrads(zeros, batch);
  ASSERT_EQ(grads.size(), 1u);
  // p = (0.5, 0.5); dz = p - onehot(0) = (-0.5, 0.5); dW = dz x^T; db = dz.
  const ParamVector expected = {-0.5, 0.0, 0.5, 0.0, -0.5, 0.5};
  for (std::size_t i = 0; i < expected.dim(); ++i) {
    EXPECT_NEAR(grads[0][i], expected[i], 1e-15);
  }
}

TEST(GradTest, DuplicatedExampleGivesIdenticalGradients) {
  const auto spec = ModelSpec::Mlp(3, 5, 3);
  const auto params = spec.InitParams(3);
  const Example e{{0.2, -0.4, 0.9}, 2};
  const std::vector<Example> batch = {e, e};
  const auto grads = spec.PerExampleGrads(params, batch);
  EXPECT_EQ(grads[0], grads[1]);
}

TEST(GradTest, MeanOfPerExampleEqualsBatchGradient) {
  RngStream rng({.seed = 77});
  for (const auto& spec : {ModelSpec::Logistic(4, 3), ModelSpec::Mlp(4, 6, 3)}) {
    const auto params = testing_util::RandomParams(spec, rng, 1.0);
    const auto batch = testing_util::RandomBatch(spec, rng, 9);
    const auto grads = spec.PerExampleGrads(params, batch);
    ParamVector mean(spec.ParamCount());
    for (const auto& g : grads) Axpy(1.0 / grads.size(), g, mean);
    const auto batch_grad = spec.BatchGradient(params, batch);
    for (std::size_t i = 0; i < mean.dim(); ++i) {
      EXPECT_NEAR(mean[i], batch_grad[i], 1e-12);
    }
  }
}

TEST(GradTest, AgreesWithCentralFiniteDifferences) {
  RngStream rng({.seed = 2024});
  for (int trial = 0; trial < 40; ++trial) {
    const auto spec = trial % 2 == 0 ? ModelSpec::Logistic(3, 3) : ModelSpec::Mlp(3, 4, 2);
    const auto params = testing_util::RandomParams(spec, rng, 1.0);
    const auto example = testing_util::RandomExampleAwayFromKinks(spec, params, rng);
    const std::vector<Example> batch = {example};
    const auto grad = spec.PerExampleGrads(params, batch)[0];
    const auto fd = testing_util::FiniteDifferenceGradient(spec, params, example, 1e-6);
    EXPECT_LT(testing_util::MaxRelativeError(grad, fd), 1e-5) << "trial " << trial;
  }
}

TEST(AccuracyTest, ConstantPredictor) {
  const auto spec = ModelSpec::Logistic(1, 2);
  // Bias favours class 0 for every input.
  const ParamVector params = {0.0, 0.0, 1.0, 0.0};
  const std::vector<Example> zeros = {{{0.1}, 0}, {{0.7}, 0}};
  const std::vector<Example> ones = {{{0.1}, 1}, {{0.7}, 1}};
  const std::vector<Example> mixed = {{{0.1}, 0}, {{0.7}, 1}};
  EXPECT_DOUBLE_EQ(spec.Accuracy(params, zeros), 1.0);
  EXPECT_DOUBLE_EQ(spec.Accuracy(params, ones), 0.0);
  EXPECT_DOUBLE_EQ(spec.Accuracy(params, mixed), 0.5);
}

TEST(AccuracyTest, TiesGoToLowestClass) {
  const auto spec = ModelSpec::Logistic(1, 3);
  const ParamVector zeros(spec.ParamCount());
  const std::vector<Example> batch = {{{0.5}, 0}, {{0.5}, 2}};
  EXPECT_DOUBLE_EQ(spec.Accuracy(zeros, batch), 0.5);
}

TEST(AccuracyTest, EmptyDatasetIsAnError) {
  const auto spec = ModelSpec::Logistic(1, 2);
  EXPECT_THROW_CODE(spec.Accuracy(ParamVector(4), std::vector<Example>{}),
                    "empty-dataset");
}

TEST(TensorTest, IdenticalInputsBitIdenticalOutputs) {
  RngStream rng({.seed = 5});
  const auto spec = ModelSpec::Mlp(5, 7, 4);
  const auto params = testing_util::RandomParams(spec, rng, 1.0);
  const auto batch = testing_util::RandomBatch(spec, rng, 6);
  EXPECT_EQ(spec.PerExampleGrads(params, batch), spec.PerExampleGrads(params, batch));
  EXPECT_EQ(spec.Loss(params, batch), spec.Loss(params, batch));
}

TEST(TensorTest, ShapeMismatchIsRejected) {
  const auto spec = ModelSpec::Logistic(2, 2);
  const std::vector<Example> batch = {{{1.0, 2.0, 3.0}, 0}};
  EXPECT_THROW_CODE(spec.Loss(ParamVector(6), batch), "shape-mismatch");
  const std::vector<Example> bad_label = {{{1.0, 2.0}, 2}};
  EXPECT_THROW_CODE(spec.Loss(ParamVector(6), bad_label), "invalid-label");
}

}  // namespace
}  // namespace dpfl
