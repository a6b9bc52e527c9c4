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

#include "dpfl/accountant.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "rdp_oracle.hpp"
#include "test_util.hpp"

namespace dpfl {
namespace {

TEST(RdpGaussianTest, ClosedForm) {
  EXPECT_DOUBLE_EQ(RdpGaussian(1.0, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(RdpGaussian(2.0, 3.0), 0.375);
  EXPECT_LE(RdpGaussian(1e6, 2.0), 1e-10);
}

TEST(RdpGaussianTest, MatchesIntegralOracle) {
  for (double sigma : {0.8, 1.0, 2.0, 4.0}) {
    for (double alpha : {2.0, 4.0, 8.0}) {
      const double oracle = testing_util::RenyiIntegralOracle(1.0, sigma, alpha);
      EXPECT_NEAR(RdpGaussian(sigma, alpha), oracle, 1e-6 * oracle);
    }
  }
}

TEST(RdpGaussianTest, DomainErrors) {
  EXPECT_THROW_CODE(RdpGaussian(0.0, 2.0), "invalid-sigma");
  EXPECT_THROW_CODE(RdpGaussian(1.0, 1.0), "invalid-order");
}

TEST(RdpSubsampledTest, OrderTwoClosedForm) {
  // (1/(2-1)) log(1 + q^2 (e - 1)), evaluated independently.
  EXPECT_NEAR(RdpSubsampledGaussian(0.01, 1.0, 2.0), 0.00017181342207464448,
              1e-15);
}

TEST(RdpSubsampledTest, FullSamplingIsPlainGaussian) {
  for (double sigma : {0.5, 0.8, 1.0, 3.0}) {
    for (int alpha : {2, 3, 7, 32, 256}) {
      const double plain = RdpGaussian(sigma, alpha);
      EXPECT_NEAR(RdpSubsampledGaussian(1.0, sigma, alpha), plain, 1e-9 * plain)
          << sigma << " " << alpha;
    }
  }
}

TEST(RdpSubsampledTest, VanishesWithSamplingRate) {
  EXPECT_LT(RdpSubsampledGaussian(1e-9, 1.0, 8.0), 1e-15);
  EXPECT_GE(RdpSubsampledGaussian(1e-300, 1.0, 8.0), 0.0);
}

TEST(RdpSubsampledTest, MatchesIntegralOracleOnGrid) {
  for (double q : {0.001, 0.01, 0.1}) {
    for (double sigma : {0.8, 1.0, 2.0, 4.0}) {
      for (double alpha : {2.0, 4.0, 8.0, 16.0}) {
        const double oracle = testing_util::RenyiIntegralOracle(q, sigma, alpha);
        const double value = RdpSubsampledGaussian(q, sigma, alpha);
        EXPECT_NEAR(value, oracle, 1e-6 * oracle)
            << "q=" << q << " sigma=" << sigma << " alpha=" << alpha;
      }
    }
  }
}

TEST(RdpSubsampledTest, FractionalOrdersAreUpperBounds) {
  for (double alpha : {1.25, 1.5, 2.5, 7.3}) {
    const double value = RdpSubsampledGaussian(0.05, 1.0, alpha);
    EXPECT_GE(value, testing_util::RenyiIntegralOracle(0.05, 1.0, alpha) * (1.0 - 1e-9));
  }
}

TEST(RdpSubsampledTest, SamplingRateRange) {
  EXPECT_THROW_CODE(RdpSubsampledGaussian(0.0, 1.0, 2.0), "invalid-sampling-rate");
  EXPECT_THROW_CODE(RdpSubsampledGaussian(1.5, 1.0, 2.0), "invalid-sampling-rate");
}

TEST(DefaultOrdersTest, Grid) {
  const auto orders = DefaultOrders();
  ASSERT_EQ(orders.size(), 257u);
  EXPECT_EQ(orders[0], 1.25);
  EXPECT_EQ(orders[1], 1.5);
  EXPECT_EQ(orders[2], 2.0);
  EXPECT_EQ(orders.back(), 256.0);
}

TEST(EpsilonTest, GridSearchOracle) {
  std::vector<double> orders;
  std::vector<double> rdp;
  for (int a = 2; a <= 256; ++a) {
    orders.push_back(a);
    rdp.push_back(0.01 * a);
  }
  const auto result = EpsilonFromRdp(orders, rdp, 1e-5);
  EXPECT_NEAR(result.epsilon, 0.6886154548520655, 1e-12);
  EXPECT_EQ(result.best_order, 35.0);
}

TEST(EpsilonTest, NoOrders) {
  EXPECT_THROW_CODE(EpsilonFromRdp({}, {}, 1e-5), "no-orders");
  EXPECT_THROW_CODE(PrivacyLedger(0.1, 1.0, 1e-5, {}).Compose(1).ToEpsilon(), "no-orders");
}

TEST(LedgerTest, ComposeIsAdditiveAndAssociative) {
  const PrivacyLedger base(0.02, 1.1, 1e-5);
  const auto a = base.Compose(7).Compose(5);
  const auto b = base.Compose(12);
  EXPECT_EQ(a.steps(), 12);
  EXPECT_EQ(a.TotalRdp(), b.TotalRdp());
  EXPECT_EQ(base.Compose(0).steps(), 0);
  const auto totals = b.TotalRdp();
  for (std::size_t i = 0; i < totals.size(); ++i) {
    EXPECT_DOUBLE_EQ(totals[i], 12.0 * base.per_step_rdp()[i]);
  }
  EXPECT_THROW_CODE(base.Compose(-1), "invalid-steps");
}

TEST(LedgerTest, EpsilonMonotonicity) {
  const double e1 = EpsilonFor(0.01, 1.0, 100, 1e-5);
  EXPECT_GT(EpsilonFor(0.01, 1.0, 200, 1e-5), e1);
  EXPECT_GT(EpsilonFor(0.02, 1.0, 100, 1e-5), e1);
  EXPECT_LT(EpsilonFor(0.01, 2.0, 100, 1e-5), e1);
  double previous = 1e300;
  for (double sigma : {0.5, 0.7, 1.0, 1.5, 2.0, 5.0, 20.0, 1e3}) {
    const double e = EpsilonFor(0.05, sigma, 50, 1e-5);
    EXPECT_LE(e, previous);
    previous = e;
  }
  // Huge sigma: only the conversion term at the largest order remains.
  EXPECT_NEAR(EpsilonFor(0.05, 1e6, 1, 1e-5), -std::log(1e-5) / 255.0, 1e-6);
}

TEST(LedgerTest, NonPrivateAndFreshLedgers) {
  const PrivacyLedger non_private(1.0, 0.0, 1e-5);
  EXPECT_TRUE(std::isinf(non_private.Compose(10).ToEpsilon().epsilon));
  EXPECT_EQ(PrivacyLedger(0.1, 1.0, 1e-5).ToEpsilon().epsilon, 0.0);
}

TEST(CalibrateSigmaTest, RoundTrip) {
  const double sigma = CalibrateSigma(0.01, 1000, 3.61, 1e-5);
  EXPECT_LE(EpsilonFor(0.01, sigma, 1000, 1e-5), 3.61);
  EXPECT_GE(EpsilonFor(0.01, sigma, 1000, 1e-5), 0.99 * 3.61);
  EXPECT_GT(EpsilonFor(0.01, 0.99 * sigma, 1000, 1e-5), 3.61);
}

TEST(CalibrateSigmaTest, LargerTargetNeedsLessNoise) {
  const double tight = CalibrateSigma(0.05, 200, 1.0, 1e-5);
  const double loose = CalibrateSigma(0.05, 200, 4.0, 1e-5);
  EXPECT_LE(loose, tight);
}

TEST(CalibrateSigmaTest, Errors) {
  EXPECT_THROW_CODE(CalibrateSigma(0.01, 0, 3.61, 1e-5), "uncalibratable");
  EXPECT_THROW_CODE(CalibrateSigma(1.0, 1000000, 1e-3, 1e-5), "uncalibratable");
}

TEST(LedgerTest, IndependentOfClipNorm) {
  // The ledger is a function of (q, sigma, steps) only; there is no clip
  // norm argument to vary, so equal inputs give bit-equal epsilon.
  const auto a = PrivacyLedger(0.02, 1.3, 1e-5).Compose(300).ToEpsilon();
  const auto b = PrivacyLedger(0.02, 1.3, 1e-5).Compose(100).Compose(200).ToEpsilon();
  EXPECT_EQ(a.epsilon, b.epsilon);
  EXPECT_EQ(a.best_order, b.best_order);
}

}  // namespace
}  // namespace dpfl
