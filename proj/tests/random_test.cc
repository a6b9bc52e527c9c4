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

#include "dpfl/random.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "gtest/gtest.h"

namespace dpfl {
namespace {

// Known-answer vectors published with the Random123 reference implementation.
TEST(PhiloxTest, MatchesReferenceVectors) {
  EXPECT_EQ(internal::Philox4x32x10({0, 0, 0, 0}, 0, 0),
            (internal::PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(internal::Philox4x32x10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                    0xffffffff, 0xffffffff),
            (internal::PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(internal::Philox4x32x10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                    0xa4093822, 0x299f31d0),
            (internal::PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStreamTest, SameKeySameSequence) {
  const StreamKey key{.seed = 42, .purpose = StreamPurpose::kGradientNoise,
                      .round = 3, .client = 7, .batch = 1};
  RngStream a(key);
  RngStream b(key);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.Gaussian(), b.Gaussian());
}

TEST(RngStreamTest, AnyCoordinateChangesTheStream) {
  const StreamKey base{.seed = 42, .purpose = StreamPurpose::kGradientNoise,
                       .round = 3, .client = 7, .batch = 1};
  std::vector<StreamKey> keys(6, base);
  keys[1].seed = 43;
  keys[2].purpose = StreamPurpose::kBatchSampling;
  keys[3].round = 4;
  keys[4].client = 8;
  keys[5].batch = 2;
  std::set<std::uint64_t> first_words;
  for (const auto& k : keys) {
    RngStream rng(k);
    first_words.insert(rng());
  }
  EXPECT_EQ(first_words.size(), keys.size());
}

TEST(RngStreamTest, UniformStaysInOpenInterval) {
  RngStream rng({.seed = 1});
  double sum = 0.0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    const double u = rng.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / kDraws, 0.5, 0.005);
}

TEST(RngStreamTest, GaussianMoments) {
  RngStream rng({.seed = 9});
  constexpr int kDraws = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double z = rng.Gaussian();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / kDraws;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq / kDraws - mean * mean, 1.0, 0.015);
}

TEST(RngStreamTest, UniformIndexCoversRange) {
  RngStream rng({.seed = 5});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.UniformIndex(7)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(ShuffleTest, IsAPermutationAndDeterministic) {
  std::vector<int> a(50);
  std::iota(a.begin(), a.end(), 0);
  auto b = a;
  RngStream r1({.seed = 3});
  RngStream r2({.seed = 3});
  Shuffle(a, r1);
  Shuffle(b, r2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

}  // namespace
}  // namespace dpfl
