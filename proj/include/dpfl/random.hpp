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

// Counter-based random streams.
//
// Every stochastic decision in a run draws from an RngStream identified by
// (master seed, purpose, round, client, batch). The generator is
// Philox4x32-10: the master seed is the 64-bit key and the remaining
// coordinates are hashed into the upper half of the 128-bit counter, so two
// distinct stream ids never share a block. Results therefore do not depend on
// the order in which clients execute or on how many worker threads exist.
//
// Gaussian variates use the Box-Muller transform on two open-interval
// uniforms u1, u2 in (0, 1):
//     z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
// with z0 returned first and z1 cached for the following call. This mapping
// is frozen; golden-value tests depend on it.

#ifndef DPFL_RANDOM_HPP_
#define DPFL_RANDOM_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace dpfl {

enum class StreamPurpose : std::uint64_t {
  kInit = 1,
  kClientSelection = 2,
  kBatchSampling = 3,
  kGradientNoise = 4,
  kPartition = 5,
  kSplit = 6,
  kSynthetic = 7,
  kTest = 99,
};

struct StreamKey {
  std::uint64_t seed = 0;
  StreamPurpose purpose = StreamPurpose::kTest;
  std::uint64_t round = 0;
  std::uint64_t client = 0;
  std::uint64_t batch = 0;
};

namespace internal {

constexpr std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t HashStreamId(const StreamKey& key) {
  std::uint64_t h = SplitMix64(static_cast<std::uint64_t>(key.purpose));
  h = SplitMix64(h ^ key.round);
  h = SplitMix64(h ^ key.client);
  h = SplitMix64(h ^ key.batch);
  return h;
}

using PhiloxBlock = std::array<std::uint32_t, 4>;

constexpr PhiloxBlock Philox4x32x10(PhiloxBlock ctr, std::uint32_t k0,
                                    std::uint32_t k1) {
  constexpr std::uint64_t kM0 = 0xD2511F53u;
  constexpr std::uint64_t kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u;
  constexpr std::uint32_t kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = kM0 * ctr[0];
    const std::uint64_t p1 = kM1 * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kW0;
    k1 += kW1;
  }
  return ctr;
}

}  // namespace internal

// A deterministic stream of 64-bit words. Copyable; a copy replays the same
// sequence from the point of the copy. Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(const StreamKey& key)
      : k0_(static_cast<std::uint32_t>(key.seed)),
        k1_(static_cast<std::uint32_t>(key.seed >> 32)),
        stream_id_(internal::HashStreamId(key)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    if (buffered_ == 0) Refill();
    const auto word = buffer_[2 - buffered_];
    --buffered_;
    return word;
  }

  // Uniform in the open interval (0, 1), 53-bit resolution.
  double Uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  bool Bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return Uniform() < p;
  }

  // Uniform integer in [0, n) by rejection; n must be > 0.
  std::uint64_t UniformIndex(std::uint64_t n) {
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % n;
  }

  double Gaussian() {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = Uniform();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    return r * std::cos(angle);
  }

  std::uint64_t blocks_consumed() const { return counter_; }

 private:
  void Refill() {
    const internal::PhiloxBlock ctr = {
        static_cast<std::uint32_t>(counter_),
        static_cast<std::uint32_t>(counter_ >> 32),
        static_cast<std::uint32_t>(stream_id_),
        static_cast<std::uint32_t>(stream_id_ >> 32)};
    const auto out = internal::Philox4x32x10(ctr, k0_, k1_);
    buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
    buffered_ = 2;
    ++counter_;
  }

  std::uint32_t k0_;
  std::uint32_t k1_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  std::optional<double> spare_;
};

// Fisher-Yates shuffle with a fixed draw order (std::shuffle is not portable
// across standard libraries).
template <typename T>
void Shuffle(std::span<T> items, RngStream& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.UniformIndex(i));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
void Shuffle(std::vector<T>& items, RngStream& rng) {
  Shuffle(std::span<T>(items), rng);
}

}  // namespace dpfl

#endif  // DPFL_RANDOM_HPP_
