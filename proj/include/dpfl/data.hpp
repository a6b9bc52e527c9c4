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

// Datasets: IDX ingestion (MNIST / Fashion-MNIST, optionally gzip
// compressed), Gaussian blob generation, client partitioning and stratified
// train/test splits.

#ifndef DPFL_DATA_HPP_
#define DPFL_DATA_HPP_

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <boost/random/gamma_distribution.hpp>

#include "dpfl/error.hpp"
#include "dpfl/random.hpp"
#include "dpfl/tensor.hpp"

namespace dpfl {

struct Dataset {
  std::vector<Example> examples;
  std::size_t num_classes = 2;
  std::size_t input_dim = 1;
  std::string name;

  std::size_t size() const { return examples.size(); }
  Batch view() const { return examples; }

  std::vector<std::size_t> LabelHistogram() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (const auto& e : examples) ++counts[static_cast<std::size_t>(e.label)];
    return counts;
  }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace internal {

// Reads a whole file through zlib, which passes uncompressed input through
// unchanged.
inline std::vector<unsigned char> ReadMaybeGzip(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw IoError("cannot open " + path);
  std::vector<unsigned char> bytes;
  unsigned char chunk[1 << 16];
  int got = 0;
  while ((got = gzread(file, chunk, sizeof(chunk))) > 0) {
    bytes.insert(bytes.end(), chunk, chunk + got);
  }
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw IoError("read failed: " + path);
  return bytes;
}

inline std::uint32_t ReadBigEndian32(const std::vector<unsigned char>& bytes,
                                     std::size_t offset,
                                     const std::string& path) {
  if (bytes.size() < offset + 4) throw Error("truncated-file", path);
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace internal

// Pairs an IDX image file (magic 0x803, dims n x rows x cols) with an IDX
// label file (magic 0x801, dim n). Pixels are scaled by 1/255.
inline Dataset ReadIdx(const std::string& images_path,
                       const std::string& labels_path) {
  const auto images = internal::ReadMaybeGzip(images_path);
  const auto labels = internal::ReadMaybeGzip(labels_path);

  if (internal::ReadBigEndian32(images, 0, images_path) != kIdxImageMagic) {
    throw Error("bad-magic", images_path);
  }
  if (internal::ReadBigEndian32(labels, 0, labels_path) != kIdxLabelMagic) {
    throw Error("bad-magic", labels_path);
  }
  const std::size_t n_images = internal::ReadBigEndian32(images, 4, images_path);
  const std::size_t rows = internal::ReadBigEndian32(images, 8, images_path);
  const std::size_t cols = internal::ReadBigEndian32(images, 12, images_path);
  const std::size_t n_labels = internal::ReadBigEndian32(labels, 4, labels_path);
  if (n_images != n_labels) {
    throw Error("count-mismatch", std::to_string(n_images) + " images vs " +
                                      std::to_string(n_labels) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n_images * pixels) throw Error("truncated-file", images_path);
  if (labels.size() < 8 + n_labels) throw Error("truncated-file", labels_path);

  Dataset out;
  out.name = std::filesystem::path(images_path).filename().string();
  out.input_dim = pixels;
  out.examples.reserve(n_images);
  int max_label = 1;
  for (std::size_t i = 0; i < n_images; ++i) {
    Example e;
    e.features.resize(pixels);
    const unsigned char* src = images.data() + 16 + i * pixels;
    for (std::size_t j = 0; j < pixels; ++j) e.features[j] = src[j] / 255.0;
    e.label = labels[8 + i];
    max_label = std::max(max_label, e.label);
    out.examples.push_back(std::move(e));
  }
  out.num_classes = static_cast<std::size_t>(max_label) + 1;
  return out;
}

// Keeps only the listed classes (in the listed order) and relabels them
// 0..classes.size()-1; at most `limit` examples are kept (0 = no limit).
inline Dataset SelectClasses(const Dataset& dataset,
                             const std::vector<int>& classes,
                             std::size_t limit = 0) {
  std::map<int, int> relabel;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    relabel[classes[i]] = static_cast<int>(i);
  }
  Dataset out;
  out.name = dataset.name;
  out.input_dim = dataset.input_dim;
  out.num_classes = std::max<std::size_t>(classes.size(), 2);
  for (const auto& e : dataset.examples) {
    if (limit != 0 && out.examples.size() >= limit) break;
    const auto it = relabel.find(e.label);
    if (it == relabel.end()) continue;
    out.examples.push_back({e.features, it->second});
  }
  return out;
}

// Class c is centred at separation * u_c, where u_c is the c-th basis vector
// (or a seeded random unit vector when there are more classes than input
// dimensions), with unit-variance isotropic noise. Labels cycle 0,1,..,k-1.
// Features are min-max rescaled per coordinate into [0, 1].
inline Dataset SynthBlobs(std::size_t num_classes, std::size_t input_dim,
                          std::size_t n, double separation, std::uint64_t seed) {
  if (num_classes < 2 || input_dim == 0) {
    throw Error("invalid-argument", "blobs need >= 2 classes and input_dim > 0");
  }
  if (n < num_classes) throw Error("invalid-argument", "n < num_classes");
  RngStream rng({.seed = seed, .purpose = StreamPurpose::kSynthetic});
  std::vector<std::vector<double>> centers(num_classes,
                                           std::vector<double>(input_dim, 0.0));
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (num_classes <= input_dim) {
      centers[c][c] = separation;
      continue;
    }
    double norm2 = 0.0;
    for (auto& v : centers[c]) {
      v = rng.Gaussian();
      norm2 += v * v;
    }
    for (auto& v : centers[c]) v *= separation / std::sqrt(norm2);
  }

  Dataset out;
  out.name = "blobs";
  out.num_classes = num_classes;
  out.input_dim = input_dim;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Example e;
    e.label = static_cast<int>(i % num_classes);
    e.features.resize(input_dim);
    for (std::size_t j = 0; j < input_dim; ++j) {
      e.features[j] = centers[static_cast<std::size_t>(e.label)][j] + rng.Gaussian();
    }
    out.examples.push_back(std::move(e));
  }
  for (std::size_t j = 0; j < input_dim; ++j) {
    double lo = out.examples.front().features[j];
    double hi = lo;
    for (const auto& e : out.examples) {
      lo = std::min(lo, e.features[j]);
      hi = std::max(hi, e.features[j]);
    }
    const double span = hi - lo;
    for (auto& e : out.examples) {
      e.features[j] = span > 0.0 ? (e.features[j] - lo) / span : 0.0;
    }
  }
  return out;
}

enum class PartitionScheme { kIid, kDirichlet };

struct PartitionSpec {
  PartitionScheme scheme = PartitionScheme::kIid;
  double beta = 0.5;  // Dirichlet concentration
  std::size_t num_clients = 1;
  std::uint64_t seed = 0;
};

// Returns one list of dataset indices per client. Shards are disjoint, cover
// the whole dataset, and each holds at least one example.
//   iid:       shuffled, then split into sizes differing by at most one.
//   dirichlet: for every class, client proportions ~ Dir(beta, ..., beta);
//              empty clients then take one example from the largest shard.
inline std::vector<std::vector<std::size_t>> Partition(const Dataset& dataset,
                                                       const PartitionSpec& spec) {
  const std::size_t n = dataset.size();
  const std::size_t k = spec.num_clients;
  if (k == 0) throw Error("invalid-argument", "num_clients must be >= 1");
  if (k > n) {
    throw Error("too-many-clients",
                std::to_string(k) + " clients for " + std::to_string(n) + " examples");
  }
  RngStream rng({.seed = spec.seed, .purpose = StreamPurpose::kPartition});
  std::vector<std::vector<std::size_t>> shards(k);

  if (spec.scheme == PartitionScheme::kIid) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Shuffle(order, rng);
    std::size_t pos = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t size = n / k + (c < n % k ? 1 : 0);
      shards[c].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                       order.begin() + static_cast<std::ptrdiff_t>(pos + size));
      pos += size;
    }
    return shards;
  }

  if (!(spec.beta > 0.0)) throw Error("invalid-argument", "dirichlet beta must be > 0");
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < n; ++i) {
    by_class[static_cast<std::size_t>(dataset.examples[i].label)].push_back(i);
  }
  boost::random::gamma_distribution<double> gamma(spec.beta, 1.0);
  for (auto& members : by_class) {
    Shuffle(members, rng);
    std::vector<double> weights(k);
    double total = 0.0;
    for (auto& w : weights) {
      w = gamma(rng);
      total += w;
    }
    if (!(total > 0.0)) {
      std::fill(weights.begin(), weights.end(), 1.0);
      total = static_cast<double>(k);
    }
    double cumulative = 0.0;
    std::size_t start = 0;
    for (std::size_t c = 0; c < k; ++c) {
      cumulative += weights[c] / total;
      std::size_t stop = c + 1 == k
                             ? members.size()
                             : static_cast<std::size_t>(std::floor(
                                   cumulative * static_cast<double>(members.size())));
      stop = std::clamp(stop, start, members.size());
      shards[c].insert(shards[c].end(),
                       members.begin() + static_cast<std::ptrdiff_t>(start),
                       members.begin() + static_cast<std::ptrdiff_t>(stop));
      start = stop;
    }
  }
  for (auto& shard : shards) {
    if (!shard.empty()) continue;
    auto largest = std::max_element(
        shards.begin(), shards.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    shard.push_back(largest->back());
    largest->pop_back();
  }
  return shards;
}

// Stratified split: each label contributes round-to-nearest of
// test_fraction * count to the test side, with largest-remainder correction
// so the test size equals round(test_fraction * n). Order within each side
// follows the input order.
inline std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& dataset,
                                                  double test_fraction,
                                                  std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error("invalid-argument", "test_fraction must lie in (0, 1)");
  }
  RngStream rng({.seed = seed, .purpose = StreamPurpose::kSplit});
  std::vector<std::vector<std::size_t>> by_class(dataset.num_classes);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    by_class[static_cast<std::size_t>(dataset.examples[i].label)].push_back(i);
  }
  const auto target = static_cast<std::size_t>(
      std::llround(test_fraction * static_cast<double>(dataset.size())));
  std::vector<std::size_t> take(by_class.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const double exact = test_fraction * static_cast<double>(by_class[c].size());
    take[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += take[c];
    remainders.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i) {
    const std::size_t c = remainders[i].second;
    if (take[c] < by_class[c].size()) {
      ++take[c];
      ++assigned;
    }
  }
  std::vector<bool> in_test(dataset.size(), false);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    Shuffle(by_class[c], rng);
    for (std::size_t i = 0; i < take[c]; ++i) in_test[by_class[c][i]] = true;
  }
  Dataset train{{}, dataset.num_classes, dataset.input_dim, dataset.name + "/train"};
  Dataset test{{}, dataset.num_classes, dataset.input_dim, dataset.name + "/test"};
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (in_test[i] ? test : train).examples.push_back(dataset.examples[i]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace dpfl

#endif  // DPFL_DATA_HPP_
