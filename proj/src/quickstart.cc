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


// Trains the same synthetic federation with adaptive and fixed clipping and
// prints per-round accuracy, mean clip norm and spent epsilon.
//
//   dpfl_quickstart [seed]

#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "dpfl/dpfl.hpp"

int main(int argc, char** argv) {
  const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 1;

  dpfl::ExperimentConfig config;
  config.data.synthetic_classes = 3;
  config.data.synthetic_input_dim = 10;
  config.data.synthetic_examples = 1500;
  config.federation.rounds = 15;
  config.federation.local_batches = 3;
  config.federation.expected_batch = 20;
  config.federation.lr = 0.5;
  config.dp.target_epsilon = 3.0;
  config.moo.kappa = 0.01;
  config.moo.eta_c = 0.05;

  for (auto mode : {dpfl::TrainingMode::kAdaptive, dpfl::TrainingMode::kFixedClip}) {
    config.federation.mode = mode;
    auto prepared = dpfl::PrepareExperiment(config, seed);
    std::printf("%s clipping, sigma %.4f\n",
                mode == dpfl::TrainingMode::kAdaptive ? "adaptive" : "fixed",
                prepared.setup.sigma);
    dpfl::RunPrepared(prepared, 1, [](const dpfl::RoundRecord& r) {
      std::printf("  round %2lld  acc %.4f  C %.4f  eps %.4f\n",
                  static_cast<long long>(r.round_index), r.test_accuracy, r.mean_clip,
                  r.epsilon_so_far);
    });
  }
  return 0;
}
