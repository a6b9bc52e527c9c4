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


// Calibrates the noise multiplier for a budget and prints how epsilon grows
// with the number of subsampled Gaussian steps.
//
//   dpfl_privacy_budget [q] [steps] [epsilon] [delta]

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

#include "dpfl/accountant.hpp"

int main(int argc, char** argv) {
  const double q = argc > 1 ? std::atof(argv[1]) : 0.01;
  const std::int64_t steps = argc > 2 ? std::atoll(argv[2]) : 1000;
  const double epsilon = argc > 3 ? std::atof(argv[3]) : 3.61;
  const double delta = argc > 4 ? std::atof(argv[4]) : 1e-5;

  try {
    const double sigma = dpfl::CalibrateSigma(q, steps, epsilon, delta);
    std::printf("q=%g steps=%lld target eps=%g delta=%g -> sigma=%.6f\n", q,
                static_cast<long long>(steps), epsilon, delta, sigma);
    dpfl::PrivacyLedger ledger(q, sigma, delta);
    for (std::int64_t done = 0; done < steps;) {
      const std::int64_t chunk = std::max<std::int64_t>(1, steps / 10);
      const std::int64_t n = std::min(chunk, steps - done);
      ledger = ledger.Compose(n);
      done += n;
      const auto eps = ledger.ToEpsilon();
      std::printf("  steps %6lld  eps %.4f  (order %g)\n", static_cast<long long>(done),
                  eps.epsilon, eps.best_order);
    }
  } catch (const dpfl::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  return 0;
}
