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

// Umbrella header.

#ifndef DPFL_DPFL_HPP_
#define DPFL_DPFL_HPP_

#include "dpfl/accountant.hpp"
#include "dpfl/config.hpp"
#include "dpfl/data.hpp"
#include "dpfl/dp_mechanism.hpp"
#include "dpfl/error.hpp"
#include "dpfl/experiment.hpp"
#include "dpfl/experiment_config.hpp"
#include "dpfl/federation.hpp"
#include "dpfl/harness.hpp"
#include "dpfl/moo_clipping.hpp"
#include "dpfl/random.hpp"
#include "dpfl/tensor.hpp"

#endif  // DPFL_DPFL_HPP_
