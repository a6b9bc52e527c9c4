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

#ifndef DPFL_ERROR_HPP_
#define DPFL_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpfl {

// Every failure raised by the library carries a short, stable error code
// ("empty-batch", "invalid-clip-norm", ...) plus a human readable detail.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string code, const std::string& detail = {})
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Raised when a NaN/Inf shows up in model parameters mid-run.
class NumericError : public Error {
 public:
  explicit NumericError(std::int64_t round)
      : Error("numeric-failure",
              "non-finite parameters after round " + std::to_string(round)),
        round_(round) {}

  std::int64_t round() const noexcept { return round_; }

 private:
  std::int64_t round_;
};

// Raised for filesystem problems (missing files, unwritable output dir).
class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error("io-error", detail) {}
};

}  // namespace dpfl

#endif  // DPFL_ERROR_HPP_
