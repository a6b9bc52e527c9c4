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

// Renyi-DP accounting for the Poisson-subsampled Gaussian mechanism.
//
// For sampling rate q, noise multiplier sigma and integer order alpha >= 2,
// one application of the mechanism has RDP
//
//   eps(alpha) = 1/(alpha-1) * log( sum_{k=0}^{alpha} C(alpha,k) (1-q)^(alpha-k)
//                                     q^k exp(k(k-1) / (2 sigma^2)) ).
//
// Since the k = 0 and k = 1 terms have exp(.) = 1 and the binomial weights
// sum to one, the argument of the log is 1 + sum_{k>=2} C(alpha,k) (1-q)^(alpha-k)
// q^k expm1(k(k-1)/(2 sigma^2)). The tail is accumulated in log space, which
// keeps full relative precision both for tiny q and for huge exponents.
//
// RDP composes additively over steps; the (epsilon, delta) guarantee is
//   epsilon = min_alpha [ steps * eps(alpha) + log(1/delta) / (alpha - 1) ].

#ifndef DPFL_ACCOUNTANT_HPP_
#define DPFL_ACCOUNTANT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpfl/error.hpp"

namespace dpfl {

inline double RdpGaussian(double sigma, double alpha) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error("invalid-sigma", std::to_string(sigma));
  }
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw Error("invalid-order", std::to_string(alpha));
  }
  return alpha / (2.0 * sigma * sigma);
}

namespace internal {

// log(expm1(x)) for x > 0.
inline double LogExpm1(double x) {
  if (x > 30.0) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

// log(1 + exp(x)).
inline double Softplus(double x) {
  if (x > 35.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

inline double LogBinomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double RdpSubsampledIntegerOrder(double q, double sigma, int alpha) {
  const double log_q = std::log(q);
  const double log_1mq = q < 1.0 ? std::log1p(-q)
                                 : -std::numeric_limits<double>::infinity();
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(alpha));
  for (int k = 2; k <= alpha; ++k) {
    const int rest = alpha - k;
    if (rest > 0 && q >= 1.0) continue;
    const double kk = static_cast<double>(k);
    double term = LogBinomial(alpha, kk) + kk * log_q +
                  LogExpm1(kk * (kk - 1.0) * inv_two_var);
    if (rest > 0) term += static_cast<double>(rest) * log_1mq;
    log_terms.push_back(term);
  }
  if (log_terms.empty()) return 0.0;
  const double m = *std::max_element(log_terms.begin(), log_terms.end());
  if (m == -std::numeric_limits<double>::infinity()) return 0.0;
  double acc = 0.0;
  for (double t : log_terms) acc += std::exp(t - m);
  const double log_tail = m + std::log(acc);
  return std::max(0.0, Softplus(log_tail) / static_cast<double>(alpha - 1));
}

}  // namespace internal

// RDP of one Poisson-subsampled Gaussian step. Integer orders are exact;
// fractional orders are bounded by the value at the neighbouring integer
// order(s) >= 2, using that RDP is nondecreasing in alpha.
inline double RdpSubsampledGaussian(double q, double sigma, double alpha) {
  if (!(q > 0.0 && q <= 1.0)) {
    throw Error("invalid-sampling-rate", std::to_string(q));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error("invalid-sigma", std::to_string(sigma));
  }
  if (!(alpha > 1.0) || !std::isfinite(alpha)) {
    throw Error("invalid-order", std::to_string(alpha));
  }
  const double lower = std::floor(alpha);
  if (lower == alpha) {
    return internal::RdpSubsampledIntegerOrder(q, sigma, static_cast<int>(alpha));
  }
  if (q == 1.0) return RdpGaussian(sigma, alpha);
  double bound = internal::RdpSubsampledIntegerOrder(
      q, sigma, static_cast<int>(std::ceil(alpha)));
  if (lower >= 2.0) {
    bound = std::max(bound, internal::RdpSubsampledIntegerOrder(
                                q, sigma, static_cast<int>(lower)));
  }
  return bound;
}

// Integers 2..256 plus 1.25 and 1.5, sorted.
inline std::vector<double> DefaultOrders() {
  std::vector<double> orders = {1.25, 1.5};
  for (int a = 2; a <= 256; ++a) orders.push_back(a);
  return orders;
}

struct EpsilonResult {
  double epsilon = 0.0;
  double best_order = 0.0;
};

// min over alpha of total_rdp[alpha] + log(1/delta)/(alpha-1); ties go to the
// smallest order.
inline EpsilonResult EpsilonFromRdp(const std::vector<double>& orders,
                                    const std::vector<double>& total_rdp,
                                    double delta) {
  if (orders.empty()) throw Error("no-orders");
  if (orders.size() != total_rdp.size()) {
    throw Error("shape-mismatch", "orders vs rdp values");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error("invalid-delta", std::to_string(delta));
  }
  const double log_inv_delta = -std::log(delta);
  EpsilonResult best{std::numeric_limits<double>::infinity(), orders.front()};
  for (std::size_t i = 0; i < orders.size(); ++i) {
    const double eps = total_rdp[i] + log_inv_delta / (orders[i] - 1.0);
    if (eps < best.epsilon) best = {eps, orders[i]};
  }
  return best;
}

// Running privacy state of one experiment. A sigma of 0 denotes a
// non-private run whose epsilon is +inf.
class PrivacyLedger {
 public:
  PrivacyLedger() = default;

  PrivacyLedger(double q, double sigma, double delta,
                std::vector<double> orders = DefaultOrders())
      : q_(q), sigma_(sigma), delta_(delta), orders_(std::move(orders)) {
    if (!(q > 0.0 && q <= 1.0)) {
      throw Error("invalid-sampling-rate", std::to_string(q));
    }
    if (!(sigma >= 0.0)) throw Error("invalid-sigma", std::to_string(sigma));
    if (!(delta > 0.0 && delta < 1.0)) {
      throw Error("invalid-delta", std::to_string(delta));
    }
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      if (!(orders_[i] > 1.0)) throw Error("invalid-order", std::to_string(orders_[i]));
      if (i > 0 && !(orders_[i] > orders_[i - 1])) {
        throw Error("invalid-order", "orders must be strictly increasing");
      }
    }
    if (sigma_ > 0.0) {
      per_step_rdp_.reserve(orders_.size());
      for (double a : orders_) per_step_rdp_.push_back(RdpSubsampledGaussian(q_, sigma_, a));
    }
  }

  double q() const { return q_; }
  double sigma() const { return sigma_; }
  double delta() const { return delta_; }
  std::int64_t steps() const { return steps_; }
  const std::vector<double>& orders() const { return orders_; }
  const std::vector<double>& per_step_rdp() const { return per_step_rdp_; }
  bool is_private() const { return sigma_ > 0.0; }

  PrivacyLedger Compose(std::int64_t additional_steps) const {
    if (additional_steps < 0) {
      throw Error("invalid-steps", std::to_string(additional_steps));
    }
    PrivacyLedger next = *this;
    next.steps_ += additional_steps;
    return next;
  }

  std::vector<double> TotalRdp() const {
    std::vector<double> totals(per_step_rdp_.size());
    for (std::size_t i = 0; i < totals.size(); ++i) {
      totals[i] = static_cast<double>(steps_) * per_step_rdp_[i];
    }
    return totals;
  }

  EpsilonResult ToEpsilon() const {
    if (orders_.empty()) throw Error("no-orders");
    if (!is_private()) {
      return {std::numeric_limits<double>::infinity(), 0.0};
    }
    if (steps_ == 0) return {0.0, 0.0};
    return EpsilonFromRdp(orders_, TotalRdp(), delta_);
  }

 private:
  double q_ = 1.0;
  double sigma_ = 0.0;
  double delta_ = 1e-5;
  std::int64_t steps_ = 0;
  std::vector<double> orders_;
  std::vector<double> per_step_rdp_;
};

inline double EpsilonFor(double q, double sigma, std::int64_t steps,
                         double delta,
                         const std::vector<double>& orders = DefaultOrders()) {
  return PrivacyLedger(q, sigma, delta, orders).Compose(steps).ToEpsilon().epsilon;
}

inline constexpr double kMinCalibratedSigma = 0.3;
inline constexpr double kMaxCalibratedSigma = 100.0;

// Smallest sigma (to relative precision 1e-7) in [0.3, 100] whose epsilon
// after `steps` steps does not exceed target_epsilon.
inline double CalibrateSigma(double q, std::int64_t steps,
                             double target_epsilon, double delta,
                             const std::vector<double>& orders = DefaultOrders()) {
  if (steps <= 0) throw Error("uncalibratable", "steps must be >= 1");
  if (!(target_epsilon > 0.0)) {
    throw Error("uncalibratable", "target epsilon must be > 0");
  }
  auto eps = [&](double sigma) { return EpsilonFor(q, sigma, steps, delta, orders); };
  double lo = kMinCalibratedSigma;
  double hi = kMaxCalibratedSigma;
  if (eps(hi) > target_epsilon) {
    throw Error("uncalibratable", "target epsilon " + std::to_string(target_epsilon) +
                                      " not reachable with sigma <= 100");
  }
  if (eps(lo) <= target_epsilon) return lo;
  while (hi / lo > 1.0 + 1e-7) {
    const double mid = std::sqrt(lo * hi);
    if (eps(mid) <= target_epsilon) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace dpfl

#endif  // DPFL_ACCOUNTANT_HPP_
