// Copyright 2026 The Thresh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Protocol inputs and every closed-form constant derived from them: vote and
// estimate noise levels, threshold ladders, hash width and change budget.
//
// Conventions: log(T) is base 2. Ladder lengths use floor(log2 T); the
// estimate-noise and heavy-hitter formulas use the unfloored log2 T. All
// arithmetic is binary64 and strict inequalities are compared exactly.

#ifndef THRESH_PARAMS_HPP_
#define THRESH_PARAMS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "thresh/errors.hpp"

namespace thresh {

struct ProtocolParams {
  std::int64_t num_users = 0;          // n
  std::int64_t num_subgroups = 1;      // m
  std::int64_t min_subgroup_size = 0;  // L
  std::int64_t epoch_length = 0;       // rounds per epoch
  std::int64_t num_epochs = 0;         // T
  double epsilon = 0.0;
  double delta = 0.0;
  std::int64_t dictionary_size = 0;  // d; heavy hitters only

  bool operator==(const ProtocolParams&) const = default;
};

// Which ln(K T / delta) constant the global-update slack uses.
enum class SlackMode {
  kProof,    // K = 12, the constant the failure-probability argument needs
  kLiteral,  // K = 10, as printed in the Bernoulli pseudocode
};

enum class ProtocolKind { kBernoulli, kHeavy };

// Every violated basic invariant of `p`, empty when valid. Assumption 1 is
// checked separately by ValidateAssumption1.
inline std::vector<std::string> CheckParams(const ProtocolParams& p,
                                            bool needs_dictionary = false) {
  std::vector<std::string> problems;
  auto positive = [&](const char* name, std::int64_t v) {
    if (v < 1) problems.push_back(std::string(name) + " must be >= 1");
  };
  positive("n", p.num_users);
  positive("m", p.num_subgroups);
  positive("L", p.min_subgroup_size);
  positive("ell", p.epoch_length);
  positive("T", p.num_epochs);
  if (needs_dictionary) positive("d", p.dictionary_size);
  if (!(p.epsilon > 0.0) || !std::isfinite(p.epsilon)) {
    problems.push_back("epsilon must be a finite value > 0");
  }
  if (!(p.delta > 0.0 && p.delta < 1.0)) {
    problems.push_back("delta must lie in the open interval (0,1)");
  }
  if (p.num_subgroups >= 1 && p.min_subgroup_size >= 1 &&
      p.num_subgroups * p.min_subgroup_size > p.num_users) {
    problems.push_back("m*L must be <= n");
  }
  return problems;
}

inline void RequireValid(const ProtocolParams& p, bool needs_dictionary = false) {
  auto problems = CheckParams(p, needs_dictionary);
  if (!problems.empty()) throw ParameterError(problems.front());
}

inline int FloorLog2(std::int64_t value) {
  Require(value >= 1, "FloorLog2 needs a positive argument");
  int level = 0;
  while ((value >> 1) > 0) {
    value >>= 1;
    ++level;
  }
  return level;
}

// Thresholds T_{-1} < T_0 < ... < T_top, stored with level -1 at index 0.
class ThresholdLadder {
 public:
  ThresholdLadder() = default;

  explicit ThresholdLadder(std::vector<double> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw ParameterError("threshold ladder needs at least levels -1 and 0");
    }
    if (values_.front() != 0.0) {
      throw ParameterError("threshold ladder must start at exactly 0");
    }
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (!(values_[i] > values_[i - 1]) || !std::isfinite(values_[i])) {
        throw ParameterError("threshold ladder must be finite and strictly increasing");
      }
    }
  }

  int top_level() const { return static_cast<int>(values_.size()) - 2; }
  double at(int level) const {
    Require(level >= -1 && level <= top_level(), "threshold level out of range");
    return values_[static_cast<std::size_t>(level + 1)];
  }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  bool operator==(const ThresholdLadder&) const = default;

 private:
  std::vector<double> values_;
};

struct NoiseLevels {
  double vote = 0.0;      // a
  double estimate = 0.0;  // b
  ThresholdLadder thresholds;
  std::int64_t hash_width = 0;  // w; zero for the Bernoulli protocol

  static NoiseLevels Make(double vote, double estimate, ThresholdLadder thresholds,
                          std::int64_t hash_width = 0) {
    if (!(vote > 0.0) || !std::isfinite(vote)) {
      throw ParameterError("vote noise level must be finite and > 0");
    }
    if (!(estimate > 0.0) || !std::isfinite(estimate)) {
      throw ParameterError("estimate noise level must be finite and > 0");
    }
    if (hash_width < 0) throw ParameterError("hash width must be >= 0");
    return NoiseLevels{vote, estimate, std::move(thresholds), hash_width};
  }
};

struct ChangeBudget {
  double max_changes = 0.0;            // min(eps/8a, eps/4b)
  double displayed_lower_bound = 0.0;  // the accuracy theorem's looser form
};

namespace internal {

inline double Ln(double x) { return std::log(x); }

inline double Log2T(const ProtocolParams& p) {
  return std::log2(static_cast<double>(p.num_epochs));
}

inline double Num(std::int64_t v) { return static_cast<double>(v); }

}  // namespace internal

// Smallest L (exclusive) satisfying Assumption 1:
// (3/sqrt2 + sqrt32/eps) * sqrt(n ln(12 m T / delta)).
inline double Assumption1MinSubgroup(const ProtocolParams& p) {
  using internal::Num;
  const double k = internal::Ln(12.0 * Num(p.num_subgroups) * Num(p.num_epochs) / p.delta);
  return (3.0 / std::sqrt(2.0) + std::sqrt(32.0) / p.epsilon) *
         std::sqrt(Num(p.num_users) * k);
}

inline bool ValidateAssumption1(const ProtocolParams& p) {
  return static_cast<double>(p.min_subgroup_size) > Assumption1MinSubgroup(p);
}

inline double DeriveVoteNoise(const ProtocolParams& p) {
  using internal::Num;
  const double k = internal::Ln(12.0 * Num(p.num_subgroups) * Num(p.num_epochs) / p.delta);
  const double n = Num(p.num_users);
  const double numerator = 4.0 * std::sqrt(2.0 * n * k);
  const double offset = 3.0 / std::sqrt(2.0) * std::sqrt(n * k);
  const double denominator = Num(p.min_subgroup_size) - offset;
  if (!(denominator > 0.0)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "vote noise undefined: L = " << p.min_subgroup_size
        << " must exceed (3/sqrt2)*sqrt(n ln(12mT/delta)) = " << offset;
    throw ParameterError(msg.str());
  }
  return numerator / denominator;
}

inline double DeriveEstimateNoiseBernoulli(const ProtocolParams& p) {
  using internal::Num;
  const double n = Num(p.num_users);
  const double ell = Num(p.epoch_length);
  const double T = Num(p.num_epochs);
  const double sample_term = std::sqrt(internal::Ln(12.0 * T / p.delta) / (2.0 * n));
  const double numerator = std::sqrt(2.0 * internal::Ln(12.0 * T / p.delta) / (2.0 * n));
  const double denominator =
      internal::Log2T(p) * std::sqrt(internal::Ln(12.0 * n * T / p.delta) / (2.0 * ell)) -
      sample_term;
  if (!(denominator > 0.0)) {
    throw ParameterError(
        "estimate noise undefined: log2(T)*sqrt(ln(12nT/delta)/2ell) must exceed "
        "sqrt(ln(12T/delta)/2n); ell is too large relative to n");
  }
  return numerator / denominator;
}

inline std::int64_t HashWidth(std::int64_t num_users) { return 20 * num_users; }

inline double DeriveEstimateNoiseHeavy(const ProtocolParams& p, std::int64_t w) {
  using internal::Num;
  Require(w >= 1, "hash width must be >= 1");
  const double n = Num(p.num_users);
  const double T = Num(p.num_epochs);
  const double wd = Num(w);
  const double ell = Num(p.epoch_length);
  const double lw = internal::Ln(16.0 * wd * T / p.delta);
  const double skew = lw * std::sqrt(wd) / (n * n);
  const double numerator = 2.0 * (std::sqrt(lw / (n * wd)) + skew);
  const double denominator =
      2.0 * (internal::Log2T(p) + 2.0) *
          std::sqrt(2.0 * internal::Ln(16.0 * wd * n * T / p.delta) / (wd * ell)) -
      2.0 * std::sqrt(internal::Ln(16.0 * Num(p.dictionary_size) * T / p.delta) /
                      (2.0 * wd * n)) -
      skew;
  if (!(denominator > 0.0)) {
    throw ParameterError(
        "heavy-hitter estimate noise undefined: denominator is not positive "
        "(ell too large relative to n, or n too small for w = 20n)");
  }
  return numerator / denominator;
}

inline ThresholdLadder ThresholdsBernoulli(const ProtocolParams& p) {
  using internal::Num;
  const double unit = std::sqrt(
      internal::Ln(12.0 * Num(p.num_users) * Num(p.num_epochs) / p.delta) /
      (2.0 * Num(p.epoch_length)));
  const int top = FloorLog2(p.num_epochs);
  std::vector<double> values;
  for (int level = -1; level <= top; ++level) {
    values.push_back(2.0 * (level + 1) * unit);
  }
  return ThresholdLadder(std::move(values));
}

inline ThresholdLadder ThresholdsHeavy(const ProtocolParams& p, std::int64_t w) {
  using internal::Num;
  const double unit = std::sqrt(
      2.0 * internal::Ln(16.0 * Num(w) * Num(p.num_users) * Num(p.num_epochs) / p.delta) /
      (Num(w) * Num(p.epoch_length)));
  const int top = FloorLog2(p.num_epochs);
  std::vector<double> values;
  for (int level = -1; level <= top; ++level) {
    values.push_back(2.0 * (level + 1) * unit);
  }
  return ThresholdLadder(std::move(values));
}

inline NoiseLevels DeriveBernoulliLevels(const ProtocolParams& p) {
  RequireValid(p);
  return NoiseLevels::Make(DeriveVoteNoise(p), DeriveEstimateNoiseBernoulli(p),
                           ThresholdsBernoulli(p));
}

inline NoiseLevels DeriveHeavyLevels(const ProtocolParams& p) {
  RequireValid(p, /*needs_dictionary=*/true);
  const std::int64_t w = HashWidth(p.num_users);
  return NoiseLevels::Make(DeriveVoteNoise(p), DeriveEstimateNoiseHeavy(p, w),
                           ThresholdsHeavy(p, w), w);
}

inline double MaxChanges(double epsilon, double vote_noise, double estimate_noise) {
  return std::min(epsilon / (8.0 * vote_noise), epsilon / (4.0 * estimate_noise));
}

inline ChangeBudget ChangeBudgetBernoulli(const ProtocolParams& p, const NoiseLevels& levels) {
  using internal::Num;
  const double n = Num(p.num_users);
  const double vote_term =
      Num(p.min_subgroup_size) /
          (8.0 * std::sqrt(2.0 * n *
                           internal::Ln(12.0 * Num(p.num_subgroups) * Num(p.num_epochs) /
                                        p.delta))) -
      1.0;
  const double estimate_term =
      (internal::Log2T(p) * std::sqrt(n / Num(p.epoch_length)) - 1.0) / std::sqrt(2.0);
  return ChangeBudget{MaxChanges(p.epsilon, levels.vote, levels.estimate),
                      p.epsilon / 4.0 * std::min(vote_term, estimate_term)};
}

inline ChangeBudget ChangeBudgetHeavy(const ProtocolParams& p, const NoiseLevels& levels) {
  using internal::Num;
  const double n = Num(p.num_users);
  const double T = Num(p.num_epochs);
  const double ell = Num(p.epoch_length);
  const double vote_term =
      Num(p.min_subgroup_size) /
          (8.0 * std::sqrt(2.0 * n *
                           internal::Ln(12.0 * Num(p.num_subgroups) * T / p.delta))) -
      1.0;
  const double l320 = internal::Ln(320.0 * n * T / p.delta);
  const double estimate_term =
      (internal::Log2T(p) * std::sqrt(n * internal::Ln(320.0 * n * n * T / p.delta) /
                                      (10.0 * ell)) -
       std::sqrt(internal::Ln(16.0 * Num(p.dictionary_size) * T / p.delta) / 10.0) -
       2.0 * l320 * std::sqrt(5.0 / n)) /
      (std::sqrt(l320) * (1.0 + 20.0 / std::sqrt(n)));
  return ChangeBudget{MaxChanges(p.epsilon, levels.vote, levels.estimate),
                      p.epsilon / 4.0 * std::min(vote_term, estimate_term)};
}

// The per-role privacy cap each counter may reach.
inline double RoleCap(double epsilon) { return epsilon / 4.0; }

// True when one more participation at `cost` keeps the counter within `cap`.
// Counters are tracked as counts, so the spend after k participations is
// exactly k * cost.
inline bool BudgetAllows(std::int64_t used, double cost, double cap) {
  return static_cast<double>(used + 1) * cost <= cap;
}

// Largest k with k * cost <= cap under the same predicate as BudgetAllows.
inline std::int64_t ParticipationLimit(double cost, double cap) {
  Require(cost > 0.0, "participation cost must be > 0");
  if (cap < 0.0) return 0;
  auto k = static_cast<std::int64_t>(std::floor(cap / cost));
  while (k > 0 && static_cast<double>(k) * cost > cap) --k;
  while (static_cast<double>(k + 1) * cost <= cap) ++k;
  return k;
}

inline double SlackConstant(ProtocolKind kind, SlackMode mode) {
  if (kind == ProtocolKind::kHeavy) return 16.0;
  return mode == SlackMode::kProof ? 12.0 : 10.0;
}

// sqrt(ln(K T / delta) / 2n), the tolerance above the all-"no" vote mean.
inline double UpdateSlack(std::int64_t n, std::int64_t num_epochs, double delta,
                          double slack_constant) {
  return std::sqrt(std::log(slack_constant * static_cast<double>(num_epochs) / delta) /
                   (2.0 * static_cast<double>(n)));
}

}  // namespace thresh

#endif  // THRESH_PARAMS_HPP_
