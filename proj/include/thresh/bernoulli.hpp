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

// Thresh for Bernoulli means: per-user vote and estimate automata and the
// center's epoch loop.

#ifndef THRESH_BERNOULLI_HPP_
#define THRESH_BERNOULLI_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "thresh/errors.hpp"
#include "thresh/params.hpp"
#include "thresh/random.hpp"
#include "thresh/voting.hpp"

namespace thresh {

struct UserState {
  std::int64_t id = 0;
  PrivacyCounters counters;
  // Local estimate at the last global update; nullopt before any update.
  std::optional<double> p_hat_last;
  Rng rng;
};

struct CenterState {
  std::int64_t epoch = 0;
  double p_tilde = -1.0;
  std::int64_t last_update = 0;  // 0 until the first global update
};

struct EpochRecord {
  std::int64_t epoch = 0;
  std::vector<std::uint8_t> votes;
  std::vector<std::uint8_t> estimates;
  std::vector<std::uint8_t> vote_flags;
  std::vector<std::uint8_t> estimate_flags;
  bool global_update = false;
  double p_tilde = -1.0;
};

// Append-only epoch log.
template <class Record>
class BasicTranscript {
 public:
  void Append(Record record) { epochs_.push_back(std::move(record)); }
  const std::vector<Record>& epochs() const { return epochs_; }
  std::size_t size() const { return epochs_.size(); }
  bool empty() const { return epochs_.empty(); }
  const Record& operator[](std::size_t i) const { return epochs_[i]; }
  const Record& back() const { return epochs_.back(); }

 private:
  std::vector<Record> epochs_;
};

using Transcript = BasicTranscript<EpochRecord>;

inline double LocalEpochMean(std::span<const std::uint8_t> bits, std::int64_t epoch_length) {
  Require(static_cast<std::int64_t>(bits.size()) == epoch_length,
          "epoch bit sequence must have exactly ell entries");
  std::int64_t ones = 0;
  for (auto b : bits) {
    Require(b <= 1, "epoch bits must be 0 or 1");
    ones += b;
  }
  return static_cast<double>(ones) / static_cast<double>(epoch_length);
}

inline std::optional<int> ConfidenceLevel(double p_hat, std::optional<double> p_hat_last,
                                          const ThresholdLadder& ladder) {
  if (!p_hat_last.has_value()) return ladder.top_level();
  return LevelForDistance(std::fabs(p_hat - *p_hat_last), ladder);
}

// P[estimate bit = 1]: (1 + p_hat (e^b - 1))/(e^b + 1) when sending, else
// 1/(e^b + 1).
inline double EstimateParameter(bool send, double p_hat, double b) {
  const double eb = std::exp(b);
  if (!send) return 1.0 / (eb + 1.0);
  return (1.0 + p_hat * std::expm1(b)) / (eb + 1.0);
}

struct EstimateOutcome {
  std::uint8_t bit = 0;
  bool sent = false;
};

inline EstimateOutcome Estimate(UserState& user, double p_hat, bool global_update,
                                const ProtocolOptions& o) {
  Require(p_hat >= 0.0 && p_hat <= 1.0, "local estimate must lie in [0,1]");
  EstimateOutcome out;
  out.sent = global_update && EstimateBudgetAllows(user.counters, o);
  if (out.sent) ChargeEstimate(user.counters, o.levels.estimate);
  out.bit = BernoulliDraw(user.rng, EstimateParameter(out.sent, p_hat, o.levels.estimate)) ? 1 : 0;
  return out;
}

// (1/n) sum_i (x_i (e^b + 1) - 1)/(e^b - 1) over any ordered field; `exp_b`
// is e^b in that field. Used directly with exact rationals in tests.
template <class Scalar, class Range>
Scalar DebiasedMean(const Range& values, const Scalar& exp_b) {
  Scalar total{};
  std::int64_t count = 0;
  for (const auto& x : values) {
    total = total + (Scalar(x) * (exp_b + Scalar(1)) - Scalar(1)) / (exp_b - Scalar(1));
    ++count;
  }
  Require(count > 0, "nothing to aggregate");
  return total / Scalar(count);
}

inline double AggregateEstimates(std::span<const std::uint8_t> bits, double b) {
  Require(!bits.empty(), "nothing to aggregate");
  std::int64_t ones = 0;
  for (auto x : bits) ones += x ? 1 : 0;
  const double n = static_cast<double>(bits.size());
  const double eb = std::exp(b);
  const double em1 = std::expm1(b);
  // Every bit contributes one of two values; sum them by count.
  const double one_value = eb / em1;
  const double zero_value = -1.0 / em1;
  return (static_cast<double>(ones) * one_value +
          (n - static_cast<double>(ones)) * zero_value) / n;
}

inline std::vector<UserState> MakeUsers(std::int64_t n, std::uint64_t seed) {
  std::vector<UserState> users;
  users.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    users.push_back(UserState{i, {}, std::nullopt,
                              MakeStream(seed, StreamDomain::kProtocol,
                                         static_cast<std::uint64_t>(i))});
  }
  return users;
}

namespace internal {

inline bool ForcesUpdate(const CenterState& center, const ProtocolOptions& o) {
  return o.bootstrap == Bootstrap::kForced && center.last_update == 0;
}

}  // namespace internal

// One epoch: vote phase, update decision, estimate phase, publication.
// `local_means[i]` is user i's epoch mean.
inline EpochRecord RunEpoch(CenterState& center, std::vector<UserState>& users,
                            std::span<const double> local_means, const ProtocolOptions& o) {
  const auto n = static_cast<std::size_t>(o.params.num_users);
  Require(users.size() == n, "user count does not match n");
  Require(local_means.size() == n, "need one local mean per user");
  Require(center.epoch < o.params.num_epochs, "all epochs already run");

  EpochRecord rec;
  rec.epoch = center.epoch + 1;
  rec.votes.resize(n);
  rec.vote_flags.resize(n);
  rec.estimates.resize(n);
  rec.estimate_flags.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto level = ConfidenceLevel(local_means[i], users[i].p_hat_last, o.levels.thresholds);
    const VoteOutcome v = Vote(users[i], rec.epoch, level, o);
    rec.votes[i] = v.bit;
    rec.vote_flags[i] = v.vote_yes;
  }

  rec.global_update = internal::ForcesUpdate(center, o) ||
                      DecideGlobalUpdate(rec.votes, o.levels.vote, o.params.num_epochs,
                                         o.params.delta, o.slack_constant());

  for (std::size_t i = 0; i < n; ++i) {
    const EstimateOutcome e = Estimate(users[i], local_means[i], rec.global_update, o);
    rec.estimates[i] = e.bit;
    rec.estimate_flags[i] = e.sent;
  }

  center.epoch = rec.epoch;
  if (rec.global_update) {
    center.p_tilde = AggregateEstimates(rec.estimates, o.levels.estimate);
    center.last_update = rec.epoch;
    for (std::size_t i = 0; i < n; ++i) users[i].p_hat_last = local_means[i];
  }
  rec.p_tilde = center.p_tilde;
  return rec;
}

inline EpochRecord RunEpochBits(CenterState& center, std::vector<UserState>& users,
                                const std::vector<std::vector<std::uint8_t>>& epoch_bits,
                                const ProtocolOptions& o) {
  std::vector<double> means;
  means.reserve(epoch_bits.size());
  for (const auto& bits : epoch_bits) {
    means.push_back(LocalEpochMean(bits, o.params.epoch_length));
  }
  return RunEpoch(center, users, means, o);
}

// Owns the state of one protocol execution.
class BernoulliProtocol {
 public:
  BernoulliProtocol(ProtocolOptions options, std::uint64_t seed)
      : options_(std::move(options)), users_(MakeUsers(options_.params.num_users, seed)) {
    Require(options_.kind == ProtocolKind::kBernoulli, "options are not for the Bernoulli protocol");
  }

  const EpochRecord& Step(std::span<const double> local_means) {
    transcript_.Append(RunEpoch(center_, users_, local_means, options_));
    return transcript_.back();
  }

  const ProtocolOptions& options() const { return options_; }
  const std::vector<UserState>& users() const { return users_; }
  const CenterState& center() const { return center_; }
  const Transcript& transcript() const { return transcript_; }

 private:
  ProtocolOptions options_;
  std::vector<UserState> users_;
  CenterState center_;
  Transcript transcript_;
};

}  // namespace thresh

#endif  // THRESH_BERNOULLI_HPP_
