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

// Machinery shared by both protocols: privacy counters and budget gates, the
// confidence-scheduled vote, and the center's global-update decision.

#ifndef THRESH_VOTING_HPP_
#define THRESH_VOTING_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>

#include "thresh/errors.hpp"
#include "thresh/params.hpp"
#include "thresh/random.hpp"

namespace thresh {

// How the first global estimate is established.
enum class Bootstrap {
  kForced,  // the center declares an update in the first epoch
  kVote,    // the first update happens only when the vote passes
};

// kDisabled removes both budget gates. It exists only so the auditor can
// demonstrate that its checks catch an uncapped automaton.
enum class BudgetGate { kEnforced, kDisabled };

struct ProtocolOptions {
  ProtocolKind kind = ProtocolKind::kBernoulli;
  ProtocolParams params;
  NoiseLevels levels;
  SlackMode slack = SlackMode::kProof;
  Bootstrap bootstrap = Bootstrap::kForced;
  BudgetGate gate = BudgetGate::kEnforced;

  double slack_constant() const { return SlackConstant(kind, slack); }
  double role_cap() const { return RoleCap(params.epsilon); }
  int top_level() const { return levels.thresholds.top_level(); }
};

// Participation counts; spend is always count * cost.
struct PrivacyCounters {
  std::int64_t votes = 0;
  std::int64_t estimates = 0;
  double vote_spend = 0.0;      // c_V
  double estimate_spend = 0.0;  // c_E
};

// Largest level b with distance > T_b, or nullopt when distance is 0 (the
// comparison against T_{-1} = 0 is strict).
inline std::optional<int> LevelForDistance(double distance, const ThresholdLadder& ladder) {
  std::optional<int> level;
  for (int b = -1; b <= ladder.top_level(); ++b) {
    if (distance > ladder.at(b)) level = b;
  }
  return level;
}

// 2^(top - level) divides epoch. Level -1 asks for 2^(top+1) > T, which never
// divides an epoch index in [1, T].
inline bool ScheduleAllows(std::int64_t epoch, int level, int top_level) {
  Require(level >= -1 && level <= top_level, "confidence level out of range");
  const std::int64_t modulus = std::int64_t{1} << (top_level - level);
  return epoch % modulus == 0;
}

inline bool VoteBudgetAllows(const PrivacyCounters& c, const ProtocolOptions& o) {
  return o.gate == BudgetGate::kDisabled ||
         BudgetAllows(c.votes, o.levels.vote, o.role_cap());
}

inline bool EstimateBudgetAllows(const PrivacyCounters& c, const ProtocolOptions& o) {
  return o.gate == BudgetGate::kDisabled ||
         BudgetAllows(c.estimates, o.levels.estimate, o.role_cap());
}

// VoteYes: a confidence level exists, the budget allows, and the schedule
// for that level permits this epoch.
inline bool WantsToVote(const PrivacyCounters& c, std::int64_t epoch,
                        std::optional<int> level, const ProtocolOptions& o) {
  if (!level.has_value()) return false;
  if (!VoteBudgetAllows(c, o)) return false;
  return ScheduleAllows(epoch, *level, o.top_level());
}

// P[vote bit = 1]: e^a/(e^a+1) when voting yes, 1/(e^a+1) otherwise.
inline double VoteParameter(bool vote_yes, double a) {
  return vote_yes ? 1.0 / (1.0 + std::exp(-a)) : 1.0 / (std::exp(a) + 1.0);
}

inline void ChargeVote(PrivacyCounters& c, double a) {
  ++c.votes;
  c.vote_spend = static_cast<double>(c.votes) * a;
}

inline void ChargeEstimate(PrivacyCounters& c, double b) {
  ++c.estimates;
  c.estimate_spend = static_cast<double>(c.estimates) * b;
}

struct VoteOutcome {
  std::uint8_t bit = 0;
  bool vote_yes = false;
};

// One user's vote in `epoch`. User must expose `counters` and `rng`.
template <class User>
VoteOutcome Vote(User& user, std::int64_t epoch, std::optional<int> level,
                 const ProtocolOptions& o) {
  Require(epoch >= 1 && epoch <= o.params.num_epochs, "epoch out of range");
  VoteOutcome out;
  out.vote_yes = WantsToVote(user.counters, epoch, level, o);
  if (out.vote_yes) ChargeVote(user.counters, o.levels.vote);
  out.bit = BernoulliDraw(user.rng, VoteParameter(out.vote_yes, o.levels.vote)) ? 1 : 0;
  return out;
}

// True iff the mean vote strictly exceeds 1/(e^a+1) + sqrt(ln(K T/delta)/2n).
inline bool DecideGlobalUpdate(std::span<const std::uint8_t> votes, double a,
                               std::int64_t num_epochs, double delta,
                               double slack_constant) {
  Require(!votes.empty(), "no votes to tally");
  std::int64_t yes = 0;
  for (auto v : votes) yes += v ? 1 : 0;
  const auto n = static_cast<std::int64_t>(votes.size());
  const double mean = static_cast<double>(yes) / static_cast<double>(n);
  return mean > VoteParameter(false, a) + UpdateSlack(n, num_epochs, delta, slack_constant);
}

}  // namespace thresh

#endif  // THRESH_VOTING_HPP_
