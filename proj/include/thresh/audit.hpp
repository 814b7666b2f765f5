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

// Privacy auditing: deterministic replay of per-message likelihoods from a
// recorded transcript, exact log-ratio bounds for pairs of inputs, exhaustive
// enumeration at tiny scale, and participation-count checks.

#ifndef THRESH_AUDIT_HPP_
#define THRESH_AUDIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thresh/bernoulli.hpp"
#include "thresh/errors.hpp"
#include "thresh/heavy.hpp"
#include "thresh/params.hpp"
#include "thresh/random.hpp"
#include "thresh/voting.hpp"

namespace thresh {

// Slack on every "<= epsilon" comparison made by the auditor.
inline constexpr int kAuditUlps = 16;

inline double UlpsAbove(double x, int ulps) {
  for (int k = 0; k < ulps; ++k) x = std::nextafter(x, INFINITY);
  return x;
}

inline bool WithinEpsilon(double log_ratio, double epsilon) {
  return log_ratio <= UlpsAbove(epsilon, kAuditUlps);
}

enum class MessageKind { kVote, kEstimate };

// The probability of one recorded message under one hypothetical input.
// log_probability = data_term + a term that depends only on the recorded
// message, so ratios only need data_term.
struct MessageLikelihood {
  std::int64_t epoch = 0;
  std::int64_t user = 0;
  MessageKind kind = MessageKind::kVote;
  bool participated = false;  // VoteYes or SendEstimate under this input
  // Vote and Bernoulli estimate: P[bit = 1]. Heavy estimate: P[positive sign
  // | recorded coordinate].
  double parameter = 0.0;
  double log_probability = 0.0;
  double data_term = 0.0;
};

namespace internal {

// log(1 + e^x)
inline double Softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline MessageLikelihood VoteLikelihood(std::int64_t epoch, std::int64_t user, bool yes,
                                        std::uint8_t bit, double a) {
  MessageLikelihood m;
  m.epoch = epoch;
  m.user = user;
  m.kind = MessageKind::kVote;
  m.participated = yes;
  m.parameter = VoteParameter(yes, a);
  m.data_term = (bit == 1) == yes ? a : 0.0;
  m.log_probability = m.data_term - Softplus(a);
  return m;
}

// Bernoulli estimate: P[1] = (1 + p(e^b - 1))/(e^b + 1) when sending,
// 1/(e^b + 1) otherwise.
// log(1 + p (e^{+-b} - 1)). For bit 0 and p > 1/2 the sum cancels, so it is
// taken as log((1 - p) + p e^-b) instead.
inline double EstimateDataTerm(double p_hat, std::uint8_t bit, double b) {
  if (bit == 1) return std::log1p(p_hat * std::expm1(b));
  if (p_hat <= 0.5) return std::log1p(p_hat * std::expm1(-b));
  return std::log((1.0 - p_hat) + p_hat * std::exp(-b));
}

inline MessageLikelihood EstimateLikelihood(std::int64_t epoch, std::int64_t user, bool send,
                                            double p_hat, std::uint8_t bit, double b) {
  MessageLikelihood m;
  m.epoch = epoch;
  m.user = user;
  m.kind = MessageKind::kEstimate;
  m.participated = send;
  m.parameter = EstimateParameter(send, p_hat, b);
  if (send) m.data_term = EstimateDataTerm(p_hat, bit, b);
  m.log_probability = m.data_term + (bit == 1 ? 0.0 : b) - Softplus(b);
  return m;
}

// Heavy estimate: P[(j, s)] = (1 + s h_j sqrt(w)/c)/(2w); h = 0 when not sending.
// data_term is the same constant for every non-sending input.
inline MessageLikelihood ReportLikelihood(std::int64_t epoch, std::int64_t user, bool send,
                                          const HashVector& hash, const RandomizedReport& report,
                                          std::int64_t w, double b) {
  Require(report.index >= 0 && report.index < w, "report index outside the hash width");
  MessageLikelihood m;
  m.epoch = epoch;
  m.user = user;
  m.kind = MessageKind::kEstimate;
  m.participated = send;
  const double h_j = send ? hash.values[static_cast<std::size_t>(report.index)] : 0.0;
  m.parameter = PositiveSignProbability(h_j, w, b);
  const double sign = report.value > 0 ? 1.0 : -1.0;
  // log((e^b + 1) P[sign]) = log1p(u expm1(b)), u = (1 + sign h_j sqrt(w))/2
  const double u = std::clamp(0.5 * (1.0 + sign * h_j * std::sqrt(static_cast<double>(w))), 0.0, 1.0);
  m.data_term = std::log1p(u * std::expm1(b));
  m.log_probability = m.data_term - std::log1p(std::exp(b)) - std::log(static_cast<double>(w));
  return m;
}

template <class Record>
void RequireTranscriptShape(const BasicTranscript<Record>& transcript, const ProtocolOptions& o,
                            std::int64_t user, std::size_t input_epochs) {
  const auto n = static_cast<std::size_t>(o.params.num_users);
  Require(user >= 0 && static_cast<std::size_t>(user) < n, "user index out of range");
  Require(transcript.size() <= static_cast<std::size_t>(o.params.num_epochs),
          "transcript longer than T");
  Require(input_epochs >= transcript.size(), "hypothetical input shorter than the transcript");
  for (std::size_t t = 0; t < transcript.size(); ++t) {
    const auto& rec = transcript[t];
    Require(rec.epoch == static_cast<std::int64_t>(t + 1), "transcript epochs are not consecutive");
    Require(rec.votes.size() == n && rec.vote_flags.size() == n && rec.estimate_flags.size() == n,
            "transcript record does not match n");
  }
}

}  // namespace internal

// Replays user `user`'s automaton on hypothetical per-epoch means against the
// recorded broadcast and returns the likelihood of each recorded message
// (vote then estimate, per epoch).
inline std::vector<MessageLikelihood> ReplayUserLikelihood(const Transcript& transcript,
                                                           const ProtocolOptions& o,
                                                           std::int64_t user,
                                                           std::span<const double> epoch_means) {
  internal::RequireTranscriptShape(transcript, o, user, epoch_means.size());
  const auto i = static_cast<std::size_t>(user);
  std::vector<MessageLikelihood> out;
  PrivacyCounters counters;
  std::optional<double> p_last;
  for (std::size_t t = 0; t < transcript.size(); ++t) {
    const auto& rec = transcript[t];
    Require(rec.estimates.size() == rec.votes.size(), "transcript record does not match n");
    const double p_hat = epoch_means[t];
    Require(p_hat >= 0.0 && p_hat <= 1.0, "epoch means must lie in [0,1]");
    const auto level = ConfidenceLevel(p_hat, p_last, o.levels.thresholds);
    const bool yes = WantsToVote(counters, rec.epoch, level, o);
    if (yes) ChargeVote(counters, o.levels.vote);
    out.push_back(internal::VoteLikelihood(rec.epoch, user, yes, rec.votes[i], o.levels.vote));
    const bool send = rec.global_update && EstimateBudgetAllows(counters, o);
    if (send) ChargeEstimate(counters, o.levels.estimate);
    out.push_back(internal::EstimateLikelihood(rec.epoch, user, send, p_hat, rec.estimates[i],
                                               o.levels.estimate));
    if (rec.global_update) p_last = p_hat;
  }
  return out;
}

inline std::vector<MessageLikelihood> ReplayUserLikelihood(
    const Transcript& transcript, const ProtocolOptions& o, std::int64_t user,
    const std::vector<std::vector<std::uint8_t>>& epoch_bits) {
  std::vector<double> means;
  for (const auto& bits : epoch_bits) means.push_back(LocalEpochMean(bits, o.params.epoch_length));
  return ReplayUserLikelihood(transcript, o, user, means);
}

// HeavyThresh replay; `epoch_samples[t]` holds the user's ell samples of epoch t+1.
inline std::vector<MessageLikelihood> ReplayUserLikelihood(
    const HeavyTranscript& transcript, const ProtocolOptions& o, std::int64_t user,
    const std::vector<std::vector<DictValue>>& epoch_samples) {
  internal::RequireTranscriptShape(transcript, o, user, epoch_samples.size());
  const auto i = static_cast<std::size_t>(user);
  const std::int64_t w = o.levels.hash_width;
  std::vector<MessageLikelihood> out;
  PrivacyCounters counters;
  std::optional<HashVector> y_last;
  for (std::size_t t = 0; t < transcript.size(); ++t) {
    const auto& rec = transcript[t];
    Require(rec.reports.size() == rec.votes.size(), "transcript record does not match n");
    Require(rec.oracle && rec.oracle->projection->rows() == w, "transcript hash width mismatch");
    HashVector hash = HashSamples(*rec.oracle->projection, epoch_samples[t]);
    const auto level = HeavyConfidence(hash, y_last, o.levels.thresholds);
    const bool yes = WantsToVote(counters, rec.epoch, level, o);
    if (yes) ChargeVote(counters, o.levels.vote);
    out.push_back(internal::VoteLikelihood(rec.epoch, user, yes, rec.votes[i], o.levels.vote));
    const bool send = rec.global_update && EstimateBudgetAllows(counters, o);
    if (send) ChargeEstimate(counters, o.levels.estimate);
    out.push_back(internal::ReportLikelihood(rec.epoch, user, send, hash, rec.reports[i], w,
                                             o.levels.estimate));
    if (rec.global_update) y_last = std::move(hash);
  }
  return out;
}

// log(P[recorded messages | x] / P[recorded messages | x']) from two replays
// of the same transcript. Vote factors are e^a or 1, so that part is summed
// as an integer count times a.
inline double LogRatioFromReplays(const std::vector<MessageLikelihood>& x,
                                  const std::vector<MessageLikelihood>& x_prime, double a) {
  Require(x.size() == x_prime.size(), "replays cover different transcripts");
  std::int64_t vote_balance = 0;
  double estimate_part = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    Require(x[k].kind == x_prime[k].kind && x[k].epoch == x_prime[k].epoch,
            "replays are not aligned");
    if (x[k].kind == MessageKind::kVote) {
      vote_balance += (x[k].data_term != 0.0 ? 1 : 0) - (x_prime[k].data_term != 0.0 ? 1 : 0);
    } else {
      estimate_part += x[k].data_term - x_prime[k].data_term;
    }
  }
  return static_cast<double>(vote_balance) * a + estimate_part;
}

template <class Transcript_, class Input>
double TranscriptRatioBound(const Transcript_& transcript, const ProtocolOptions& o,
                            std::int64_t user, const Input& x, const Input& x_prime) {
  return LogRatioFromReplays(ReplayUserLikelihood(transcript, o, user, x),
                             ReplayUserLikelihood(transcript, o, user, x_prime), o.levels.vote);
}

struct PrivacySpendReport {
  double epsilon = 0.0;
  std::vector<double> per_user_max;  // largest log-ratio seen for each user
  double global_max = 0.0;
  std::int64_t pairs_checked = 0;
  std::int64_t violations = 0;  // pairs whose log-ratio exceeds epsilon

  bool ok() const { return violations == 0; }

  void Record(std::int64_t user, double log_ratio) {
    if (per_user_max.size() <= static_cast<std::size_t>(user)) {
      per_user_max.resize(static_cast<std::size_t>(user) + 1, 0.0);
    }
    auto& slot = per_user_max[static_cast<std::size_t>(user)];
    slot = std::max(slot, log_ratio);
    global_max = std::max(global_max, log_ratio);
    ++pairs_checked;
    if (!WithinEpsilon(log_ratio, epsilon)) ++violations;
  }
};

// A random full-record input for one user, summarized by epoch means (the
// automaton reads data only through them). Styles: constant mean, a mean that
// jumps between epochs, and alternating extremes.
inline std::vector<double> RandomEpochMeans(Rng& rng, std::int64_t num_epochs,
                                            std::int64_t epoch_length) {
  std::vector<double> out;
  const auto style = std::uniform_int_distribution<int>(0, 2)(rng);
  double mu = Uniform01(rng);
  bool high = BernoulliDraw(rng, 0.5);
  for (std::int64_t t = 0; t < num_epochs; ++t) {
    std::int64_t ones = 0;
    if (style == 2) {
      ones = high ? epoch_length : 0;
      if (BernoulliDraw(rng, 0.5)) high = !high;
    } else {
      if (style == 1 && BernoulliDraw(rng, 0.25)) mu = Uniform01(rng);
      ones = std::binomial_distribution<std::int64_t>(epoch_length, mu)(rng);
    }
    out.push_back(static_cast<double>(ones) / static_cast<double>(epoch_length));
  }
  return out;
}

// A random dictionary record: per epoch either a point mass, a uniform
// draw over [d], or a two-point mixture.
inline std::vector<std::vector<DictValue>> RandomEpochSamples(Rng& rng, std::int64_t num_epochs,
                                                              std::int64_t epoch_length,
                                                              std::int64_t d) {
  std::uniform_int_distribution<DictValue> value(0, static_cast<DictValue>(d - 1));
  std::vector<std::vector<DictValue>> out(static_cast<std::size_t>(num_epochs));
  for (auto& epoch : out) {
    const auto style = std::uniform_int_distribution<int>(0, 2)(rng);
    const DictValue u = value(rng);
    const DictValue v = value(rng);
    const double mix = Uniform01(rng);
    for (std::int64_t r = 0; r < epoch_length; ++r) {
      if (style == 0) {
        epoch.push_back(u);
      } else if (style == 1) {
        epoch.push_back(value(rng));
      } else {
        epoch.push_back(BernoulliDraw(rng, mix) ? u : v);
      }
    }
  }
  return out;
}

// Replays `pairs_per_user` input pairs for every user. The first pair of each
// user compares the data actually used (`actual[t][i]`) with a random record.
inline PrivacySpendReport AuditBernoulliRun(const Transcript& transcript, const ProtocolOptions& o,
                                            const std::vector<std::vector<double>>& actual,
                                            std::int64_t pairs_per_user, std::uint64_t seed) {
  PrivacySpendReport report;
  report.epsilon = o.params.epsilon;
  const auto T = static_cast<std::int64_t>(transcript.size());
  for (std::int64_t i = 0; i < o.params.num_users; ++i) {
    Rng rng = MakeStream(seed, StreamDomain::kAudit, static_cast<std::uint64_t>(i));
    for (std::int64_t k = 0; k < pairs_per_user; ++k) {
      std::vector<double> x;
      if (k == 0 && !actual.empty()) {
        for (std::int64_t t = 0; t < T; ++t) {
          x.push_back(actual[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
        }
      } else {
        x = RandomEpochMeans(rng, T, o.params.epoch_length);
      }
      const auto x_prime = RandomEpochMeans(rng, T, o.params.epoch_length);
      report.Record(i, TranscriptRatioBound(transcript, o, i, x, x_prime));
    }
  }
  return report;
}

// As AuditBernoulliRun; `actual[t][i]` is user i's sample sequence in epoch t+1.
inline PrivacySpendReport AuditHeavyRun(const HeavyTranscript& transcript, const ProtocolOptions& o,
                                        const std::vector<std::vector<std::vector<DictValue>>>& actual,
                                        std::int64_t pairs_per_user, std::uint64_t seed) {
  PrivacySpendReport report;
  report.epsilon = o.params.epsilon;
  const auto T = static_cast<std::int64_t>(transcript.size());
  for (std::int64_t i = 0; i < o.params.num_users; ++i) {
    Rng rng = MakeStream(seed, StreamDomain::kAudit, static_cast<std::uint64_t>(i));
    for (std::int64_t k = 0; k < pairs_per_user; ++k) {
      std::vector<std::vector<DictValue>> x;
      if (k == 0 && !actual.empty()) {
        for (std::int64_t t = 0; t < T; ++t) {
          x.push_back(actual[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
        }
      } else {
        x = RandomEpochSamples(rng, T, o.params.epoch_length, o.params.dictionary_size);
      }
      const auto x_prime =
          RandomEpochSamples(rng, T, o.params.epoch_length, o.params.dictionary_size);
      report.Record(i, TranscriptRatioBound(transcript, o, i, x, x_prime));
    }
  }
  return report;
}

// Every user's VoteYes and SendEstimate counts are within the largest k with
// k * cost <= epsilon/4.
template <class Record>
bool LedgerCheck(const BasicTranscript<Record>& transcript, const ProtocolParams& p,
                 const NoiseLevels& levels) {
  const auto n = static_cast<std::size_t>(p.num_users);
  const std::int64_t vote_limit = ParticipationLimit(levels.vote, RoleCap(p.epsilon));
  const std::int64_t estimate_limit = ParticipationLimit(levels.estimate, RoleCap(p.epsilon));
  std::vector<std::int64_t> votes(n, 0);
  std::vector<std::int64_t> estimates(n, 0);
  for (const auto& rec : transcript.epochs()) {
    if (rec.vote_flags.size() != n || rec.estimate_flags.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i) {
      votes[i] += rec.vote_flags[i] ? 1 : 0;
      estimates[i] += rec.estimate_flags[i] ? 1 : 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (votes[i] > vote_limit || estimates[i] > estimate_limit) return false;
  }
  return true;
}

// ---- Exhaustive check at tiny scale -------------------------------------

inline constexpr std::int64_t kBruteForceLimit = std::int64_t{1} << 16;

struct BruteForceConfig {
  std::int64_t num_users = 2;
  std::int64_t num_epochs = 1;
  std::int64_t epoch_length = 1;
  double epsilon = 1.0;
  double vote_noise = 0.0;
  double estimate_noise = 0.0;
  ThresholdLadder ladder;
  BudgetGate gate = BudgetGate::kEnforced;
  double delta = 0.1;
  SlackMode slack = SlackMode::kProof;

  // a = b = epsilon/6, so the epsilon/4 cap admits one vote and one estimate;
  // thresholds (b+1)/4.
  static BruteForceConfig Standard(std::int64_t n, std::int64_t T, std::int64_t ell,
                                   double epsilon) {
    BruteForceConfig c;
    c.num_users = n;
    c.num_epochs = T;
    c.epoch_length = ell;
    c.epsilon = epsilon;
    c.vote_noise = epsilon / 6.0;
    c.estimate_noise = epsilon / 6.0;
    std::vector<double> values;
    for (int b = -1; b <= FloorLog2(T); ++b) values.push_back((b + 1) / 4.0);
    c.ladder = ThresholdLadder(std::move(values));
    return c;
  }

  // Gates removed and a = b = epsilon/2: an uncapped automaton.
  static BruteForceConfig BrokenGate(std::int64_t n, std::int64_t T, std::int64_t ell,
                                     double epsilon) {
    BruteForceConfig c = Standard(n, T, ell, epsilon);
    c.vote_noise = epsilon / 2.0;
    c.estimate_noise = epsilon / 2.0;
    c.gate = BudgetGate::kDisabled;
    return c;
  }

  ProtocolOptions Options() const {
    ProtocolOptions o;
    o.params = ProtocolParams{num_users, 1, 1, epoch_length, num_epochs, epsilon, delta, 0};
    o.levels = NoiseLevels::Make(vote_noise, estimate_noise, ladder);
    o.slack = slack;
    o.gate = gate;
    return o;
  }
};

struct BruteForceResult {
  double max_ratio = 1.0;  // max over behaviors, transcripts and input pairs
  double bound = 0.0;      // e^epsilon
  std::int64_t inputs = 0;
  std::int64_t behaviors = 0;
  std::int64_t transcripts = 0;
  std::string worst_behavior;

  bool within() const { return max_ratio <= UlpsAbove(bound, kAuditUlps); }
};

// A center strategy: decides GlobalUpdate from the epoch, the user's own vote
// in that epoch, and whether any earlier epoch updated.
struct CenterBehavior {
  std::string name;
  std::function<bool(std::int64_t epoch, std::uint8_t own_vote, bool updated_before)> decide;
};

// Fixed reactions to the user's own vote (never, always, iff 1, iff 0) chosen
// independently per epoch, plus the honest threshold rule for every constant
// count of yes-votes from the other n-1 users, with and without the forced
// first update.
inline std::vector<CenterBehavior> EnumerateCenterBehaviors(const BruteForceConfig& c) {
  std::vector<CenterBehavior> out;
  const std::int64_t T = c.num_epochs;
  std::int64_t combos = 1;
  for (std::int64_t t = 0; t < T; ++t) combos *= 4;
  static const char* kNames[] = {"never", "always", "iff1", "iff0"};
  for (std::int64_t code = 0; code < combos; ++code) {
    std::vector<int> reaction;
    std::string name = "fixed";
    for (std::int64_t t = 0, rest = code; t < T; ++t, rest /= 4) {
      reaction.push_back(static_cast<int>(rest % 4));
      name += std::string(t == 0 ? ":" : ",") + kNames[rest % 4];
    }
    out.push_back({name, [reaction](std::int64_t epoch, std::uint8_t v, bool) {
                     switch (reaction[static_cast<std::size_t>(epoch - 1)]) {
                       case 0: return false;
                       case 1: return true;
                       case 2: return v == 1;
                       default: return v == 0;
                     }
                   }});
  }
  const double threshold =
      VoteParameter(false, c.vote_noise) +
      UpdateSlack(c.num_users, T, c.delta, SlackConstant(ProtocolKind::kBernoulli, c.slack));
  std::int64_t patterns = 1;
  for (std::int64_t t = 0; t < T; ++t) patterns *= c.num_users;
  for (int forced = 0; forced < 2; ++forced) {
    for (std::int64_t code = 0; code < patterns; ++code) {
      std::vector<std::int64_t> others;
      std::string name = forced ? "honest+forced" : "honest";
      for (std::int64_t t = 0, rest = code; t < T; ++t, rest /= c.num_users) {
        others.push_back(rest % c.num_users);
        name += std::string(t == 0 ? ":" : ",") + std::to_string(rest % c.num_users);
      }
      const double n = static_cast<double>(c.num_users);
      out.push_back({name, [others, forced, threshold, n](std::int64_t epoch, std::uint8_t v,
                                                          bool updated_before) {
                       if (forced && !updated_before) return true;
                       const auto yes = others[static_cast<std::size_t>(epoch - 1)] + v;
                       return static_cast<double>(yes) / n > threshold;
                     }});
    }
  }
  return out;
}

// P[user's messages = z | input, center behavior]; z packs (vote, estimate)
// bits for epoch t at bit positions 2t and 2t+1.
inline double TinyTranscriptProbability(const ProtocolOptions& o, const std::vector<double>& means,
                                        const CenterBehavior& behavior, std::uint64_t z) {
  PrivacyCounters counters;
  std::optional<double> p_last;
  bool updated = false;
  double prob = 1.0;
  for (std::size_t t = 0; t < means.size(); ++t) {
    const auto epoch = static_cast<std::int64_t>(t + 1);
    const auto vote_bit = static_cast<std::uint8_t>((z >> (2 * t)) & 1U);
    const auto est_bit = static_cast<std::uint8_t>((z >> (2 * t + 1)) & 1U);
    const auto level = ConfidenceLevel(means[t], p_last, o.levels.thresholds);
    const bool yes = WantsToVote(counters, epoch, level, o);
    if (yes) ChargeVote(counters, o.levels.vote);
    const double q = VoteParameter(yes, o.levels.vote);
    prob *= vote_bit ? q : VoteParameter(!yes, o.levels.vote);
    const bool update = behavior.decide(epoch, vote_bit, updated);
    const bool send = update && EstimateBudgetAllows(counters, o);
    if (send) ChargeEstimate(counters, o.levels.estimate);
    const double r = EstimateParameter(send, means[t], o.levels.estimate);
    prob *= est_bit ? r : 1.0 - r;
    if (update) {
      p_last = means[t];
      updated = true;
    }
  }
  return prob;
}

// Enumerates every input record of one user (all ell*T bit strings), every
// center behavior and every transcript of the user's messages, and returns
// the largest P[z | x]/P[z | x'] over all pairs (x, x').
inline BruteForceResult BruteForceDpCheck(const BruteForceConfig& c) {
  Require(c.num_users >= 2 && c.num_users <= 3, "exhaustive check supports n in {2,3}");
  Require(c.num_epochs >= 1 && c.num_epochs <= 2, "exhaustive check supports T <= 2");
  Require(c.epoch_length >= 1 && c.epoch_length <= 2, "exhaustive check supports ell <= 2");
  const ProtocolOptions o = c.Options();
  const auto behaviors = EnumerateCenterBehaviors(c);
  BruteForceResult result;
  result.bound = std::exp(c.epsilon);
  result.inputs = std::int64_t{1} << (c.epoch_length * c.num_epochs);
  result.behaviors = static_cast<std::int64_t>(behaviors.size());
  result.transcripts = std::int64_t{1} << (2 * c.num_epochs);
  if (result.inputs * result.behaviors * result.transcripts > kBruteForceLimit) {
    throw ParameterError("exhaustive check refused: inputs x behaviors x transcripts exceeds " +
                         std::to_string(kBruteForceLimit));
  }
  std::vector<std::vector<double>> inputs;
  for (std::int64_t x = 0; x < result.inputs; ++x) {
    std::vector<double> means;
    for (std::int64_t t = 0; t < c.num_epochs; ++t) {
      std::int64_t ones = 0;
      for (std::int64_t r = 0; r < c.epoch_length; ++r) ones += (x >> (t * c.epoch_length + r)) & 1;
      means.push_back(static_cast<double>(ones) / static_cast<double>(c.epoch_length));
    }
    inputs.push_back(std::move(means));
  }
  for (const auto& behavior : behaviors) {
    for (std::int64_t z = 0; z < result.transcripts; ++z) {
      double lo = INFINITY;
      double hi = 0.0;
      for (const auto& x : inputs) {
        const double pr = TinyTranscriptProbability(o, x, behavior, static_cast<std::uint64_t>(z));
        lo = std::min(lo, pr);
        hi = std::max(hi, pr);
      }
      Require(lo > 0.0, "transcript probability underflowed");
      if (hi / lo > result.max_ratio) {
        result.max_ratio = hi / lo;
        result.worst_behavior = behavior.name;
      }
    }
  }
  return result;
}

// ---- Randomizer enumeration ----------------------------------------------

struct RandomizerOutcome {
  std::int64_t index = 0;
  double value = 0.0;
  double probability = 0.0;
};

// All 2w outcomes of R(h) with their exact probabilities; empty h is zero.
inline std::vector<RandomizerOutcome> EnumerateRandomizer(std::span<const double> h,
                                                          std::int64_t w, double b) {
  Require(h.empty() || static_cast<std::int64_t>(h.size()) == w, "hash must have w entries");
  const double magnitude = RandomizerScale(b) * std::sqrt(static_cast<double>(w));
  std::vector<RandomizerOutcome> out;
  for (std::int64_t j = 0; j < w; ++j) {
    const double h_j = h.empty() ? 0.0 : h[static_cast<std::size_t>(j)];
    const double pick = 1.0 / static_cast<double>(w);
    out.push_back({j, magnitude, pick * PositiveSignProbability(h_j, w, b)});
    out.push_back({j, -magnitude, pick * NegativeSignProbability(h_j, w, b)});
  }
  return out;
}

inline std::vector<double> RandomizerExpectation(std::span<const double> h, std::int64_t w,
                                                 double b) {
  std::vector<double> mean(static_cast<std::size_t>(w), 0.0);
  for (const auto& o : EnumerateRandomizer(h, w, b)) {
    mean[static_cast<std::size_t>(o.index)] += o.probability * o.value;
  }
  return mean;
}

// max over outcomes of P[R(h) = o]/P[R(h') = o].
inline double RandomizerMaxRatio(std::span<const double> h, std::span<const double> h_prime,
                                 std::int64_t w, double b) {
  const auto p = EnumerateRandomizer(h, w, b);
  const auto q = EnumerateRandomizer(h_prime, w, b);
  double best = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) best = std::max(best, p[k].probability / q[k].probability);
  return best;
}

}  // namespace thresh

#endif  // THRESH_AUDIT_HPP_
