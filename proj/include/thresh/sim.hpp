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

// Synthetic data under the subgroup model, exact ground truth, and scoring of
// protocol output against the accuracy bounds.

#ifndef THRESH_SIM_HPP_
#define THRESH_SIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "thresh/bernoulli.hpp"
#include "thresh/errors.hpp"
#include "thresh/heavy.hpp"
#include "thresh/params.hpp"
#include "thresh/random.hpp"

namespace thresh {

// Users are assigned to subgroups in contiguous index blocks.
class SubgroupModel {
 public:
  SubgroupModel() = default;

  explicit SubgroupModel(std::vector<std::int64_t> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) throw ParameterError("subgroup model needs at least one subgroup");
    for (auto s : sizes_) {
      if (s < 1) throw ParameterError("subgroup sizes must be >= 1");
    }
  }

  // Sizes differ by at most one; the first n mod m subgroups get the extra user.
  static SubgroupModel Balanced(std::int64_t n, std::int64_t m) {
    if (m < 1 || n < m) throw ParameterError("balanced model needs 1 <= m <= n");
    std::vector<std::int64_t> sizes(static_cast<std::size_t>(m), n / m);
    for (std::int64_t j = 0; j < n % m; ++j) ++sizes[static_cast<std::size_t>(j)];
    return SubgroupModel(std::move(sizes));
  }

  const std::vector<std::int64_t>& sizes() const { return sizes_; }
  std::int64_t num_subgroups() const { return static_cast<std::int64_t>(sizes_.size()); }

  std::int64_t num_users() const {
    std::int64_t total = 0;
    for (auto s : sizes_) total += s;
    return total;
  }

  std::int64_t min_size() const { return *std::min_element(sizes_.begin(), sizes_.end()); }

  std::int64_t SubgroupOf(std::int64_t user) const {
    Require(user >= 0, "user index out of range");
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
      if (user < sizes_[j]) return static_cast<std::int64_t>(j);
      user -= sizes_[j];
    }
    throw ContractViolation("user index out of range");
  }

  std::vector<std::int64_t> Assignment() const {
    std::vector<std::int64_t> out;
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
      out.insert(out.end(), static_cast<std::size_t>(sizes_[j]), static_cast<std::int64_t>(j));
    }
    return out;
  }

  void RequireConsistent(const ProtocolParams& p) const {
    if (num_users() != p.num_users) throw ParameterError("subgroup sizes must sum to n");
    if (num_subgroups() != p.num_subgroups) {
      throw ParameterError("number of subgroup sizes must equal m");
    }
    if (min_size() < p.min_subgroup_size) {
      throw ParameterError("every subgroup must have at least L users");
    }
  }

 private:
  std::vector<std::int64_t> sizes_;
};

// Subgroup `subgroup` (0-based) takes parameter `value` from round
// `round_offset` of `epoch` onward. Bernoulli values have one entry (the
// mean); dictionary values are a distribution over [d].
struct ChangeEntry {
  std::int64_t epoch = 1;
  std::int64_t round_offset = 0;
  std::int64_t subgroup = 0;
  std::vector<double> value;

  bool operator==(const ChangeEntry&) const = default;
};

class ChangeSchedule {
 public:
  ChangeSchedule() = default;
  explicit ChangeSchedule(std::vector<ChangeEntry> entries) {
    for (auto& e : entries) Add(std::move(e));
  }

  void Add(ChangeEntry entry) {
    entries_.push_back(std::move(entry));
    std::stable_sort(entries_.begin(), entries_.end(), [](const auto& x, const auto& y) {
      return std::tie(x.subgroup, x.epoch, x.round_offset) <
             std::tie(y.subgroup, y.epoch, y.round_offset);
    });
  }

  // Sorted by (subgroup, epoch, round_offset).
  const std::vector<ChangeEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  bool operator==(const ChangeSchedule&) const = default;

  // Index into entries() of the parameter in force at (epoch, round).
  std::size_t EntryAt(std::int64_t subgroup, std::int64_t epoch, std::int64_t round) const {
    std::size_t found = entries_.size();
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.subgroup != subgroup) continue;
      if (std::tie(e.epoch, e.round_offset) <= std::tie(epoch, round)) found = k;
    }
    Require(found < entries_.size(), "no parameter in force for this subgroup");
    return found;
  }

  const std::vector<double>& ValueAt(std::int64_t subgroup, std::int64_t epoch,
                                     std::int64_t round) const {
    return entries_[EntryAt(subgroup, epoch, round)].value;
  }

  // Sorted distinct round offsets at which some parameter changes inside
  // `epoch`, always starting with 0.
  std::vector<std::int64_t> SegmentStarts(std::int64_t epoch) const {
    std::vector<std::int64_t> starts{0};
    for (const auto& e : entries_) {
      if (e.epoch == epoch && e.round_offset > 0) starts.push_back(e.round_offset);
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    return starts;
  }

  bool HasMidEpochChanges() const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [](const auto& e) { return e.round_offset != 0; });
  }

 private:
  std::vector<ChangeEntry> entries_;
};

// Every problem with `schedule` for m subgroups, T epochs, ell rounds and
// values of `value_size` entries (1 for Bernoulli, d for dictionaries).
inline std::vector<std::string> CheckSchedule(const ChangeSchedule& schedule, std::int64_t m,
                                              std::int64_t num_epochs, std::int64_t epoch_length,
                                              std::int64_t value_size) {
  std::vector<std::string> problems;
  const auto& es = schedule.entries();
  for (std::size_t k = 0; k < es.size(); ++k) {
    const auto& e = es[k];
    const std::string where = "change " + std::to_string(k + 1) + " (t:" +
                              std::to_string(e.epoch) + " j:" + std::to_string(e.subgroup + 1) +
                              ")";
    if (e.subgroup < 0 || e.subgroup >= m) problems.push_back(where + ": subgroup must be in 1..m");
    if (e.epoch < 1 || e.epoch > num_epochs) problems.push_back(where + ": epoch must be in 1..T");
    if (e.round_offset < 0 || e.round_offset >= epoch_length) {
      problems.push_back(where + ": round offset must be in 0..ell-1");
    }
    if (k > 0 && es[k - 1].subgroup == e.subgroup && es[k - 1].epoch == e.epoch &&
        es[k - 1].round_offset == e.round_offset) {
      problems.push_back(where + ": duplicate entry for the same subgroup and round");
    }
    if (static_cast<std::int64_t>(e.value.size()) != value_size) {
      problems.push_back(where + ": value must have " + std::to_string(value_size) + " entries");
      continue;
    }
    double total = 0.0;
    bool in_range = true;
    for (double x : e.value) {
      if (!(x >= 0.0 && x <= 1.0)) in_range = false;
      total += x;
    }
    if (!in_range) problems.push_back(where + ": probabilities must lie in [0,1]");
    if (value_size > 1 && std::fabs(total - 1.0) > 1e-9) {
      problems.push_back(where + ": distribution must sum to 1");
    }
  }
  for (std::int64_t j = 0; j < m; ++j) {
    const bool has_start = std::any_of(es.begin(), es.end(), [&](const auto& e) {
      return e.subgroup == j && e.epoch == 1 && e.round_offset == 0;
    });
    if (!has_start) {
      problems.push_back("subgroup " + std::to_string(j + 1) + " has no entry at t:1");
    }
  }
  return problems;
}

inline void ValidateSchedule(const ChangeSchedule& schedule, std::int64_t m,
                             std::int64_t num_epochs, std::int64_t epoch_length,
                             std::int64_t value_size) {
  auto problems = CheckSchedule(schedule, m, num_epochs, epoch_length, value_size);
  if (!problems.empty()) throw ParameterError(problems.front());
}

// Epochs (ascending, without repeats) in which some subgroup's parameter
// differs from the one in force just before. No-op entries are not changes.
inline std::vector<std::int64_t> ChangeEpochs(const ChangeSchedule& schedule) {
  std::vector<std::int64_t> epochs;
  const auto& es = schedule.entries();
  for (std::size_t k = 1; k < es.size(); ++k) {
    if (es[k].subgroup == es[k - 1].subgroup && es[k].value != es[k - 1].value) {
      epochs.push_back(es[k].epoch);
    }
  }
  std::sort(epochs.begin(), epochs.end());
  epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());
  return epochs;
}

inline std::int64_t CountChangesUpTo(const ChangeSchedule& schedule, std::int64_t t) {
  std::int64_t count = 0;
  for (auto e : ChangeEpochs(schedule)) count += e <= t ? 1 : 0;
  return count;
}

// Per-epoch population parameter averaged over the epoch's rounds.
struct GroundTruth {
  std::vector<std::vector<double>> values;  // [epoch - 1][k]; k = 0 only for Bernoulli
  std::vector<std::uint8_t> changed;        // [epoch - 1]

  double mean(std::int64_t epoch) const { return values[static_cast<std::size_t>(epoch - 1)][0]; }
  const std::vector<double>& distribution(std::int64_t epoch) const {
    return values[static_cast<std::size_t>(epoch - 1)];
  }
};

// value^t = sum over segments of len * sum_j |S_j| value_j, divided by n*ell.
inline GroundTruth ComputeGroundTruth(const SubgroupModel& model, const ChangeSchedule& schedule,
                                      std::int64_t epoch_length, std::int64_t num_epochs,
                                      std::int64_t value_size) {
  ValidateSchedule(schedule, model.num_subgroups(), num_epochs, epoch_length, value_size);
  GroundTruth truth;
  const double denom = static_cast<double>(model.num_users()) * static_cast<double>(epoch_length);
  const auto change_epochs = ChangeEpochs(schedule);
  for (std::int64_t t = 1; t <= num_epochs; ++t) {
    std::vector<double> acc(static_cast<std::size_t>(value_size), 0.0);
    const auto starts = schedule.SegmentStarts(t);
    for (std::size_t s = 0; s < starts.size(); ++s) {
      const std::int64_t end = s + 1 < starts.size() ? starts[s + 1] : epoch_length;
      const double len = static_cast<double>(end - starts[s]);
      for (std::size_t k = 0; k < acc.size(); ++k) {
        double weighted = 0.0;
        for (std::int64_t j = 0; j < model.num_subgroups(); ++j) {
          weighted += static_cast<double>(model.sizes()[static_cast<std::size_t>(j)]) *
                      schedule.ValueAt(j, t, starts[s])[k];
        }
        acc[k] += len * weighted;
      }
    }
    for (double& x : acc) x /= denom;
    truth.values.push_back(std::move(acc));
    truth.changed.push_back(
        std::binary_search(change_epochs.begin(), change_epochs.end(), t) ? 1 : 0);
  }
  return truth;
}

enum class DataMode {
  kCounts,  // one Binomial(len, mu) draw per user and segment
  kBits,    // one Bernoulli draw per user and round
};

// Epoch-by-epoch Bernoulli data; user i draws from its own kData stream.
class BernoulliStream {
 public:
  BernoulliStream(SubgroupModel model, ChangeSchedule schedule, std::int64_t epoch_length,
                  std::int64_t num_epochs, std::uint64_t seed, DataMode mode = DataMode::kCounts)
      : model_(std::move(model)),
        schedule_(std::move(schedule)),
        epoch_length_(epoch_length),
        num_epochs_(num_epochs),
        mode_(mode),
        assignment_(model_.Assignment()),
        truth_(ComputeGroundTruth(model_, schedule_, epoch_length, num_epochs, 1)) {
    rngs_.reserve(assignment_.size());
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      rngs_.push_back(MakeStream(seed, StreamDomain::kData, i));
    }
  }

  std::int64_t epoch() const { return epoch_; }
  const GroundTruth& truth() const { return truth_; }
  const SubgroupModel& model() const { return model_; }

  // Number of ones each user observes in the next epoch.
  std::vector<std::int64_t> NextEpochCounts() {
    if (mode_ == DataMode::kBits) {
      std::vector<std::int64_t> counts;
      for (const auto& bits : NextEpochBits()) {
        counts.push_back(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
      }
      return counts;
    }
    const std::int64_t t = Advance();
    const auto starts = schedule_.SegmentStarts(t);
    std::vector<std::int64_t> counts(assignment_.size(), 0);
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const std::int64_t end = s + 1 < starts.size() ? starts[s + 1] : epoch_length_;
        const double mu = schedule_.ValueAt(assignment_[i], t, starts[s])[0];
        std::binomial_distribution<std::int64_t> draw(end - starts[s], mu);
        counts[i] += draw(rngs_[i]);
      }
    }
    return counts;
  }

  std::vector<double> NextEpochMeans() {
    std::vector<double> means;
    for (auto c : NextEpochCounts()) {
      means.push_back(static_cast<double>(c) / static_cast<double>(epoch_length_));
    }
    return means;
  }

  // Every round's bit, in either mode.
  std::vector<std::vector<std::uint8_t>> NextEpochBits() {
    const std::int64_t t = Advance();
    std::vector<std::vector<std::uint8_t>> bits(assignment_.size());
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      bits[i].resize(static_cast<std::size_t>(epoch_length_));
      for (std::int64_t r = 0; r < epoch_length_; ++r) {
        const double mu = schedule_.ValueAt(assignment_[i], t, r)[0];
        bits[i][static_cast<std::size_t>(r)] = BernoulliDraw(rngs_[i], mu) ? 1 : 0;
      }
    }
    return bits;
  }

 private:
  std::int64_t Advance() {
    Require(epoch_ < num_epochs_, "stream exhausted");
    return ++epoch_;
  }

  SubgroupModel model_;
  ChangeSchedule schedule_;
  std::int64_t epoch_length_;
  std::int64_t num_epochs_;
  DataMode mode_;
  std::vector<std::int64_t> assignment_;
  GroundTruth truth_;
  std::vector<Rng> rngs_;
  std::int64_t epoch_ = 0;
};

// Epoch-by-epoch dictionary samples; user i draws from its own kData stream.
class DictionaryStream {
 public:
  DictionaryStream(SubgroupModel model, ChangeSchedule schedule, std::int64_t epoch_length,
                   std::int64_t num_epochs, std::int64_t dictionary_size, std::uint64_t seed)
      : model_(std::move(model)),
        schedule_(std::move(schedule)),
        epoch_length_(epoch_length),
        num_epochs_(num_epochs),
        assignment_(model_.Assignment()),
        truth_(ComputeGroundTruth(model_, schedule_, epoch_length, num_epochs, dictionary_size)) {
    for (const auto& e : schedule_.entries()) {
      samplers_.emplace_back(e.value.begin(), e.value.end());
    }
    rngs_.reserve(assignment_.size());
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      rngs_.push_back(MakeStream(seed, StreamDomain::kData, i));
    }
  }

  std::int64_t epoch() const { return epoch_; }
  const GroundTruth& truth() const { return truth_; }

  std::vector<std::vector<DictValue>> NextEpochSamples() {
    Require(epoch_ < num_epochs_, "stream exhausted");
    const std::int64_t t = ++epoch_;
    const auto starts = schedule_.SegmentStarts(t);
    std::vector<std::vector<DictValue>> samples(assignment_.size());
    for (std::size_t i = 0; i < assignment_.size(); ++i) {
      samples[i].reserve(static_cast<std::size_t>(epoch_length_));
      for (std::size_t s = 0; s < starts.size(); ++s) {
        const std::int64_t end = s + 1 < starts.size() ? starts[s + 1] : epoch_length_;
        auto& sampler = samplers_[schedule_.EntryAt(assignment_[i], t, starts[s])];
        for (std::int64_t r = starts[s]; r < end; ++r) samples[i].push_back(sampler(rngs_[i]));
      }
    }
    return samples;
  }

 private:
  SubgroupModel model_;
  ChangeSchedule schedule_;
  std::int64_t epoch_length_;
  std::int64_t num_epochs_;
  std::vector<std::int64_t> assignment_;
  GroundTruth truth_;
  std::vector<std::discrete_distribution<DictValue>> samplers_;
  std::vector<Rng> rngs_;
  std::int64_t epoch_ = 0;
};

struct BernoulliData {
  std::vector<std::vector<std::vector<std::uint8_t>>> bits;  // [epoch - 1][user][round]
  GroundTruth truth;
};

inline BernoulliData GenBernoulliStream(const SubgroupModel& model, const ChangeSchedule& schedule,
                                        std::int64_t epoch_length, std::int64_t num_epochs,
                                        std::uint64_t seed) {
  BernoulliStream stream(model, schedule, epoch_length, num_epochs, seed, DataMode::kBits);
  BernoulliData data;
  for (std::int64_t t = 1; t <= num_epochs; ++t) data.bits.push_back(stream.NextEpochBits());
  data.truth = stream.truth();
  return data;
}

struct DictionaryData {
  std::vector<std::vector<std::vector<DictValue>>> samples;  // [epoch - 1][user][round]
  GroundTruth truth;
};

inline DictionaryData GenDictionaryStream(const SubgroupModel& model,
                                          const ChangeSchedule& schedule,
                                          std::int64_t epoch_length, std::int64_t num_epochs,
                                          std::int64_t dictionary_size, std::uint64_t seed) {
  DictionaryStream stream(model, schedule, epoch_length, num_epochs, dictionary_size, seed);
  DictionaryData data;
  for (std::int64_t t = 1; t <= num_epochs; ++t) data.samples.push_back(stream.NextEpochSamples());
  data.truth = stream.truth();
  return data;
}

// 4(floor(log2 T) + 2) sqrt(ln(12nT/delta)/2ell).
inline double AccuracyBoundBernoulli(const ProtocolParams& p) {
  const double n = static_cast<double>(p.num_users);
  const double T = static_cast<double>(p.num_epochs);
  return 4.0 * (FloorLog2(p.num_epochs) + 2) *
         std::sqrt(std::log(12.0 * n * T / p.delta) / (2.0 * static_cast<double>(p.epoch_length)));
}

// 4(log2 T + 2) sqrt(2 ln(320 n^2 T/delta)/ell) + sqrt(ln(16ndT/delta)/n).
inline double AccuracyBoundHeavy(const ProtocolParams& p) {
  const double n = static_cast<double>(p.num_users);
  const double T = static_cast<double>(p.num_epochs);
  const double d = static_cast<double>(p.dictionary_size);
  return 4.0 * (std::log2(T) + 2.0) *
             std::sqrt(2.0 * std::log(320.0 * n * n * T / p.delta) /
                       static_cast<double>(p.epoch_length)) +
         std::sqrt(std::log(16.0 * n * d * T / p.delta) / n);
}

struct EpochScore {
  std::int64_t epoch = 0;
  bool global_update = false;
  // Bernoulli: p^t and p~^t. Heavy: P^t(v) and f^t(v) at the worst v.
  double truth = 0.0;
  double estimate = 0.0;
  double error = 0.0;
  double bound = 0.0;
  bool within_bound = false;
  std::int64_t changes_so_far = 0;
  bool budget_active = false;
  std::int64_t votes_cast = 0;
  std::int64_t estimates_sent = 0;
};

namespace internal {

inline std::int64_t CountFlags(const std::vector<std::uint8_t>& flags) {
  return std::count_if(flags.begin(), flags.end(), [](auto f) { return f != 0; });
}

inline void FillCommon(EpochScore& s, const GroundTruth& truth, double max_changes,
                       std::int64_t& changes) {
  changes += truth.changed[static_cast<std::size_t>(s.epoch - 1)];
  s.changes_so_far = changes;
  s.budget_active = static_cast<double>(changes) < max_changes;
}

}  // namespace internal

// Bound satisfaction is |p~ - p| <= bound.
inline std::vector<EpochScore> EvaluateBernoulliRun(const Transcript& transcript,
                                                    const GroundTruth& truth,
                                                    const ProtocolParams& p,
                                                    const NoiseLevels& levels) {
  Require(transcript.size() <= truth.values.size(), "transcript longer than ground truth");
  const double bound = AccuracyBoundBernoulli(p);
  const double max_changes = ChangeBudgetBernoulli(p, levels).max_changes;
  std::vector<EpochScore> out;
  std::int64_t changes = 0;
  for (const auto& rec : transcript.epochs()) {
    EpochScore s;
    s.epoch = rec.epoch;
    s.global_update = rec.global_update;
    s.truth = truth.mean(rec.epoch);
    s.estimate = rec.p_tilde;
    s.error = std::fabs(s.estimate - s.truth);
    s.bound = bound;
    s.within_bound = s.error <= bound;
    internal::FillCommon(s, truth, max_changes, changes);
    s.votes_cast = internal::CountFlags(rec.vote_flags);
    s.estimates_sent = internal::CountFlags(rec.estimate_flags);
    out.push_back(s);
  }
  return out;
}

// Error is max over every v in [d]; bound satisfaction is strict.
inline std::vector<EpochScore> EvaluateHeavyRun(const HeavyTranscript& transcript,
                                                const GroundTruth& truth, const ProtocolParams& p,
                                                const NoiseLevels& levels) {
  Require(transcript.size() <= truth.values.size(), "transcript longer than ground truth");
  const double bound = AccuracyBoundHeavy(p);
  const double max_changes = ChangeBudgetHeavy(p, levels).max_changes;
  std::vector<EpochScore> out;
  std::int64_t changes = 0;
  const FrequencyOracle* cached = nullptr;
  std::vector<double> answers;
  for (const auto& rec : transcript.epochs()) {
    if (rec.oracle.get() != cached) {
      answers = rec.oracle->QueryAll();
      cached = rec.oracle.get();
    }
    const auto& dist = truth.distribution(rec.epoch);
    Require(dist.size() == answers.size(), "dictionary size mismatch");
    EpochScore s;
    s.epoch = rec.epoch;
    s.global_update = rec.global_update;
    s.error = -1.0;
    for (std::size_t v = 0; v < dist.size(); ++v) {
      const double err = std::fabs(answers[v] - dist[v]);
      if (err > s.error) {
        s.error = err;
        s.truth = dist[v];
        s.estimate = answers[v];
      }
    }
    s.bound = bound;
    s.within_bound = s.error < bound;
    internal::FillCommon(s, truth, max_changes, changes);
    s.votes_cast = internal::CountFlags(rec.vote_flags);
    s.estimates_sent = internal::CountFlags(rec.estimate_flags);
    out.push_back(s);
  }
  return out;
}

// True iff every budget-active epoch is within the bound.
inline bool ActiveEpochsWithinBound(const std::vector<EpochScore>& scores) {
  return std::all_of(scores.begin(), scores.end(),
                     [](const auto& s) { return !s.budget_active || s.within_bound; });
}

}  // namespace thresh

#endif  // THRESH_SIM_HPP_
