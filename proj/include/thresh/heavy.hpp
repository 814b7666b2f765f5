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

// HeavyThresh: hashed-histogram voting and a one-coordinate randomizer whose
// aggregate, together with the sign projection, forms a frequency oracle.

#ifndef THRESH_HEAVY_HPP_
#define THRESH_HEAVY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "thresh/bernoulli.hpp"
#include "thresh/errors.hpp"
#include "thresh/params.hpp"
#include "thresh/random.hpp"
#include "thresh/voting.hpp"

namespace thresh {

using DictValue = std::uint32_t;

// w x d matrix with entries +-1/sqrt(w). Entry (j, k) is a pure function of
// (seed, j, k); a column-major int8 sign cache is kept when w*d is small.
class ProjectionMatrix {
 public:
  static constexpr std::int64_t kDenseLimit = std::int64_t{1} << 26;

  ProjectionMatrix(std::int64_t rows, std::int64_t cols, std::uint64_t seed)
      : rows_(rows), cols_(cols), seed_(seed), scale_(1.0 / std::sqrt(static_cast<double>(rows))) {
    Require(rows >= 1 && cols >= 1, "projection dimensions must be >= 1");
    if (rows * cols <= kDenseLimit) {
      signs_.resize(static_cast<std::size_t>(rows * cols));
      for (std::int64_t k = 0; k < cols; ++k) {
        for (std::int64_t j = 0; j < rows; ++j) {
          signs_[static_cast<std::size_t>(k * rows + j)] = static_cast<std::int8_t>(ComputeSign(j, k));
        }
      }
    }
  }

  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::uint64_t seed() const { return seed_; }
  double scale() const { return scale_; }
  bool dense() const { return !signs_.empty(); }

  int Sign(std::int64_t j, std::int64_t k) const {
    Require(j >= 0 && j < rows_ && k >= 0 && k < cols_, "projection index out of range");
    if (dense()) return signs_[static_cast<std::size_t>(k * rows_ + j)];
    return ComputeSign(j, k);
  }

  double Entry(std::int64_t j, std::int64_t k) const { return Sign(j, k) * scale_; }

  // acc[j] += count * sign(j, k) for every row j.
  void AccumulateColumn(std::int64_t k, std::int32_t count, std::span<std::int32_t> acc) const {
    Require(static_cast<std::int64_t>(acc.size()) == rows_, "accumulator must have w entries");
    Require(k >= 0 && k < cols_, "dictionary value out of range");
    if (dense()) {
      const std::int8_t* col = signs_.data() + k * rows_;
      for (std::int64_t j = 0; j < rows_; ++j) acc[static_cast<std::size_t>(j)] += count * col[j];
    } else {
      for (std::int64_t j = 0; j < rows_; ++j) acc[static_cast<std::size_t>(j)] += count * ComputeSign(j, k);
    }
  }

  // sum_j sign(j, k) * y[j], unscaled.
  double SignedColumnSum(std::int64_t k, std::span<const double> y) const {
    Require(static_cast<std::int64_t>(y.size()) == rows_, "vector must have w entries");
    Require(k >= 0 && k < cols_, "dictionary value out of range");
    double total = 0.0;
    if (dense()) {
      const std::int8_t* col = signs_.data() + k * rows_;
      for (std::int64_t j = 0; j < rows_; ++j) total += col[j] * y[static_cast<std::size_t>(j)];
    } else {
      for (std::int64_t j = 0; j < rows_; ++j) total += ComputeSign(j, k) * y[static_cast<std::size_t>(j)];
    }
    return total;
  }

  // <Phi e_u, Phi e_v>, computed as an integer sign agreement count over w.
  double ColumnInner(std::int64_t u, std::int64_t v) const {
    std::int64_t agree = 0;
    for (std::int64_t j = 0; j < rows_; ++j) agree += Sign(j, u) * Sign(j, v);
    return static_cast<double>(agree) / static_cast<double>(rows_);
  }

 private:
  int ComputeSign(std::int64_t j, std::int64_t k) const {
    const std::uint64_t h =
        Mix64(Mix64(seed_ ^ Mix64(static_cast<std::uint64_t>(j))) + static_cast<std::uint64_t>(k));
    return (h >> 63) ? 1 : -1;
  }

  std::int64_t rows_;
  std::int64_t cols_;
  std::uint64_t seed_;
  double scale_;
  std::vector<std::int8_t> signs_;
};

inline std::shared_ptr<const ProjectionMatrix> GenProj(std::int64_t w, std::int64_t d,
                                                       std::uint64_t seed) {
  return std::make_shared<const ProjectionMatrix>(w, d, seed);
}

struct HashVector {
  std::vector<double> values;

  bool operator==(const HashVector&) const = default;
};

inline std::vector<double> EpochHistogram(std::span<const DictValue> samples, std::int64_t d) {
  Require(!samples.empty(), "epoch has no samples");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(d), 0);
  for (auto v : samples) {
    Require(static_cast<std::int64_t>(v) < d, "sample outside the dictionary");
    ++counts[v];
  }
  std::vector<double> out(static_cast<std::size_t>(d));
  const double total = static_cast<double>(samples.size());
  for (std::size_t v = 0; v < out.size(); ++v) out[v] = static_cast<double>(counts[v]) / total;
  return out;
}

// Phi p_hat for a probability vector. Per-row sums are clamped to [-1, 1]
// (they are convex combinations of +-1) before scaling.
inline HashVector HashHistogram(const ProjectionMatrix& phi, std::span<const double> p_hat) {
  Require(static_cast<std::int64_t>(p_hat.size()) == phi.cols(), "histogram must have d entries");
  std::vector<double> sums(static_cast<std::size_t>(phi.rows()), 0.0);
  for (std::int64_t k = 0; k < phi.cols(); ++k) {
    const double p = p_hat[static_cast<std::size_t>(k)];
    Require(p >= 0.0, "histogram entries must be non-negative");
    if (p == 0.0) continue;
    for (std::int64_t j = 0; j < phi.rows(); ++j) sums[static_cast<std::size_t>(j)] += p * phi.Sign(j, k);
  }
  HashVector out;
  out.values.resize(sums.size());
  for (std::size_t j = 0; j < sums.size(); ++j) {
    out.values[j] = std::clamp(sums[j], -1.0, 1.0) * phi.scale();
  }
  return out;
}

// Phi applied to the empirical histogram of `samples`, accumulated exactly in
// integers: y_j = (sum_r sign(j, v_r) / ell) / sqrt(w).
inline HashVector HashSamples(const ProjectionMatrix& phi, std::span<const DictValue> samples) {
  Require(!samples.empty(), "epoch has no samples");
  std::vector<DictValue> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int32_t> acc(static_cast<std::size_t>(phi.rows()), 0);
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    phi.AccumulateColumn(sorted[i], static_cast<std::int32_t>(j - i), acc);
    i = j;
  }
  HashVector out;
  out.values.resize(acc.size());
  const double ell = static_cast<double>(samples.size());
  for (std::size_t j = 0; j < acc.size(); ++j) {
    out.values[j] = (static_cast<double>(acc[j]) / ell) * phi.scale();
  }
  return out;
}

inline double InfinityDistance(std::span<const double> x, std::span<const double> y) {
  Require(x.size() == y.size(), "hash vectors differ in width");
  double best = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) best = std::max(best, std::fabs(x[j] - y[j]));
  return best;
}

inline std::optional<int> HeavyConfidence(const HashVector& y_cur,
                                          const std::optional<HashVector>& y_last,
                                          const ThresholdLadder& ladder) {
  if (!y_last.has_value()) return ladder.top_level();
  return LevelForDistance(InfinityDistance(y_cur.values, y_last->values), ladder);
}

// c_eps = (e^b + 1)/(e^b - 1).
inline double RandomizerScale(double b) { return 1.0 / std::tanh(b / 2.0); }

// One nonzero coordinate of magnitude c_eps sqrt(w).
struct RandomizedReport {
  std::int64_t index = 0;
  double value = 0.0;

  std::vector<double> ToDense(std::int64_t w) const {
    std::vector<double> out(static_cast<std::size_t>(w), 0.0);
    out[static_cast<std::size_t>(index)] = value;
    return out;
  }
};

// P[positive sign | coordinate j] = 1/2 + h_j sqrt(w)/(2 c_eps); h_j = 0 for
// the zero input. Evaluated as (1 + u (e^b - 1))/(e^b + 1) with
// u = (1 + h_j sqrt(w))/2, which keeps both tails accurate when c_eps is near 1.
inline double PositiveSignProbability(double h_j, std::int64_t w, double b) {
  const double u = std::clamp(0.5 * (1.0 + h_j * std::sqrt(static_cast<double>(w))), 0.0, 1.0);
  return (1.0 + u * std::expm1(b)) / (std::exp(b) + 1.0);
}

inline double NegativeSignProbability(double h_j, std::int64_t w, double b) {
  return PositiveSignProbability(-h_j, w, b);
}

// Client randomizer. An empty `h` is the zero vector (non-participation).
// Requires |h_j| sqrt(w) <= 1, with 1e-12 slack for rounding in the hash.
inline RandomizedReport RandomizeHash(std::span<const double> h, std::int64_t w, double b,
                                      Rng& rng) {
  Require(w >= 1, "hash width must be >= 1");
  Require(h.empty() || static_cast<std::int64_t>(h.size()) == w, "hash must have w entries");
  const double root_w = std::sqrt(static_cast<double>(w));
  for (double x : h) {
    Require(std::fabs(x) * root_w <= 1.0 + 1e-12, "hash entry exceeds 1/sqrt(w)");
  }
  std::uniform_int_distribution<std::int64_t> pick(0, w - 1);
  RandomizedReport out;
  out.index = pick(rng);
  const double h_j = h.empty() ? 0.0 : h[static_cast<std::size_t>(out.index)];
  const double magnitude = RandomizerScale(b) * root_w;
  out.value = Uniform01(rng) < PositiveSignProbability(h_j, w, b) ? magnitude : -magnitude;
  return out;
}

struct HeavyUserState {
  std::int64_t id = 0;
  PrivacyCounters counters;
  std::optional<HashVector> y_hat_last;
  Rng rng;
};

struct HeavyEstimateOutcome {
  RandomizedReport report;
  bool sent = false;
};

inline HeavyEstimateOutcome HeavyEstimate(HeavyUserState& user, const HashVector& y_hat,
                                          bool global_update, const ProtocolOptions& o) {
  const std::int64_t w = o.levels.hash_width;
  HeavyEstimateOutcome out;
  out.sent = global_update && EstimateBudgetAllows(user.counters, o);
  if (out.sent) ChargeEstimate(user.counters, o.levels.estimate);
  out.report = out.sent ? RandomizeHash(y_hat.values, w, o.levels.estimate, user.rng)
                        : RandomizeHash({}, w, o.levels.estimate, user.rng);
  return out;
}

inline std::vector<double> AggregateReports(std::span<const RandomizedReport> reports,
                                            std::int64_t w) {
  Require(!reports.empty(), "nothing to aggregate");
  std::vector<double> sums(static_cast<std::size_t>(w), 0.0);
  for (const auto& r : reports) {
    Require(r.index >= 0 && r.index < w, "report index outside the hash width");
    sums[static_cast<std::size_t>(r.index)] += r.value;
  }
  const double n = static_cast<double>(reports.size());
  for (double& s : sums) s /= n;
  return sums;
}

// (Phi, y_tilde); answers f(v) = <Phi e_v, y_tilde>.
struct FrequencyOracle {
  std::shared_ptr<const ProjectionMatrix> projection;
  std::vector<double> y_tilde;

  double Query(std::int64_t v) const {
    Require(v >= 0 && v < projection->cols(), "query outside the dictionary");
    return projection->SignedColumnSum(v, y_tilde) * projection->scale();
  }

  std::vector<double> QueryAll() const {
    std::vector<double> out(static_cast<std::size_t>(projection->cols()));
    for (std::int64_t v = 0; v < projection->cols(); ++v) out[static_cast<std::size_t>(v)] = Query(v);
    return out;
  }
};

struct HeavyCenterState {
  std::int64_t epoch = 0;
  std::int64_t last_update = 0;
  std::shared_ptr<const FrequencyOracle> oracle;
};

struct HeavyEpochRecord {
  std::int64_t epoch = 0;
  std::vector<std::uint8_t> votes;
  std::vector<std::uint8_t> vote_flags;
  std::vector<RandomizedReport> reports;
  std::vector<std::uint8_t> estimate_flags;
  bool global_update = false;
  std::shared_ptr<const FrequencyOracle> oracle;
};

using HeavyTranscript = BasicTranscript<HeavyEpochRecord>;

inline HeavyCenterState MakeHeavyCenter(std::shared_ptr<const ProjectionMatrix> phi) {
  HeavyCenterState center;
  auto initial = std::make_shared<FrequencyOracle>();
  initial->y_tilde.assign(static_cast<std::size_t>(phi->rows()), -1.0);
  initial->projection = std::move(phi);
  center.oracle = std::move(initial);
  return center;
}

inline std::vector<HeavyUserState> MakeHeavyUsers(std::int64_t n, std::uint64_t seed) {
  std::vector<HeavyUserState> users;
  users.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    users.push_back(HeavyUserState{i, {}, std::nullopt,
                                   MakeStream(seed, StreamDomain::kProtocol,
                                              static_cast<std::uint64_t>(i))});
  }
  return users;
}

// One HeavyThresh epoch; `epoch_samples[i]` holds user i's ell samples.
inline HeavyEpochRecord RunHeavyEpoch(HeavyCenterState& center, std::vector<HeavyUserState>& users,
                                      const std::vector<std::vector<DictValue>>& epoch_samples,
                                      const ProtocolOptions& o) {
  const auto n = static_cast<std::size_t>(o.params.num_users);
  Require(users.size() == n && epoch_samples.size() == n, "need one sample sequence per user");
  Require(center.epoch < o.params.num_epochs, "all epochs already run");
  Require(o.levels.hash_width == center.oracle->projection->rows(), "hash width mismatch");
  const ProjectionMatrix& phi = *center.oracle->projection;

  HeavyEpochRecord rec;
  rec.epoch = center.epoch + 1;
  rec.votes.resize(n);
  rec.vote_flags.resize(n);
  rec.estimate_flags.resize(n);
  rec.reports.resize(n);

  std::vector<HashVector> hashes(n);
  for (std::size_t i = 0; i < n; ++i) {
    Require(static_cast<std::int64_t>(epoch_samples[i].size()) == o.params.epoch_length,
            "each user needs exactly ell samples per epoch");
    hashes[i] = HashSamples(phi, epoch_samples[i]);
    auto level = HeavyConfidence(hashes[i], users[i].y_hat_last, o.levels.thresholds);
    const VoteOutcome v = Vote(users[i], rec.epoch, level, o);
    rec.votes[i] = v.bit;
    rec.vote_flags[i] = v.vote_yes;
  }

  rec.global_update = (o.bootstrap == Bootstrap::kForced && center.last_update == 0) ||
                      DecideGlobalUpdate(rec.votes, o.levels.vote, o.params.num_epochs,
                                         o.params.delta, o.slack_constant());

  for (std::size_t i = 0; i < n; ++i) {
    const HeavyEstimateOutcome e = HeavyEstimate(users[i], hashes[i], rec.global_update, o);
    rec.reports[i] = e.report;
    rec.estimate_flags[i] = e.sent;
  }

  center.epoch = rec.epoch;
  if (rec.global_update) {
    auto oracle = std::make_shared<FrequencyOracle>();
    oracle->projection = center.oracle->projection;
    oracle->y_tilde = AggregateReports(rec.reports, o.levels.hash_width);
    center.oracle = std::move(oracle);
    center.last_update = rec.epoch;
    for (std::size_t i = 0; i < n; ++i) users[i].y_hat_last = std::move(hashes[i]);
  }
  rec.oracle = center.oracle;
  return rec;
}

class HeavyProtocol {
 public:
  HeavyProtocol(ProtocolOptions options, std::uint64_t seed)
      : options_(std::move(options)), users_(MakeHeavyUsers(options_.params.num_users, seed)) {
    Require(options_.kind == ProtocolKind::kHeavy, "options are not for HeavyThresh");
    Require(options_.levels.hash_width >= 1, "HeavyThresh needs a hash width");
    center_ = MakeHeavyCenter(GenProj(options_.levels.hash_width, options_.params.dictionary_size,
                                      DeriveSeed(seed, StreamDomain::kProjection)));
  }

  const HeavyEpochRecord& Step(const std::vector<std::vector<DictValue>>& epoch_samples) {
    transcript_.Append(RunHeavyEpoch(center_, users_, epoch_samples, options_));
    return transcript_.back();
  }

  const ProtocolOptions& options() const { return options_; }
  const std::vector<HeavyUserState>& users() const { return users_; }
  const HeavyCenterState& center() const { return center_; }
  const HeavyTranscript& transcript() const { return transcript_; }
  const ProjectionMatrix& projection() const { return *center_.oracle->projection; }
  std::shared_ptr<const ProjectionMatrix> projection_ptr() const { return center_.oracle->projection; }

 private:
  ProtocolOptions options_;
  std::vector<HeavyUserState> users_;
  HeavyCenterState center_;
  HeavyTranscript transcript_;
};

}  // namespace thresh

#endif  // THRESH_HEAVY_HPP_
