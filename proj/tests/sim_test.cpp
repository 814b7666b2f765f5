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

#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "thresh/sim.hpp"

namespace thresh {
namespace {

ChangeSchedule Bern(std::vector<std::tuple<std::int64_t, std::int64_t, double>> entries) {
  ChangeSchedule s;
  for (auto [t, j, mu] : entries) s.Add(ChangeEntry{t, 0, j, {mu}});
  return s;
}

TEST(SubgroupModel, BalancedAndAssignment) {
  const auto m = SubgroupModel::Balanced(10, 3);
  EXPECT_EQ(m.sizes(), (std::vector<std::int64_t>{4, 3, 3}));
  EXPECT_EQ(m.SubgroupOf(0), 0);
  EXPECT_EQ(m.SubgroupOf(4), 1);
  EXPECT_EQ(m.SubgroupOf(9), 2);
  EXPECT_THROW(m.SubgroupOf(10), ContractViolation);
  ProtocolParams p{10, 3, 4, 1, 1, 1.0, 0.1, 0};
  EXPECT_THROW(m.RequireConsistent(p), ParameterError);
}

TEST(ChangeSchedule, NeedsInitialEntryPerSubgroup) {
  const auto s = Bern({{1, 0, 0.5}, {3, 1, 0.2}});
  EXPECT_FALSE(CheckSchedule(s, 2, 8, 10, 1).empty());
  EXPECT_TRUE(CheckSchedule(Bern({{1, 0, 0.5}, {1, 1, 0.2}}), 2, 8, 10, 1).empty());
}

TEST(ChangeSchedule, RejectsBadValues) {
  EXPECT_FALSE(CheckSchedule(Bern({{1, 0, 1.5}}), 1, 8, 10, 1).empty());
  EXPECT_FALSE(CheckSchedule(Bern({{1, 0, 0.5}, {9, 0, 0.2}}), 1, 8, 10, 1).empty());
  EXPECT_FALSE(CheckSchedule(Bern({{1, 0, 0.5}, {2, 0, 0.5}, {2, 0, 0.6}}), 1, 8, 10, 1).empty());
  ChangeSchedule heavy;
  heavy.Add(ChangeEntry{1, 0, 0, {0.5, 0.4}});
  EXPECT_FALSE(CheckSchedule(heavy, 1, 8, 10, 2).empty());
}

TEST(GenBernoulliStream, DegenerateMean) {
  const auto data = GenBernoulliStream(SubgroupModel({5}), Bern({{1, 0, 1.0}}), 7, 3, 1);
  for (const auto& epoch : data.bits) {
    for (const auto& user : epoch) {
      for (auto b : user) EXPECT_EQ(b, 1);
    }
  }
  for (std::int64_t t = 1; t <= 3; ++t) EXPECT_EQ(data.truth.mean(t), 1.0);
}

TEST(GenBernoulliStream, WeightedAverageIsExact) {
  const auto truth =
      ComputeGroundTruth(SubgroupModel({600, 400}), Bern({{1, 0, 0.2}, {1, 1, 0.7}}), 10, 4, 1);
  for (std::int64_t t = 1; t <= 4; ++t) EXPECT_EQ(truth.mean(t), 0.4);
}

TEST(GenBernoulliStream, EmpiricalMeansWithinThreeSigma) {
  BernoulliStream stream(SubgroupModel({1000}), Bern({{1, 0, 0.5}}), 1000, 2, 9, DataMode::kBits);
  const double sigma = std::sqrt(0.25 / 1000.0);
  int outside = 0;
  for (double m : stream.NextEpochMeans()) outside += std::fabs(m - 0.5) > 3 * sigma;
  // About 0.27% expected outside.
  EXPECT_LE(outside, 10);
}

TEST(BernoulliStream, CountsModeMatchesDistribution) {
  BernoulliStream stream(SubgroupModel({4000}), Bern({{1, 0, 0.3}}), 200, 1, 2);
  double sum = 0, sq = 0;
  for (double m : stream.NextEpochMeans()) {
    sum += m;
    sq += m * m;
  }
  const double mean = sum / 4000, var = sq / 4000 - mean * mean;
  EXPECT_NEAR(mean, 0.3, 4 * std::sqrt(0.21 / 200 / 4000));
  EXPECT_NEAR(var, 0.21 / 200, 0.15 * 0.21 / 200);
}

TEST(BernoulliStream, MidEpochChangeSplitsTruth) {
  ChangeSchedule s;
  s.Add(ChangeEntry{1, 0, 0, {0.0}});
  s.Add(ChangeEntry{2, 5, 0, {1.0}});
  BernoulliStream stream(SubgroupModel({3}), s, 20, 2, 1, DataMode::kBits);
  EXPECT_EQ(stream.truth().mean(1), 0.0);
  EXPECT_EQ(stream.truth().mean(2), 0.75);
  stream.NextEpochBits();
  for (const auto& bits : stream.NextEpochBits()) {
    for (int r = 0; r < 20; ++r) EXPECT_EQ(bits[r], r >= 5 ? 1 : 0);
  }
}

TEST(GenDictionaryStream, PointMass) {
  ChangeSchedule s;
  s.Add(ChangeEntry{1, 0, 0, {0.0, 0.0, 1.0, 0.0}});
  const auto data = GenDictionaryStream(SubgroupModel({4}), s, 9, 2, 4, 5);
  for (const auto& epoch : data.samples) {
    for (const auto& user : epoch) {
      for (auto v : user) EXPECT_EQ(v, 2u);
    }
  }
}

TEST(GenDictionaryStream, UniformFrequencies) {
  ChangeSchedule s;
  s.Add(ChangeEntry{1, 0, 0, {0.25, 0.25, 0.25, 0.25}});
  const auto data = GenDictionaryStream(SubgroupModel({100}), s, 400, 1, 4, 6);
  std::vector<double> freq(4, 0);
  for (const auto& user : data.samples[0]) {
    for (auto v : user) freq[v] += 1.0 / 40000;
  }
  for (double f : freq) EXPECT_NEAR(f, 0.25, 3 * std::sqrt(0.1875 / 40000));
}

TEST(GenDictionaryStream, MixtureTruth) {
  ChangeSchedule s;
  s.Add(ChangeEntry{1, 0, 0, {1.0, 0.0, 0.0}});
  s.Add(ChangeEntry{1, 0, 1, {0.0, 0.5, 0.5}});
  const auto truth = ComputeGroundTruth(SubgroupModel({3, 1}), s, 4, 1, 3);
  EXPECT_EQ(truth.distribution(1), (std::vector<double>{0.75, 0.125, 0.125}));
}

TEST(CountChangesUpTo, Cases) {
  EXPECT_EQ(CountChangesUpTo(ChangeSchedule(), 8), 0);
  const auto both = Bern({{1, 0, 0.1}, {1, 1, 0.2}, {5, 0, 0.3}, {5, 1, 0.4}});
  EXPECT_EQ(CountChangesUpTo(both, 8), 1);
  const auto two = Bern({{1, 0, 0.1}, {3, 0, 0.3}, {7, 0, 0.4}});
  EXPECT_EQ(CountChangesUpTo(two, 5), 1);
  EXPECT_EQ(CountChangesUpTo(two, 7), 2);
  const auto noop = Bern({{1, 0, 0.1}, {3, 0, 0.1}});
  EXPECT_EQ(CountChangesUpTo(noop, 8), 0);
}

TEST(AccuracyBound, BernoulliReference) {
  ProtocolParams p{1000, 1, 1000, 100, 16, 1.0, 0.1, 0};
  EXPECT_NEAR(AccuracyBoundBernoulli(p), 6.4550264866018495012, 1e-13);
  ProtocolParams c{2000, 2, 1000, 2000, 32, 2.0, 0.05, 0};
  EXPECT_NEAR(AccuracyBoundBernoulli(c), 1.800907090328100419, 1e-13);
}

TEST(AccuracyBound, HeavyReference) {
  ProtocolParams p{200, 1, 200, 1000, 8, 256.0, 0.1, 500};
  EXPECT_NEAR(AccuracyBoundHeavy(p), 4.379525686435495626, 1e-13);
}

TEST(EvaluateRun, PerfectEstimateAndBudgetFlip) {
  ProtocolParams p{2000, 1, 2000, 2000, 8, 8.0, 0.05, 0};
  const auto levels = DeriveBernoulliLevels(p);
  const double budget = ChangeBudgetBernoulli(p, levels).max_changes;
  ASSERT_GT(budget, 1.0);
  ASSERT_LT(budget, 3.0);
  const auto schedule = Bern({{1, 0, 0.5}, {3, 0, 0.25}, {5, 0, 0.75}, {7, 0, 0.5}});
  const auto truth = ComputeGroundTruth(SubgroupModel({2000}), schedule, 2000, 8, 1);
  Transcript tr;
  for (std::int64_t t = 1; t <= 8; ++t) {
    EpochRecord rec;
    rec.epoch = t;
    rec.p_tilde = truth.mean(t);
    rec.global_update = true;
    tr.Append(rec);
  }
  const auto scores = EvaluateBernoulliRun(tr, truth, p, levels);
  const std::int64_t expected_changes[] = {0, 0, 1, 1, 2, 2, 3, 3};
  for (std::size_t k = 0; k < scores.size(); ++k) {
    EXPECT_EQ(scores[k].error, 0.0);
    EXPECT_TRUE(scores[k].within_bound);
    EXPECT_EQ(scores[k].changes_so_far, expected_changes[k]);
    EXPECT_EQ(scores[k].budget_active, static_cast<double>(expected_changes[k]) < budget);
  }
}

}  // namespace
}  // namespace thresh
