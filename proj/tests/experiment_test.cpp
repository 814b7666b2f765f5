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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "thresh/experiment.hpp"

namespace thresh {
namespace {

const char* kMinimal =
    "n = 2000\n"
    "L = 2000\n"
    "ell = 500\n"
    "T = 8\n"
    "epsilon = 2\n"
    "delta = 0.05\n"
    "change = t:1 j:1 p:0.4\n";

std::string ProblemsOf(std::string_view text, const ConfigOverrides& overrides = {}) {
  try {
    ParseConfig(text, overrides);
  } catch (const ConfigError& e) {
    std::string all;
    for (const auto& p : e.problems()) all += p + "\n";
    return all;
  }
  return "";
}

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Config, MinimalUsesDefaults) {
  const auto c = ParseConfig(kMinimal);
  EXPECT_EQ(c.protocol, ProtocolKind::kBernoulli);
  EXPECT_EQ(c.params.num_subgroups, 1);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.runs, 1);
  EXPECT_EQ(c.slack, SlackMode::kProof);
  EXPECT_EQ(c.bootstrap, Bootstrap::kForced);
  EXPECT_EQ(c.data, DataMode::kCounts);
  EXPECT_EQ(c.output, "thresh_out");
  EXPECT_EQ(c.audit_pairs, 100);
  ASSERT_EQ(c.schedule.entries().size(), 1u);
  EXPECT_EQ(c.schedule.entries()[0].value, std::vector<double>{0.4});
}

TEST(Config, CommentsAndBlankLines) {
  const auto c = ParseConfig(std::string("# header\n\n") + kMinimal + "seed = 9   # trailing\n");
  EXPECT_EQ(c.seed, 9u);
}

TEST(Config, DeltaOutOfRange) {
  const auto problems = ProblemsOf(std::string(kMinimal) + "", {{"delta", {"1.5"}}});
  EXPECT_NE(problems.find("delta"), std::string::npos) << problems;
}

TEST(Config, SmallLQuotesMinimum) {
  const auto problems = ProblemsOf(kMinimal, {{"L", {"100"}}});
  ProtocolParams p{2000, 1, 100, 500, 8, 2.0, 0.05, 0};
  EXPECT_NE(problems.find("L = 100"), std::string::npos) << problems;
  EXPECT_NE(problems.find(FormatDouble(Assumption1MinSubgroup(p))), std::string::npos) << problems;
}

TEST(Config, UnknownKeyAndBadValuesAllReported) {
  const auto problems = ProblemsOf(std::string(kMinimal) + "colour = blue\nruns = many\n");
  EXPECT_NE(problems.find("unknown key 'colour'"), std::string::npos) << problems;
  EXPECT_NE(problems.find("runs"), std::string::npos) << problems;
}

TEST(Config, MissingKeysAndStrayD) {
  EXPECT_NE(ProblemsOf("n = 10\n").find("missing required key 'epsilon'"), std::string::npos);
  EXPECT_NE(ProblemsOf(std::string(kMinimal) + "d = 5\n").find("only valid"), std::string::npos);
  EXPECT_NE(ProblemsOf(std::string("protocol = heavy\n") + kMinimal).find("'d'"),
            std::string::npos);
}

TEST(Config, ScheduleProblems) {
  // first entry must sit at epoch 1
  EXPECT_FALSE(ProblemsOf(kMinimal, {{"change", {"t:2 j:1 p:0.4"}}}).empty());
  EXPECT_FALSE(ProblemsOf(kMinimal, {{"change", {"t:1 j:1 p:1.4"}}}).empty());
  EXPECT_FALSE(ProblemsOf(kMinimal, {{"change", {"t:1 p:0.4"}}}).empty());
  EXPECT_FALSE(ProblemsOf(kMinimal, {{"change", {"t:1 j:1 p:0.4", "t:99 j:1 p:0.1"}}}).empty());
}

TEST(Config, OverridesReplaceKeys) {
  const auto c = ParseConfig(kMinimal, {{"epsilon", {"4"}}, {"change", {"t:1 j:1 p:0.1", "t:3 j:1 p:0.9"}}});
  EXPECT_EQ(c.params.epsilon, 4.0);
  EXPECT_EQ(c.schedule.entries().size(), 2u);
}

TEST(Config, SerializeRoundTrips) {
  auto c = ParseConfig(std::string(kMinimal) +
                       "m = 2\nsizes = 1200,800\nseed = 17\nruns = 3\nslack = literal\n"
                       "bootstrap = vote\ndata = bits\noutput = somewhere\naudit_pairs = 7\n",
                       {{"L", {"800"}},
                        {"change", {"t:1 j:1 p:0.3", "t:1 j:2 p:0.6", "t:4 j:2 p:0.1 r:250"}}});
  const auto text = SerializeConfig(c);
  EXPECT_EQ(ParseConfig(text), c) << text;
  EXPECT_EQ(SerializeConfig(ParseConfig(text)), text);

  const auto h = ParseConfig(
      "protocol = heavy\nn = 200\nL = 200\nell = 100\nT = 4\nd = 50\nepsilon = 256\n"
      "delta = 0.1\nchange = t:1 j:1 p:0=0.25,7=0.75\n");
  EXPECT_EQ(ParseConfig(SerializeConfig(h)), h);
  EXPECT_EQ(h.schedule.entries()[0].value[7], 0.75);
}

TEST(Config, SeedEnvironmentOverride) {
  auto c = ParseConfig(kMinimal);
  ApplySeedOverride(c, nullptr);
  EXPECT_EQ(c.seed, 1u);
  ApplySeedOverride(c, "12345");
  EXPECT_EQ(c.seed, 12345u);
  EXPECT_THROW(ApplySeedOverride(c, "-3"), ConfigError);
}

TEST(Config, Warnings) {
  const auto c = ParseConfig(kMinimal, {{"change", {"t:1 j:1 p:0.4", "t:3 j:1 p:0.2 r:10"}}});
  bool mid = false;
  for (const auto& w : ConfigWarnings(c)) mid = mid || w.find("mid-epoch") != std::string::npos;
  EXPECT_TRUE(mid);
}

TEST(Percentile, NearestRank) {
  std::vector<double> v = {5, 1, 4, 2, 3};
  EXPECT_EQ(Percentile(v, 0.5), 3);
  EXPECT_EQ(Percentile(v, 0.9), 5);
  EXPECT_EQ(Percentile(v, 0.2), 1);
  EXPECT_EQ(Percentile(v, 1.0), 5);
}

TEST(Windows, MaxUpdatesBetweenChanges) {
  ChangeSchedule s;
  s.Add(ChangeEntry{1, 0, 0, {0.1}});
  s.Add(ChangeEntry{4, 0, 0, {0.5}});
  std::vector<EpochScore> scores(6);
  for (int t = 0; t < 6; ++t) scores[t].epoch = t + 1;
  scores[0].global_update = true;
  scores[3].global_update = true;
  EXPECT_EQ(MaxUpdatesBetweenChanges(scores, s), 1);
  scores[4].global_update = true;
  EXPECT_EQ(MaxUpdatesBetweenChanges(scores, s), 2);
}

TEST(Experiment, CsvFilesAreByteIdenticalAcrossRepeats) {
  const auto dir = std::filesystem::temp_directory_path() / "thresh_experiment_test";
  std::filesystem::remove_all(dir);
  auto c = ParseConfig(kMinimal, {{"runs", {"2"}}, {"epsilon", {"16"}},
                                  {"change", {"t:1 j:1 p:0.2", "t:4 j:1 p:0.8"}}});
  c.output = (dir / "a").string();
  RunExperiment(c);
  c.output = (dir / "b").string();
  RunExperiment(c);
  for (const char* name : {"run_0.csv", "run_1.csv", "aggregate.csv"}) {
    const auto a = Slurp(dir / "a" / name);
    ASSERT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, Slurp(dir / "b" / name)) << name;
  }
  const auto run = Slurp(dir / "a" / "run_0.csv");
  EXPECT_EQ(run.substr(0, run.find('\n') + 1), kRunCsvHeader);
  std::filesystem::remove_all(dir);
}

TEST(Experiment, DifferentSeedsDiffer) {
  auto c = ParseConfig(kMinimal, {{"epsilon", {"16"}}});
  const auto a = SimulateRun(c, 0);
  c.seed = 99;
  const auto b = SimulateRun(c, 0);
  EXPECT_NE(RunCsv(a.scores), RunCsv(b.scores));
}

TEST(Experiment, BudgetActiveFlipsOffAfterEnoughChanges) {
  const auto c = ParseConfig(kMinimal, {{"epsilon", {"8"}},
                                        {"change", {"t:1 j:1 p:0.1", "t:3 j:1 p:0.5",
                                                    "t:5 j:1 p:0.9", "t:7 j:1 p:0.2"}}});
  const auto budget = ChangeBudgetBernoulli(c.params, c.Options().levels).max_changes;
  ASSERT_LT(budget, 3.0);
  const auto r = SimulateRun(c, 0);
  bool saw_inactive = false;
  for (const auto& s : r.scores) {
    EXPECT_EQ(s.budget_active, static_cast<double>(s.changes_so_far) < budget);
    saw_inactive = saw_inactive || !s.budget_active;
  }
  EXPECT_TRUE(saw_inactive);
}

TEST(Experiment, StationaryStreamUpdatesOnce) {
  const auto c = ParseConfig(kMinimal, {{"epsilon", {"16"}}, {"T", {"16"}}, {"runs", {"100"}}});
  const auto summary = RunExperiment(c, /*write_files=*/false);
  int once = 0;
  for (const auto& r : summary.runs) {
    EXPECT_TRUE(r.ledger_ok);
    once += Summarize(r, c.schedule).global_updates == 1 ? 1 : 0;
  }
  EXPECT_GE(once, 95);
}

TEST(Experiment, ReplayAuditOnSmallConfig) {
  const auto c = ParseConfig(kMinimal, {{"epsilon", {"16"}}, {"audit_pairs", {"3"}},
                                        {"change", {"t:1 j:1 p:0.2", "t:4 j:1 p:0.8"}}});
  const auto a = RunReplayAudit(c);
  EXPECT_TRUE(a.ok()) << a.worst;
  EXPECT_EQ(a.checks, 2000 * 3 + 1);
  EXPECT_LE(a.worst, 16.0 * (1 + 1e-12));
}

}  // namespace
}  // namespace thresh
