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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

fs::path Scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("thresh_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int RunCli(const std::string& args, const fs::path& log, const std::string& env = "") {
  const std::string cmd = env + std::string(THRESH_CLI_PATH) + " " + args + " > '" + log.string() +
                          "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string Config(const std::string& name) { return std::string(THRESH_CONFIG_DIR) + "/" + name; }

TEST(Cli, ValidateShippedConfigs) {
  const auto dir = Scratch("validate");
  for (const char* name : {"bernoulli_desk.cfg", "bernoulli_changes.cfg", "heavy_desk.cfg"}) {
    EXPECT_EQ(RunCli("validate " + Config(name), dir / "log"), 0) << name << Slurp(dir / "log");
    EXPECT_NE(Slurp(dir / "log").find("valid:"), std::string::npos);
  }
}

TEST(Cli, BadOverrideIsConfigError) {
  const auto dir = Scratch("bad");
  EXPECT_EQ(RunCli("validate " + Config("bernoulli_desk.cfg") + " --delta 1.5", dir / "log"), 2);
  EXPECT_NE(Slurp(dir / "log").find("delta"), std::string::npos);
  EXPECT_EQ(RunCli("validate " + Config("bernoulli_desk.cfg") + " --L 10", dir / "log"), 2);
  EXPECT_NE(Slurp(dir / "log").find("L must exceed"), std::string::npos);
  EXPECT_EQ(RunCli("validate " + (dir / "missing.cfg").string(), dir / "log"), 2);
  EXPECT_EQ(RunCli("frobnicate", dir / "log"), 2);
  EXPECT_EQ(RunCli("audit --mode brute --n 5", dir / "log"), 2);
}

TEST(Cli, UnwritableOutputIsRuntimeError) {
  const auto dir = Scratch("io");
  std::ofstream(dir / "blocker") << "x";
  const auto out = (dir / "blocker" / "sub").string();
  EXPECT_EQ(RunCli("simulate " + Config("bernoulli_changes.cfg") + " --runs 1 --T 16 --output " + out,
                dir / "log"),
            3)
      << Slurp(dir / "log");
}

TEST(Cli, SimulateWritesCsvsAndHonorsSeedEnv) {
  const auto dir = Scratch("simulate");
  const std::string args = "simulate " + Config("bernoulli_changes.cfg") + " --runs 2 --output ";
  ASSERT_EQ(RunCli(args + (dir / "a").string(), dir / "log"), 0) << Slurp(dir / "log");
  ASSERT_EQ(RunCli(args + (dir / "b").string(), dir / "log"), 0);
  EXPECT_TRUE(fs::exists(dir / "a" / "run_1.csv"));
  EXPECT_EQ(Slurp(dir / "a" / "aggregate.csv"), Slurp(dir / "b" / "aggregate.csv"));
  EXPECT_EQ(Slurp(dir / "a" / "run_0.csv"), Slurp(dir / "b" / "run_0.csv"));
  ASSERT_EQ(RunCli(args + (dir / "c").string(), dir / "log", "THRESH_SEED=4242 "), 0);
  EXPECT_NE(Slurp(dir / "a" / "run_0.csv"), Slurp(dir / "c" / "run_0.csv"));
}

TEST(Cli, GridAuditPassesAndBrokenGateFails) {
  const auto dir = Scratch("grid");
  EXPECT_EQ(RunCli("audit --mode grid --output " + (dir / "ok").string(), dir / "log"), 0)
      << Slurp(dir / "log");
  EXPECT_NE(Slurp(dir / "ok" / "audit.csv").find("enforced"), std::string::npos);
  EXPECT_EQ(RunCli("audit --mode grid --broken-gate --output " + (dir / "bad").string(), dir / "log"),
            4);
  EXPECT_NE(Slurp(dir / "log").find("violations="), std::string::npos);
}

TEST(Cli, ReplayAuditOnSmallRun) {
  const auto dir = Scratch("replay");
  EXPECT_EQ(RunCli("audit " + Config("bernoulli_changes.cfg") + " --runs 1 --audit_pairs 2 --output " +
                    (dir / "r").string(),
                dir / "log"),
            0)
      << Slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "r" / "audit.csv"));
}

}  // namespace
