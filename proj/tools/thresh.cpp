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

// thresh: command-line driver for simulations, privacy audits and config
// validation.
//
//   thresh validate <config> [--key value ...]
//   thresh simulate <config> [--key value ...]
//   thresh audit [<config>] [--mode replay|grid|brute] [--broken-gate]
//
// Every config key is also a flag; a flag replaces the key's value. The
// THRESH_SEED environment variable replaces the master seed.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "thresh/experiment.hpp"

namespace {

using thresh::ConfigOverrides;

struct OverrideFlags {
  std::map<std::string, std::string> single;
  std::vector<std::string> changes;

  void Register(CLI::App* app) {
    for (const auto& key : thresh::internal::KnownKeys()) {
      if (key == "change") continue;
      app->add_option("--" + key, single[key], "override config key '" + key + "'");
    }
    app->add_option("--change", changes, "replace the change schedule (repeatable)");
  }

  ConfigOverrides Collect(const CLI::App* app) const {
    ConfigOverrides out;
    for (const auto& [key, value] : single) {
      if (app->count("--" + key) > 0) out[key] = {value};
    }
    if (!changes.empty()) out["change"] = changes;
    return out;
  }
};

thresh::ExperimentConfig Load(const std::string& path, const ConfigOverrides& overrides) {
  auto config = path.empty() ? thresh::ParseConfig("", overrides)
                             : thresh::LoadConfig(path, overrides);
  thresh::ApplySeedOverride(config, std::getenv("THRESH_SEED"));
  return config;
}

void PrintWarnings(const thresh::ExperimentConfig& config) {
  for (const auto& w : thresh::ConfigWarnings(config)) std::cerr << "warning: " << w << "\n";
}

int Validate(const std::string& path, const ConfigOverrides& overrides) {
  const auto config = Load(path, overrides);
  PrintWarnings(config);
  const auto o = config.Options();
  const auto budget = config.Budget();
  std::cout << "valid: a=" << thresh::FormatDouble(o.levels.vote)
            << " b=" << thresh::FormatDouble(o.levels.estimate)
            << " change_budget=" << thresh::FormatDouble(budget.max_changes)
            << " min_L=" << thresh::FormatDouble(thresh::Assumption1MinSubgroup(config.params))
            << "\n";
  return thresh::kExitOk;
}

int Simulate(const std::string& path, const ConfigOverrides& overrides) {
  const auto config = Load(path, overrides);
  PrintWarnings(config);
  const auto summary = thresh::RunExperiment(config);
  std::cout << summary.Line(config) << "\n";
  return thresh::kExitOk;
}

std::int64_t IntFlag(const ConfigOverrides& o, const std::string& key, std::int64_t fallback) {
  auto it = o.find(key);
  if (it == o.end()) return fallback;
  auto v = thresh::internal::ParseInt(it->second.back());
  if (!v) throw thresh::ConfigError({"--" + key + " expects an integer"});
  return *v;
}

int Audit(const std::string& path, const ConfigOverrides& overrides, const std::string& mode,
          bool broken_gate) {
  thresh::AuditSummary summary;
  std::string output = "thresh_out";
  if (auto it = overrides.find("output"); it != overrides.end()) output = it->second.back();
  if (mode == "replay") {
    if (path.empty()) throw thresh::ConfigError({"audit --mode replay needs a config file"});
    const auto config = Load(path, overrides);
    PrintWarnings(config);
    output = config.output;
    summary = thresh::RunReplayAudit(config);
  } else if (mode == "grid") {
    summary = thresh::RunGridAudit(broken_gate);
  } else {
    double epsilon = 1.0;
    if (auto it = overrides.find("epsilon"); it != overrides.end()) {
      auto v = thresh::internal::ParseReal(it->second.back());
      if (!v || *v <= 0) throw thresh::ConfigError({"--epsilon expects a real > 0"});
      epsilon = *v;
    }
    const auto n = IntFlag(overrides, "n", 2);
    const auto T = IntFlag(overrides, "T", 2);
    const auto ell = IntFlag(overrides, "ell", 2);
    if (n < 2 || n > 3 || T < 1 || T > 2 || ell < 1 || ell > 2) {
      throw thresh::ParameterError(
          "exhaustive audit refused: needs n in {2,3}, T <= 2, ell <= 2 (at most " +
          std::to_string(thresh::kBruteForceLimit) + " input x behavior x transcript cases)");
    }
    const auto cfg = broken_gate ? thresh::BruteForceConfig::BrokenGate(n, T, ell, epsilon)
                                 : thresh::BruteForceConfig::Standard(n, T, ell, epsilon);
    const auto r = thresh::BruteForceDpCheck(cfg);
    summary.checks = 1;
    summary.violations = r.within() ? 0 : 1;
    summary.worst = r.max_ratio / r.bound;
    summary.csv = "n,T,ell,epsilon,max_ratio,bound,within,worst_behavior\n" +
                  std::to_string(n) + "," + std::to_string(T) + "," + std::to_string(ell) + "," +
                  thresh::FormatDouble(epsilon) + "," + thresh::FormatDouble(r.max_ratio) + "," +
                  thresh::FormatDouble(r.bound) + "," + (r.within() ? "1" : "0") + "," +
                  r.worst_behavior + "\n";
  }
  thresh::WriteTextFile(std::filesystem::path(output) / "audit.csv", summary.csv);
  std::cout << "audit: mode=" << mode << (broken_gate ? " gate=disabled" : "")
            << " checks=" << summary.checks << " violations=" << summary.violations
            << " worst=" << thresh::FormatDouble(summary.worst) << "\n";
  return summary.ok() ? thresh::kExitOk : thresh::kExitAuditViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Locally private tracking of evolving statistics"};
  app.require_subcommand(1);

  std::string validate_path, simulate_path, audit_path;
  std::string mode = "replay";
  bool broken_gate = false;
  OverrideFlags validate_flags, simulate_flags, audit_flags;

  auto* validate = app.add_subcommand("validate", "check a config and print derived constants");
  validate->add_option("config", validate_path, "config file")->required();
  validate_flags.Register(validate);

  auto* simulate = app.add_subcommand("simulate", "run seeded simulations and write CSVs");
  simulate->add_option("config", simulate_path, "config file")->required();
  simulate_flags.Register(simulate);

  auto* audit = app.add_subcommand("audit", "verify local differential privacy");
  audit->add_option("config", audit_path, "config file (replay mode)");
  audit->add_option("--mode", mode, "replay | grid | brute")
      ->check(CLI::IsMember({"replay", "grid", "brute"}));
  audit->add_flag("--broken-gate", broken_gate, "disable the budget gates (negative control)");
  audit_flags.Register(audit);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? thresh::kExitOk : thresh::kExitConfigError;
  }

  try {
    if (validate->parsed()) return Validate(validate_path, validate_flags.Collect(validate));
    if (simulate->parsed()) return Simulate(simulate_path, simulate_flags.Collect(simulate));
    return Audit(audit_path, audit_flags.Collect(audit), mode, broken_gate);
  } catch (const thresh::ConfigError& e) {
    for (const auto& p : e.problems()) std::cerr << "config error: " << p << "\n";
    return thresh::kExitConfigError;
  } catch (const thresh::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return thresh::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return thresh::kExitRuntimeError;
  }
}
