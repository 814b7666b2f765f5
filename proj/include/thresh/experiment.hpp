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

// Experiment plumbing: the line-oriented config format, seeded simulation and
// audit runs, and CSV output.

#ifndef THRESH_EXPERIMENT_HPP_
#define THRESH_EXPERIMENT_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thresh/audit.hpp"
#include "thresh/bernoulli.hpp"
#include "thresh/errors.hpp"
#include "thresh/heavy.hpp"
#include "thresh/params.hpp"
#include "thresh/sim.hpp"

namespace thresh {

class IoError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
  kExitAuditViolation = 4,
};

struct ExperimentConfig {
  ProtocolKind protocol = ProtocolKind::kBernoulli;
  ProtocolParams params;
  std::vector<std::int64_t> sizes;  // empty: balanced subgroups
  ChangeSchedule schedule;
  std::uint64_t seed = 1;
  std::int64_t runs = 1;
  SlackMode slack = SlackMode::kProof;
  Bootstrap bootstrap = Bootstrap::kForced;
  DataMode data = DataMode::kCounts;
  std::string output = "thresh_out";
  std::int64_t audit_pairs = 100;

  bool operator==(const ExperimentConfig&) const = default;

  std::int64_t value_size() const {
    return protocol == ProtocolKind::kHeavy ? params.dictionary_size : 1;
  }

  SubgroupModel Model() const {
    return sizes.empty() ? SubgroupModel::Balanced(params.num_users, params.num_subgroups)
                         : SubgroupModel(sizes);
  }

  ProtocolOptions Options() const {
    ProtocolOptions o;
    o.kind = protocol;
    o.params = params;
    o.levels = protocol == ProtocolKind::kHeavy ? DeriveHeavyLevels(params)
                                                : DeriveBernoulliLevels(params);
    o.slack = slack;
    o.bootstrap = bootstrap;
    return o;
  }

  ChangeBudget Budget() const {
    const auto levels = Options().levels;
    return protocol == ProtocolKind::kHeavy ? ChangeBudgetHeavy(params, levels)
                                            : ChangeBudgetBernoulli(params, levels);
  }
};

// "%.17g"; round-trips every finite double.
inline std::string FormatDouble(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace internal {

inline std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::optional<std::int64_t> ParseInt(std::string_view s) {
  std::int64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> ParseReal(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> Split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(Trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

struct RawChange {
  int line = 0;
  std::string text;
};

// `t:<epoch> j:<subgroup, 1-based> p:<value> [r:<round offset>]`.
inline std::optional<ChangeEntry> ParseChange(const RawChange& raw, ProtocolKind protocol,
                                              std::int64_t d, std::vector<std::string>& problems) {
  const std::string where = "line " + std::to_string(raw.line) + ": change";
  ChangeEntry entry;
  bool has_t = false, has_j = false, has_p = false;
  std::istringstream tokens(raw.text);
  std::string token;
  bool ok = true;
  while (tokens >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos) {
      problems.push_back(where + ": expected t:<epoch> j:<subgroup> p:<value> [r:<round>], got '" +
                         token + "'");
      ok = false;
      continue;
    }
    const std::string key = token.substr(0, colon);
    const std::string_view val = std::string_view(token).substr(colon + 1);
    if (key == "t" || key == "j" || key == "r") {
      auto v = ParseInt(val);
      if (!v) {
        problems.push_back(where + ": " + key + " expects an integer");
        ok = false;
        continue;
      }
      if (key == "t") entry.epoch = *v, has_t = true;
      if (key == "j") entry.subgroup = *v - 1, has_j = true;
      if (key == "r") entry.round_offset = *v;
    } else if (key == "p") {
      has_p = true;
      const auto parts = Split(val, ',');
      const bool sparse = val.find('=') != std::string_view::npos;
      if (protocol == ProtocolKind::kBernoulli) {
        auto v = parts.size() == 1 ? ParseReal(parts[0]) : std::nullopt;
        if (!v) {
          problems.push_back(where + ": p expects one real mean for protocol = bernoulli");
          ok = false;
        } else {
          entry.value = {*v};
        }
      } else if (sparse) {
        if (d < 1) {
          problems.push_back(where + ": sparse p needs d");
          ok = false;
          continue;
        }
        entry.value.assign(static_cast<std::size_t>(d), 0.0);
        for (auto part : parts) {
          const auto eq = part.find('=');
          auto idx = eq == std::string_view::npos ? std::nullopt : ParseInt(part.substr(0, eq));
          auto prob = eq == std::string_view::npos ? std::nullopt : ParseReal(part.substr(eq + 1));
          if (!idx || !prob || *idx < 0 || *idx >= d) {
            problems.push_back(where + ": sparse p expects v=prob with v in 0..d-1");
            ok = false;
            break;
          }
          entry.value[static_cast<std::size_t>(*idx)] += *prob;
        }
      } else {
        for (auto part : parts) {
          auto v = ParseReal(part);
          if (!v) {
            problems.push_back(where + ": p expects comma-separated reals");
            ok = false;
            break;
          }
          entry.value.push_back(*v);
        }
      }
    } else {
      problems.push_back(where + ": unknown field '" + key + "'");
      ok = false;
    }
  }
  if (!has_t || !has_j || !has_p) {
    problems.push_back(where + ": needs t:, j: and p:");
    ok = false;
  }
  if (!ok) return std::nullopt;
  return entry;
}

inline const std::vector<std::string>& KnownKeys() {
  static const std::vector<std::string> keys = {
      "protocol", "n",    "m",      "L",      "ell",       "T",    "epsilon",     "delta",
      "d",        "seed", "runs",   "slack",  "output",    "sizes", "bootstrap",  "data",
      "audit_pairs", "change"};
  return keys;
}

}  // namespace internal

using ConfigOverrides = std::map<std::string, std::vector<std::string>>;

// Parses `key = value` lines ('#' starts a comment). Entries in `overrides`
// replace every occurrence of their key in the text. Throws ConfigError with
// every problem found.
inline ExperimentConfig ParseConfig(std::string_view text, const ConfigOverrides& overrides = {}) {
  using namespace internal;
  std::vector<std::string> problems;
  struct Value {
    int line;
    std::string text;
  };
  std::map<std::string, Value> values;
  std::vector<RawChange> changes;

  std::istringstream in{std::string(text)};
  std::string line_text;
  int line = 0;
  while (std::getline(in, line_text)) {
    ++line;
    std::string_view l = line_text;
    if (auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
    l = Trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) {
      problems.push_back("line " + std::to_string(line) + ": expected key = value");
      continue;
    }
    const std::string key(Trim(l.substr(0, eq)));
    const std::string value(Trim(l.substr(eq + 1)));
    const auto& known = KnownKeys();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      problems.push_back("line " + std::to_string(line) + ": unknown key '" + key + "'");
      continue;
    }
    if (overrides.count(key)) continue;
    if (key == "change") {
      changes.push_back({line, value});
    } else if (values.count(key)) {
      problems.push_back("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    } else {
      values[key] = {line, value};
    }
  }
  for (const auto& [key, list] : overrides) {
    const auto& known = KnownKeys();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      problems.push_back("override: unknown key '" + key + "'");
      continue;
    }
    if (key == "change") {
      for (const auto& v : list) changes.push_back({0, v});
    } else if (!list.empty()) {
      values[key] = {0, list.back()};
    }
  }

  ExperimentConfig c;
  std::set<std::string> seen;
  auto where = [&](const std::string& key) {
    const int at = values.at(key).line;
    return (at > 0 ? "line " + std::to_string(at) : std::string("override")) + ": " + key;
  };
  auto get_int = [&](const std::string& key, std::int64_t& out, const char* form) {
    if (!values.count(key)) return;
    seen.insert(key);
    auto v = ParseInt(values.at(key).text);
    if (!v) {
      problems.push_back(where(key) + " expects " + form);
    } else {
      out = *v;
    }
  };
  auto get_real = [&](const std::string& key, double& out, const char* form) {
    if (!values.count(key)) return;
    seen.insert(key);
    auto v = ParseReal(values.at(key).text);
    if (!v) {
      problems.push_back(where(key) + " expects " + form);
    } else {
      out = *v;
    }
  };
  auto get_choice = [&](const std::string& key, const std::vector<std::string>& options) -> int {
    if (!values.count(key)) return -1;
    seen.insert(key);
    const auto& v = values.at(key).text;
    for (std::size_t k = 0; k < options.size(); ++k) {
      if (v == options[k]) return static_cast<int>(k);
    }
    std::string form;
    for (const auto& o : options) form += (form.empty() ? "" : " | ") + o;
    problems.push_back(where(key) + " expects one of " + form);
    return -1;
  };

  if (int k = get_choice("protocol", {"bernoulli", "heavy"}); k >= 0) {
    c.protocol = k == 0 ? ProtocolKind::kBernoulli : ProtocolKind::kHeavy;
  }
  if (int k = get_choice("slack", {"proof", "literal"}); k >= 0) {
    c.slack = k == 0 ? SlackMode::kProof : SlackMode::kLiteral;
  }
  if (int k = get_choice("bootstrap", {"forced", "vote"}); k >= 0) {
    c.bootstrap = k == 0 ? Bootstrap::kForced : Bootstrap::kVote;
  }
  if (int k = get_choice("data", {"counts", "bits"}); k >= 0) {
    c.data = k == 0 ? DataMode::kCounts : DataMode::kBits;
  }
  c.params.num_subgroups = 1;
  get_int("n", c.params.num_users, "a positive integer");
  get_int("m", c.params.num_subgroups, "a positive integer");
  get_int("L", c.params.min_subgroup_size, "a positive integer");
  get_int("ell", c.params.epoch_length, "a positive integer");
  get_int("T", c.params.num_epochs, "a positive integer");
  get_int("d", c.params.dictionary_size, "a positive integer");
  get_real("epsilon", c.params.epsilon, "a real > 0");
  get_real("delta", c.params.delta, "a real in (0,1)");
  get_int("runs", c.runs, "a positive integer");
  get_int("audit_pairs", c.audit_pairs, "a positive integer");
  if (values.count("seed")) {
    seen.insert("seed");
    std::uint64_t s = 0;
    const auto& t = values.at("seed").text;
    auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), s);
    if (ec != std::errc() || end != t.data() + t.size()) {
      problems.push_back(where("seed") + " expects a non-negative integer");
    } else {
      c.seed = s;
    }
  }
  if (values.count("output")) {
    seen.insert("output");
    c.output = values.at("output").text;
    if (c.output.empty()) problems.push_back(where("output") + " expects a path");
  }
  if (values.count("sizes")) {
    seen.insert("sizes");
    for (auto part : Split(values.at("sizes").text, ',')) {
      auto v = ParseInt(part);
      if (!v) {
        problems.push_back(where("sizes") + " expects comma-separated positive integers");
        c.sizes.clear();
        break;
      }
      c.sizes.push_back(*v);
    }
  }

  for (const char* key : {"n", "L", "ell", "T", "epsilon", "delta"}) {
    if (!values.count(key)) problems.push_back(std::string("missing required key '") + key + "'");
  }
  const bool heavy = c.protocol == ProtocolKind::kHeavy;
  if (heavy && !values.count("d")) problems.push_back("missing required key 'd' (protocol = heavy)");
  if (!heavy && values.count("d")) problems.push_back(where("d") + " is only valid for protocol = heavy");
  if (c.runs < 1) problems.push_back("runs must be >= 1");
  if (c.audit_pairs < 1) problems.push_back("audit_pairs must be >= 1");

  for (const auto& raw : changes) {
    if (auto e = ParseChange(raw, c.protocol, c.params.dictionary_size, problems)) {
      c.schedule.Add(std::move(*e));
    }
  }

  // Semantic validation only once the syntax is clean.
  if (problems.empty()) {
    for (auto& p : CheckParams(c.params, heavy)) problems.push_back(p);
  }
  if (problems.empty()) {
    if (!ValidateAssumption1(c.params)) {
      problems.push_back("L = " + std::to_string(c.params.min_subgroup_size) +
                         " violates the subgroup-size assumption: L must exceed " +
                         FormatDouble(Assumption1MinSubgroup(c.params)) +
                         " = (3/sqrt2 + sqrt32/epsilon) sqrt(n ln(12mT/delta))");
    }
    if (!c.sizes.empty()) {
      try {
        SubgroupModel(c.sizes).RequireConsistent(c.params);
      } catch (const ParameterError& e) {
        problems.push_back(std::string("sizes: ") + e.what());
      }
    }
    for (auto& p : CheckSchedule(c.schedule, c.params.num_subgroups, c.params.num_epochs,
                                 c.params.epoch_length, c.value_size())) {
      problems.push_back(p);
    }
  }
  if (problems.empty()) {
    try {
      (void)c.Options();
    } catch (const ParameterError& e) {
      problems.push_back(e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

// Non-fatal observations about a valid config.
inline std::vector<std::string> ConfigWarnings(const ExperimentConfig& c) {
  std::vector<std::string> out;
  const auto& p = c.params;
  if (c.protocol == ProtocolKind::kHeavy) {
    const double n = static_cast<double>(p.num_users);
    if (std::log2(static_cast<double>(p.dictionary_size)) > n * n / static_cast<double>(p.epoch_length)) {
      out.push_back("log2(d) exceeds n^2/ell; the dictionary is large for this n and ell");
    }
  }
  if (c.schedule.HasMidEpochChanges()) {
    out.push_back("schedule has mid-epoch changes (r: > 0); accuracy bounds assume epoch-aligned changes");
  }
  const double budget = c.Budget().max_changes;
  const auto changes = CountChangesUpTo(c.schedule, p.num_epochs);
  if (static_cast<double>(changes) >= budget) {
    out.push_back("schedule has " + std::to_string(changes) + " changes, change budget is " +
                  FormatDouble(budget));
  }
  return out;
}

inline std::string SerializeConfig(const ExperimentConfig& c) {
  std::ostringstream out;
  const bool heavy = c.protocol == ProtocolKind::kHeavy;
  out << "protocol = " << (heavy ? "heavy" : "bernoulli") << "\n";
  out << "n = " << c.params.num_users << "\n";
  out << "m = " << c.params.num_subgroups << "\n";
  out << "L = " << c.params.min_subgroup_size << "\n";
  out << "ell = " << c.params.epoch_length << "\n";
  out << "T = " << c.params.num_epochs << "\n";
  out << "epsilon = " << FormatDouble(c.params.epsilon) << "\n";
  out << "delta = " << FormatDouble(c.params.delta) << "\n";
  if (heavy) out << "d = " << c.params.dictionary_size << "\n";
  if (!c.sizes.empty()) {
    out << "sizes = ";
    for (std::size_t j = 0; j < c.sizes.size(); ++j) out << (j ? "," : "") << c.sizes[j];
    out << "\n";
  }
  out << "seed = " << c.seed << "\n";
  out << "runs = " << c.runs << "\n";
  out << "slack = " << (c.slack == SlackMode::kProof ? "proof" : "literal") << "\n";
  out << "bootstrap = " << (c.bootstrap == Bootstrap::kForced ? "forced" : "vote") << "\n";
  out << "data = " << (c.data == DataMode::kCounts ? "counts" : "bits") << "\n";
  out << "audit_pairs = " << c.audit_pairs << "\n";
  out << "output = " << c.output << "\n";
  for (const auto& e : c.schedule.entries()) {
    out << "change = t:" << e.epoch << " j:" << e.subgroup + 1;
    if (e.round_offset != 0) out << " r:" << e.round_offset;
    out << " p:";
    if (!heavy) {
      out << FormatDouble(e.value.at(0));
    } else {
      bool first = true;
      for (std::size_t v = 0; v < e.value.size(); ++v) {
        if (e.value[v] == 0.0) continue;
        out << (first ? "" : ",") << v << "=" << FormatDouble(e.value[v]);
        first = false;
      }
    }
    out << "\n";
  }
  return out.str();
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// An unreadable config file is reported as a config error.
inline ExperimentConfig LoadConfig(const std::string& path, const ConfigOverrides& overrides = {}) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const IoError& e) {
    throw ConfigError({e.what()});
  }
  return ParseConfig(text, overrides);
}

// A set THRESH_SEED replaces the configured master seed.
inline void ApplySeedOverride(ExperimentConfig& c, const char* env_value) {
  if (env_value == nullptr || *env_value == '\0') return;
  std::uint64_t s = 0;
  std::string_view v(env_value);
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError({"THRESH_SEED must be a non-negative integer"});
  }
  c.seed = s;
}

// ---- Single runs ------------------------------------------------------------

struct RunOutcome {
  std::int64_t run = 0;
  std::uint64_t seed = 0;
  std::vector<EpochScore> scores;
  std::vector<PrivacyCounters> final_counters;
  bool ledger_ok = false;
};

struct BernoulliRunData {
  RunOutcome outcome;
  Transcript transcript;
  std::vector<std::vector<double>> means;  // [epoch - 1][user]; kept on request
};

inline BernoulliRunData SimulateBernoulli(const ExperimentConfig& c, std::int64_t run,
                                          bool keep_data = false) {
  const ProtocolOptions o = c.Options();
  BernoulliRunData out;
  out.outcome.run = run;
  out.outcome.seed = c.seed + static_cast<std::uint64_t>(run);
  BernoulliStream stream(c.Model(), c.schedule, c.params.epoch_length, c.params.num_epochs,
                         out.outcome.seed, c.data);
  BernoulliProtocol protocol(o, out.outcome.seed);
  for (std::int64_t t = 1; t <= c.params.num_epochs; ++t) {
    auto means = stream.NextEpochMeans();
    protocol.Step(means);
    if (keep_data) out.means.push_back(std::move(means));
  }
  out.transcript = protocol.transcript();
  out.outcome.scores = EvaluateBernoulliRun(out.transcript, stream.truth(), c.params, o.levels);
  for (const auto& u : protocol.users()) out.outcome.final_counters.push_back(u.counters);
  out.outcome.ledger_ok = LedgerCheck(out.transcript, c.params, o.levels);
  return out;
}

struct HeavyRunData {
  RunOutcome outcome;
  HeavyTranscript transcript;
  std::vector<std::vector<std::vector<DictValue>>> samples;  // [epoch - 1][user][round]
};

inline HeavyRunData SimulateHeavy(const ExperimentConfig& c, std::int64_t run,
                                  bool keep_data = false) {
  const ProtocolOptions o = c.Options();
  HeavyRunData out;
  out.outcome.run = run;
  out.outcome.seed = c.seed + static_cast<std::uint64_t>(run);
  DictionaryStream stream(c.Model(), c.schedule, c.params.epoch_length, c.params.num_epochs,
                          c.params.dictionary_size, out.outcome.seed);
  HeavyProtocol protocol(o, out.outcome.seed);
  for (std::int64_t t = 1; t <= c.params.num_epochs; ++t) {
    auto samples = stream.NextEpochSamples();
    protocol.Step(samples);
    if (keep_data) out.samples.push_back(std::move(samples));
  }
  out.transcript = protocol.transcript();
  out.outcome.scores = EvaluateHeavyRun(out.transcript, stream.truth(), c.params, o.levels);
  for (const auto& u : protocol.users()) out.outcome.final_counters.push_back(u.counters);
  out.outcome.ledger_ok = LedgerCheck(out.transcript, c.params, o.levels);
  return out;
}

inline RunOutcome SimulateRun(const ExperimentConfig& c, std::int64_t run) {
  return c.protocol == ProtocolKind::kHeavy ? SimulateHeavy(c, run).outcome
                                            : SimulateBernoulli(c, run).outcome;
}

// Largest number of global updates inside one window [c_k, c_{k+1}) between
// adjacent change epochs (the first window starts at epoch 1).
inline std::int64_t MaxUpdatesBetweenChanges(const std::vector<EpochScore>& scores,
                                             const ChangeSchedule& schedule) {
  const auto changes = ChangeEpochs(schedule);
  std::int64_t best = 0;
  std::int64_t current = 0;
  std::size_t next = 0;
  for (const auto& s : scores) {
    if (next < changes.size() && s.epoch == changes[next]) {
      current = 0;
      ++next;
    }
    current += s.global_update ? 1 : 0;
    best = std::max(best, current);
  }
  return best;
}

// Nearest-rank percentile, q in (0, 1].
inline double Percentile(std::vector<double> values, double q) {
  Require(!values.empty(), "percentile of an empty set");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

struct RunStats {
  std::int64_t active_epochs = 0;
  std::int64_t active_within = 0;
  bool all_active_within = true;
  double max_error = 0.0;
  double max_active_error = 0.0;
  std::int64_t global_updates = 0;
  std::int64_t max_updates_between_changes = 0;
  std::int64_t max_votes = 0;
  std::int64_t max_estimates = 0;
  std::vector<double> vote_spend;
  std::vector<double> estimate_spend;
};

inline RunStats Summarize(const RunOutcome& r, const ChangeSchedule& schedule) {
  RunStats s;
  for (const auto& e : r.scores) {
    s.max_error = std::max(s.max_error, e.error);
    s.global_updates += e.global_update ? 1 : 0;
    if (e.budget_active) {
      ++s.active_epochs;
      s.active_within += e.within_bound ? 1 : 0;
      s.all_active_within = s.all_active_within && e.within_bound;
      s.max_active_error = std::max(s.max_active_error, e.error);
    }
  }
  s.max_updates_between_changes = MaxUpdatesBetweenChanges(r.scores, schedule);
  for (const auto& c : r.final_counters) {
    s.max_votes = std::max(s.max_votes, c.votes);
    s.max_estimates = std::max(s.max_estimates, c.estimates);
    s.vote_spend.push_back(c.vote_spend);
    s.estimate_spend.push_back(c.estimate_spend);
  }
  return s;
}

// ---- CSV output -------------------------------------------------------------

inline const char* kRunCsvHeader =
    "epoch,global_update,p_true,p_est_raw,p_est_clamped,error,bound,within_bound,"
    "changes_so_far,budget_active,votes_cast,estimates_sent\n";

inline std::string RunCsv(const std::vector<EpochScore>& scores) {
  std::string out = kRunCsvHeader;
  for (const auto& s : scores) {
    out += std::to_string(s.epoch) + "," + (s.global_update ? "1" : "0") + "," +
           FormatDouble(s.truth) + "," + FormatDouble(s.estimate) + "," +
           FormatDouble(std::clamp(s.estimate, 0.0, 1.0)) + "," + FormatDouble(s.error) + "," +
           FormatDouble(s.bound) + "," + (s.within_bound ? "1" : "0") + "," +
           std::to_string(s.changes_so_far) + "," + (s.budget_active ? "1" : "0") + "," +
           std::to_string(s.votes_cast) + "," + std::to_string(s.estimates_sent) + "\n";
  }
  return out;
}

inline const char* kAggregateCsvHeader =
    "run,seed,active_epochs,active_within,fraction_within,all_active_within,max_error,"
    "max_active_error,global_updates,max_updates_between_changes,max_votes,max_estimates,"
    "vote_spend_p50,vote_spend_p90,vote_spend_p99,vote_spend_max,estimate_spend_p50,"
    "estimate_spend_p90,estimate_spend_p99,estimate_spend_max,ledger_ok\n";

inline std::string AggregateRow(const std::string& run, const std::string& seed,
                                const RunStats& s, bool ledger_ok) {
  const double frac = s.active_epochs > 0 ? static_cast<double>(s.active_within) /
                                                static_cast<double>(s.active_epochs)
                                          : 1.0;
  std::string out = run + "," + seed + "," + std::to_string(s.active_epochs) + "," +
                    std::to_string(s.active_within) + "," + FormatDouble(frac) + "," +
                    (s.all_active_within ? "1" : "0") + "," + FormatDouble(s.max_error) + "," +
                    FormatDouble(s.max_active_error) + "," + std::to_string(s.global_updates) +
                    "," + std::to_string(s.max_updates_between_changes) + "," +
                    std::to_string(s.max_votes) + "," + std::to_string(s.max_estimates);
  for (const auto* spend : {&s.vote_spend, &s.estimate_spend}) {
    for (double q : {0.5, 0.9, 0.99, 1.0}) out += "," + FormatDouble(Percentile(*spend, q));
  }
  return out + "," + (ledger_ok ? "1" : "0") + "\n";
}

inline void WriteTextFile(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

struct ExperimentSummary {
  std::vector<RunOutcome> runs;
  std::int64_t runs_all_within = 0;
  double max_active_error = 0.0;
  std::string output_dir;

  std::string Line(const ExperimentConfig& c) const {
    return std::string("simulate: protocol=") +
           (c.protocol == ProtocolKind::kHeavy ? "heavy" : "bernoulli") +
           " runs=" + std::to_string(runs.size()) +
           " runs_within_bound=" + std::to_string(runs_all_within) +
           " max_active_error=" + FormatDouble(max_active_error) + " output=" + output_dir;
  }
};

// Runs seeds seed, seed+1, ...; writes run_<k>.csv per run and aggregate.csv
// into config.output.
inline ExperimentSummary RunExperiment(const ExperimentConfig& c, bool write_files = true) {
  ExperimentSummary summary;
  summary.output_dir = c.output;
  std::string aggregate = kAggregateCsvHeader;
  RunStats pooled;
  bool pooled_ledger = true;
  for (std::int64_t k = 0; k < c.runs; ++k) {
    RunOutcome r = SimulateRun(c, k);
    const RunStats s = Summarize(r, c.schedule);
    if (write_files) {
      WriteTextFile(std::filesystem::path(c.output) / ("run_" + std::to_string(k) + ".csv"),
                    RunCsv(r.scores));
    }
    aggregate += AggregateRow(std::to_string(k), std::to_string(r.seed), s, r.ledger_ok);
    summary.runs_all_within += s.all_active_within ? 1 : 0;
    summary.max_active_error = std::max(summary.max_active_error, s.max_active_error);
    pooled.active_epochs += s.active_epochs;
    pooled.active_within += s.active_within;
    pooled.all_active_within = pooled.all_active_within && s.all_active_within;
    pooled.max_error = std::max(pooled.max_error, s.max_error);
    pooled.max_active_error = std::max(pooled.max_active_error, s.max_active_error);
    pooled.global_updates += s.global_updates;
    pooled.max_updates_between_changes =
        std::max(pooled.max_updates_between_changes, s.max_updates_between_changes);
    pooled.max_votes = std::max(pooled.max_votes, s.max_votes);
    pooled.max_estimates = std::max(pooled.max_estimates, s.max_estimates);
    pooled.vote_spend.insert(pooled.vote_spend.end(), s.vote_spend.begin(), s.vote_spend.end());
    pooled.estimate_spend.insert(pooled.estimate_spend.end(), s.estimate_spend.begin(),
                                 s.estimate_spend.end());
    pooled_ledger = pooled_ledger && r.ledger_ok;
    summary.runs.push_back(std::move(r));
  }
  aggregate += AggregateRow("all", "", pooled, pooled_ledger);
  if (write_files) WriteTextFile(std::filesystem::path(c.output) / "aggregate.csv", aggregate);
  return summary;
}

// ---- Audits -----------------------------------------------------------------

struct AuditSummary {
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  double worst = 0.0;  // largest log-ratio (replay) or ratio/e^epsilon (enumeration)
  std::string csv;

  bool ok() const { return violations == 0; }
};

// Replays audit_pairs input pairs per user for every run of the config.
inline AuditSummary RunReplayAudit(const ExperimentConfig& c) {
  AuditSummary out;
  out.csv = "run,user,pairs,max_log_ratio,epsilon,within\n";
  const ProtocolOptions o = c.Options();
  for (std::int64_t k = 0; k < c.runs; ++k) {
    PrivacySpendReport report;
    bool ledger_ok = false;
    const std::uint64_t audit_seed = DeriveSeed(c.seed + static_cast<std::uint64_t>(k),
                                                StreamDomain::kAudit);
    if (c.protocol == ProtocolKind::kHeavy) {
      auto run = SimulateHeavy(c, k, /*keep_data=*/true);
      report = AuditHeavyRun(run.transcript, o, run.samples, c.audit_pairs, audit_seed);
      ledger_ok = run.outcome.ledger_ok;
    } else {
      auto run = SimulateBernoulli(c, k, /*keep_data=*/true);
      report = AuditBernoulliRun(run.transcript, o, run.means, c.audit_pairs, audit_seed);
      ledger_ok = run.outcome.ledger_ok;
    }
    for (std::size_t i = 0; i < report.per_user_max.size(); ++i) {
      const double v = report.per_user_max[i];
      out.csv += std::to_string(k) + "," + std::to_string(i) + "," +
                 std::to_string(c.audit_pairs) + "," + FormatDouble(v) + "," +
                 FormatDouble(c.params.epsilon) + "," + (WithinEpsilon(v, c.params.epsilon) ? "1" : "0") +
                 "\n";
    }
    out.checks += report.pairs_checked + 1;
    out.violations += report.violations + (ledger_ok ? 0 : 1);
    out.worst = std::max(out.worst, report.global_max);
  }
  return out;
}

// Exhaustive check on the tiny grid n in {2,3}, T in {1,2}, ell in {1,2},
// epsilon in {0.5, 1, 2}, optionally on the uncapped automaton.
inline AuditSummary RunGridAudit(bool broken_gate) {
  AuditSummary out;
  out.csv = "n,T,ell,epsilon,a,b,gate,max_ratio,bound,within\n";
  for (std::int64_t n : {2, 3}) {
    for (std::int64_t T : {1, 2}) {
      for (std::int64_t ell : {1, 2}) {
        for (double eps : {0.5, 1.0, 2.0}) {
          const auto cfg = broken_gate ? BruteForceConfig::BrokenGate(n, T, ell, eps)
                                       : BruteForceConfig::Standard(n, T, ell, eps);
          const auto r = BruteForceDpCheck(cfg);
          ++out.checks;
          out.violations += r.within() ? 0 : 1;
          out.worst = std::max(out.worst, r.max_ratio / r.bound);
          out.csv += std::to_string(n) + "," + std::to_string(T) + "," + std::to_string(ell) +
                     "," + FormatDouble(eps) + "," + FormatDouble(cfg.vote_noise) + "," +
                     FormatDouble(cfg.estimate_noise) + "," +
                     (cfg.gate == BudgetGate::kEnforced ? "enforced" : "disabled") + "," +
                     FormatDouble(r.max_ratio) + "," + FormatDouble(r.bound) + "," +
                     (r.within() ? "1" : "0") + "\n";
        }
      }
    }
  }
  return out;
}

}  // namespace thresh

#endif  // THRESH_EXPERIMENT_HPP_
