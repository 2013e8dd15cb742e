// Copyright 2026 The cbfqp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cbfqp/sim.hpp"

namespace cbfqp::io {

// Sectioned key = value document:
//
//   [system]      type, id
//   [params]      model parameters (missing ones take defaults)
//   [initial]     initial state by component name
//   [exogenous]   segment = t_start, value   (lk also: curve = t_start, R)
//   [controller]  level, variant, barrier
//   [sim]         horizon, dt, dt_max
//   [monitors]    name = threshold | auto
//   [verify]      settings for the sampling certificates
//
// '#' starts a comment. Keys may repeat only in [exogenous].
class ScenarioFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line = 0;
  };

  static ScenarioFile parse(std::istream& in, const std::string& source);
  static ScenarioFile load(const std::string& path);

  const std::string& source() const { return source_; }
  const std::vector<Entry>& section(const std::string& name) const;
  std::optional<Entry> find(const std::string& section,
                            const std::string& key) const;
  std::string system_type() const;

  // "key=value" or "section.key=value". A bare key resolves to the section
  // that already holds it, else to [params]. Throws ConfigError.
  void apply_override(const std::string& assignment);
  void set(const std::string& section, const std::string& key,
           const std::string& value);

 private:
  std::string source_;
  std::map<std::string, std::vector<Entry>> sections_;
};

enum class FixtureKind { kSimulation, kVerification };

struct BuiltScenario {
  Scenario scenario;
  std::vector<std::string> notices;
};

FixtureKind fixture_kind(const ScenarioFile& file);

// Builds an acc or lk simulation. Unknown keys, bad numbers and invalid
// combinations raise ConfigError with the offending line.
BuiltScenario build_scenario(const ScenarioFile& file);

struct VerifyReport {
  std::string id;
  std::string text;
  std::string json;
  std::vector<std::string> warnings;
};

// Runs the sampling certificates configured by a verification fixture
// (decay, remark9, comparison_ode).
VerifyReport run_verification(const ScenarioFile& file);

// CSV with columns t, states, inputs, delta, monitors, qp_status,
// active_set; numbers printed with 17 significant digits.
void write_csv(const Trajectory& traj, std::ostream& out);

struct CsvTable {
  std::vector<std::string> columns;                // numeric columns
  std::vector<std::vector<double>> rows;           // [row][column]
  std::vector<std::string> qp_status;
  std::vector<std::string> active_set;

  int column(const std::string& name) const;       // -1 when absent
  std::vector<double> series(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable to_table(const Trajectory& traj);

struct RunReport {
  std::string scenario_id;
  std::vector<MonitorVerdict> verdicts;
  double max_abs_delta = 0.0;
  std::map<std::string, int> status_histogram;
  int fallback_steps = 0;
  bool aborted = false;
  std::string abort_reason;
  double runtime_s = 0.0;
  bool pass() const;
};

RunReport make_report(const Trajectory& traj, double runtime_s);
std::string report_text(const RunReport& rep);
std::string report_json(const RunReport& rep);

struct SignalDifference {
  std::string name;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

struct Comparison {
  std::string lhs;
  std::string rhs;
  bool resampled = false;
  std::vector<SignalDifference> signals;
  double tv_lhs = 0.0;
  double tv_rhs = 0.0;
};

// Aligns rhs on lhs's time grid (linear interpolation with resampled = true
// when the grids differ) and diffs every shared numeric column. Total
// variation is summed over columns whose name starts with 'u'.
Comparison compare_tables(const std::string& lhs_name, const CsvTable& lhs,
                          const std::string& rhs_name, const CsvTable& rhs);
std::string comparison_text(const std::vector<Comparison>& cmp);

// Fixture directory: $CBFQP_FIXTURES if set, else the source tree default.
std::string fixture_dir();
std::vector<std::string> list_fixtures(const std::string& dir);

}  // namespace cbfqp::io
