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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbfqp/controller.hpp"
#include "cbfqp/system_model.hpp"

namespace cbfqp {

// Piecewise-constant exogenous signal. Segment i holds from its start time
// until the next segment starts; the first segment must start at t = 0.
class ExogenousProfile {
 public:
  struct Segment {
    double t_start = 0.0;
    Vector value;
  };

  ExogenousProfile() = default;
  // Throws ConstructionError on unsorted starts or inconsistent widths.
  explicit ExogenousProfile(std::vector<Segment> segments);
  static ExogenousProfile constant(const Vector& value);

  Vector at(double t) const;
  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

 private:
  std::vector<Segment> segments_;
};

// A monitored quantity g(x, u, w); the step is flagged unless g >= threshold
// (NaN counts as a violation).
struct Monitor {
  std::string name;
  std::function<double(const Vector& x, const Vector& u, const Vector& w)> value;
  double threshold = 0.0;
};

using ControlLaw = std::function<ControlOutput(const Vector& x, const Vector& w)>;

ControlLaw control_law(ControllerSpec spec);

struct Scenario {
  std::string id;
  std::shared_ptr<const ControlAffineSystem> system;
  ControlLaw controller;
  Vector x0;
  double horizon = 0.0;
  double dt = 1e-3;
  double dt_max = 0.1;
  ExogenousProfile exogenous;  // empty: zero exogenous input
  // Optional componentwise bounds every exogenous value must respect.
  std::optional<std::pair<Vector, Vector>> exogenous_bounds;
  std::vector<Monitor> monitors;
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;

  // Throws ConfigError describing the first inconsistency.
  void validate() const;
};

struct Trajectory {
  std::string scenario_id;
  std::vector<std::string> state_names;
  std::vector<std::string> input_names;
  std::vector<std::string> monitor_names;
  std::vector<double> monitor_thresholds;

  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<Vector> exogenous;
  std::vector<double> deltas;
  std::vector<std::vector<double>> monitor_values;  // [step][monitor]
  std::vector<std::string> qp_status;
  std::vector<std::vector<int>> active_sets;
  std::vector<bool> fallback;
  std::vector<std::vector<std::string>> flags;  // failing monitors per step

  bool aborted = false;
  std::string abort_reason;

  std::size_t size() const { return times.size(); }
  bool any_violation() const;
};

// Classical RK4 with u and w held over the step. Throws ConfigError when
// dt > dt_max and EvaluationError when the result is not finite.
Vector integrate_step(const ControlAffineSystem& sys, const Vector& x,
                      const Vector& u, const Vector& w, double dt,
                      double dt_max = 0.1);

// Fixed-step closed loop with zero-order hold. The controller is evaluated
// at every recorded state, so a zero horizon yields one sample. A domain
// exit of a barrier row ends the run: the offending state is recorded with a
// NaN input, flagged, and the trajectory is marked aborted.
Trajectory run(const Scenario& scenario);

struct RefineReport {
  int factor = 1;
  double max_state_deviation = 0.0;
  bool verdicts_unchanged = true;
  std::vector<std::string> changed_monitors;
  Trajectory coarse;
  Trajectory fine;
};

// Reruns the scenario with dt / factor and compares on the coarse grid.
RefineReport refine_check(const Scenario& scenario, int factor);

struct MonitorVerdict {
  std::string name;
  double min_value = 0.0;
  double min_time = 0.0;
  std::optional<double> first_violation;
  bool pass() const { return !first_violation.has_value(); }
};

std::vector<MonitorVerdict> monitor_verdicts(const Trajectory& traj);

// Empirical Lipschitz constant of x -> u* along a trajectory (advisory).
struct LipschitzProbe {
  double estimate = 0.0;
  int outliers = 0;  // ratio above 10x running median outside active-set changes
  int active_set_changes = 0;
};

LipschitzProbe lipschitz_probe(const Trajectory& traj);

// Sum of |u_{k+1} - u_k| over the run, per input component summed.
double total_variation(const std::vector<Vector>& inputs);

}  // namespace cbfqp
