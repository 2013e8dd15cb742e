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

#include "cbfqp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbfqp/errors.hpp"

namespace cbfqp {

ExogenousProfile::ExogenousProfile(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) return;
  if (segments_.front().t_start != 0.0) {
    throw ConstructionError("exogenous profile must start at t = 0");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (!(segments_[i].t_start > segments_[i - 1].t_start)) {
      throw ConstructionError("exogenous segment starts must increase");
    }
    if (segments_[i].value.size() != segments_[0].value.size()) {
      throw ConstructionError("exogenous segments have different widths");
    }
  }
}

ExogenousProfile ExogenousProfile::constant(const Vector& value) {
  return ExogenousProfile({{0.0, value}});
}

Vector ExogenousProfile::at(double t) const {
  if (segments_.empty()) return Vector();
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](double tt, const Segment& s) { return tt < s.t_start; });
  if (it == segments_.begin()) return segments_.front().value;
  return std::prev(it)->value;
}

ControlLaw control_law(ControllerSpec spec) {
  spec.validate();
  return [spec = std::move(spec)](const Vector& x, const Vector& w) {
    return evaluate(spec, x, w);
  };
}

void Scenario::validate() const {
  std::ostringstream os;
  if (!system) os << "no system";
  else if (!controller) os << "no controller";
  else if (x0.size() != system->state_dim()) os << "initial state has wrong size";
  else if (!x0.allFinite()) os << "initial state is not finite";
  else if (!(dt > 0.0)) os << "dt must be positive";
  else if (dt > dt_max) os << "dt exceeds dt_max = " << dt_max;
  else if (!(horizon >= 0.0) || !std::isfinite(horizon)) os << "horizon must be >= 0";
  // A zero horizon is a valid single-sample run.
  else if (horizon > 0.0 && horizon < dt) os << "horizon must be 0 or at least dt";
  else if (!exogenous.empty() &&
           exogenous.segments().front().value.size() != system->exogenous_dim())
    os << "exogenous profile width differs from the system's";
  else if (exogenous_bounds) {
    for (const auto& seg : exogenous.segments()) {
      const auto& [lo, hi] = *exogenous_bounds;
      if ((seg.value.array() < lo.array()).any() ||
          (seg.value.array() > hi.array()).any()) {
        os << "exogenous segment at t = " << seg.t_start
           << " is outside the declared bounds";
        break;
      }
    }
  }
  const std::string msg = os.str();
  if (!msg.empty()) throw ConfigError("scenario '" + id + "': " + msg);
}

bool Trajectory::any_violation() const {
  return std::any_of(flags.begin(), flags.end(),
                     [](const auto& f) { return !f.empty(); });
}

Vector integrate_step(const ControlAffineSystem& sys, const Vector& x,
                      const Vector& u, const Vector& w, double dt,
                      double dt_max) {
  if (dt > dt_max) {
    std::ostringstream os;
    os << "integrate_step: dt = " << dt << " exceeds dt_max = " << dt_max;
    throw ConfigError(os.str());
  }
  const Vector k1 = sys.rate(x, u, w);
  const Vector k2 = sys.rate(x + 0.5 * dt * k1, u, w);
  const Vector k3 = sys.rate(x + 0.5 * dt * k2, u, w);
  const Vector k4 = sys.rate(x + dt * k3, u, w);
  Vector next = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) {
    std::ostringstream os;
    os << "integrate_step: state blew up (dt = " << dt
       << ", |x| = " << x.norm() << ", |u| = " << u.norm() << ")";
    throw EvaluationError(os.str());
  }
  return next;
}

namespace {

void record_monitors(const Scenario& sc, Trajectory& traj, double t,
                     const Vector& x, const Vector& u, const Vector& w) {
  std::vector<double> values;
  std::vector<std::string> failed;
  values.reserve(sc.monitors.size());
  for (const Monitor& m : sc.monitors) {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      v = m.value(x, u, w);
    } catch (const DomainError&) {
    } catch (const EvaluationError&) {
    }
    values.push_back(v);
    if (!(v >= m.threshold)) failed.push_back(m.name);
  }
  traj.times.push_back(t);
  traj.states.push_back(x);
  traj.inputs.push_back(u);
  traj.exogenous.push_back(w);
  traj.monitor_values.push_back(std::move(values));
  traj.flags.push_back(std::move(failed));
}

}  // namespace

Trajectory run(const Scenario& sc) {
  sc.validate();
  const ControlAffineSystem& sys = *sc.system;
  Trajectory traj;
  traj.scenario_id = sc.id;
  traj.state_names = sc.state_names;
  traj.input_names = sc.input_names;
  for (const Monitor& m : sc.monitors) {
    traj.monitor_names.push_back(m.name);
    traj.monitor_thresholds.push_back(m.threshold);
  }
  if (traj.state_names.empty()) {
    for (int i = 0; i < sys.state_dim(); ++i)
      traj.state_names.push_back("x" + std::to_string(i + 1));
  }
  if (traj.input_names.empty()) {
    for (int i = 0; i < sys.input_dim(); ++i)
      traj.input_names.push_back("u" + std::to_string(i + 1));
  }

  const long steps = std::lround(sc.horizon / sc.dt);
  Vector x = sc.x0;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    const Vector w = sc.exogenous.empty() ? sys.zero_exogenous()
                                          : sc.exogenous.at(t);
    ControlOutput out;
    try {
      out = sc.controller(x, w);
    } catch (const DomainError& e) {
      const Vector nan_u = Vector::Constant(
          sys.input_dim(), std::numeric_limits<double>::quiet_NaN());
      record_monitors(sc, traj, t, x, nan_u, w);
      traj.flags.back().push_back("domain_exit");
      traj.deltas.push_back(std::numeric_limits<double>::quiet_NaN());
      traj.qp_status.push_back("aborted");
      traj.active_sets.emplace_back();
      traj.fallback.push_back(false);
      traj.aborted = true;
      std::ostringstream os;
      os << "t = " << t << ": " << e.what();
      traj.abort_reason = os.str();
      break;
    }
    record_monitors(sc, traj, t, x, out.u, w);
    traj.deltas.push_back(out.delta);
    traj.qp_status.push_back(to_string(out.qp.status));
    traj.active_sets.push_back(out.qp.active_set);
    traj.fallback.push_back(out.fallback_applied);
    if (out.fallback_applied) traj.flags.back().push_back("fallback");
    if (k == steps) break;
    x = integrate_step(sys, x, out.u, w, sc.dt, sc.dt_max);
  }
  return traj;
}

std::vector<MonitorVerdict> monitor_verdicts(const Trajectory& traj) {
  std::vector<MonitorVerdict> out;
  for (std::size_t m = 0; m < traj.monitor_names.size(); ++m) {
    MonitorVerdict v;
    v.name = traj.monitor_names[m];
    v.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const double val = traj.monitor_values[k][m];
      // A NaN sample (failed evaluation) sticks as the minimum.
      if (!std::isnan(v.min_value) && (std::isnan(val) || val < v.min_value)) {
        v.min_value = val;
        v.min_time = traj.times[k];
      }
      if (!v.first_violation && !(val >= traj.monitor_thresholds[m])) {
        v.first_violation = traj.times[k];
      }
    }
    out.push_back(v);
  }
  return out;
}

RefineReport refine_check(const Scenario& scenario, int factor) {
  if (factor < 1) throw ConfigError("refine factor must be >= 1");
  RefineReport rep;
  rep.factor = factor;
  rep.coarse = run(scenario);
  Scenario fine = scenario;
  fine.dt = scenario.dt / factor;
  rep.fine = run(fine);

  const std::size_t n = std::min(rep.coarse.size(),
                                 (rep.fine.size() + factor - 1) / factor);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = k * static_cast<std::size_t>(factor);
    if (j >= rep.fine.size()) break;
    rep.max_state_deviation =
        std::max(rep.max_state_deviation,
                 (rep.coarse.states[k] - rep.fine.states[j]).lpNorm<Eigen::Infinity>());
  }
  const auto a = monitor_verdicts(rep.coarse);
  const auto b = monitor_verdicts(rep.fine);
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m].pass() != b[m].pass()) rep.changed_monitors.push_back(a[m].name);
  }
  if (rep.coarse.aborted != rep.fine.aborted) {
    rep.changed_monitors.push_back("domain_exit");
  }
  rep.verdicts_unchanged = rep.changed_monitors.empty();
  return rep;
}

LipschitzProbe lipschitz_probe(const Trajectory& traj) {
  LipschitzProbe probe;
  std::vector<double> history;
  for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
    const double dx = (traj.states[k + 1] - traj.states[k]).norm();
    const double du = (traj.inputs[k + 1] - traj.inputs[k]).norm();
    if (!(dx > 0.0) || !std::isfinite(du)) continue;
    const double ratio = du / dx;
    const bool switched = traj.active_sets[k] != traj.active_sets[k + 1];
    if (switched) {
      ++probe.active_set_changes;
    } else {
      probe.estimate = std::max(probe.estimate, ratio);
      if (history.size() >= 10) {
        std::vector<double> tmp = history;
        auto mid = tmp.begin() + static_cast<long>(tmp.size() / 2);
        std::nth_element(tmp.begin(), mid, tmp.end());
        if (ratio > 10.0 * *mid && ratio > 1e-9) ++probe.outliers;
      }
      history.push_back(ratio);
      if (history.size() > 200) history.erase(history.begin());
    }
  }
  return probe;
}

double total_variation(const std::vector<Vector>& inputs) {
  double tv = 0.0;
  for (std::size_t k = 0; k + 1 < inputs.size(); ++k) {
    tv += (inputs[k + 1] - inputs[k]).lpNorm<1>();
  }
  return tv;
}

}  // namespace cbfqp
