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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbfqp/acc.hpp"
#include "cbfqp/errors.hpp"
#include "cbfqp/scenario_io.hpp"
#include "cbfqp/sim.hpp"
#include "cbfqp/verification.hpp"

using namespace cbfqp;

namespace {

std::shared_ptr<const ControlAffineSystem> linear_scalar(double a) {
  return std::make_shared<const ControlAffineSystem>(
      "linear", 1, 1, 0,
      [a](const Vector& x, const Vector&) { return Vector(a * x); },
      [](const Vector&) { return Matrix::Constant(1, 1, 1.0); });
}

// x1' = x2, x2' = -sin x1 - 0.3 x2 + u
std::shared_ptr<const ControlAffineSystem> damped_pendulum() {
  return std::make_shared<const ControlAffineSystem>(
      "pendulum", 2, 1, 0,
      [](const Vector& x, const Vector&) {
        Vector f(2);
        f << x[1], -std::sin(x[0]) - 0.3 * x[1];
        return f;
      },
      [](const Vector&) {
        Matrix g = Matrix::Zero(2, 1);
        g(1, 0) = 1.0;
        return g;
      });
}

ControlLaw zero_control() {
  return [](const Vector&, const Vector&) {
    ControlOutput out;
    out.u = Vector::Zero(1);
    out.qp.status = QpStatus::kOptimal;
    return out;
  };
}

Scenario open_loop(std::shared_ptr<const ControlAffineSystem> sys, Vector x0,
                   double horizon, double dt) {
  Scenario sc;
  sc.id = "open_loop";
  sc.system = std::move(sys);
  sc.controller = zero_control();
  sc.x0 = std::move(x0);
  sc.horizon = horizon;
  sc.dt = dt;
  return sc;
}

Vector integrate(const ControlAffineSystem& sys, Vector x, double T, double dt) {
  const long n = std::lround(T / dt);
  for (long k = 0; k < n; ++k) {
    x = integrate_step(sys, x, Vector::Zero(1), Vector(), dt);
  }
  return x;
}

io::BuiltScenario fixture(const std::string& name) {
  return io::build_scenario(io::ScenarioFile::load(
      std::string(CBFQP_TEST_FIXTURES) + "/" + name + ".scenario"));
}

}  // namespace

TEST(Rk4, SingleSteps) {
  const auto still = linear_scalar(0.0);
  EXPECT_EQ(integrate_step(*still, Vector::Constant(1, 3.0), Vector::Zero(1),
                           Vector(), 0.01)[0],
            3.0);
  const auto decay = linear_scalar(-1.0);
  EXPECT_NEAR(integrate_step(*decay, Vector::Constant(1, 1.0), Vector::Zero(1),
                             Vector(), 0.001)[0],
              std::exp(-0.001), 1e-12);
  EXPECT_THROW(integrate_step(*decay, Vector::Constant(1, 1.0), Vector::Zero(1),
                              Vector(), 0.2, 0.1),
               ConfigError);
}

TEST(Rk4, DragCancellingInputHoldsAccSpeed) {
  const acc::AccParams p;
  const auto sys = acc::acc_dynamics(p);
  Vector x(3);
  x << 17.3, 12.0, 60.0;
  const Vector u = Vector::Constant(1, acc::drag(p, x[0]));
  const Vector next = integrate_step(*sys, x, u, Vector::Constant(1, 0.4), 1e-3);
  EXPECT_NEAR(next[0], x[0], 1e-9);
}

TEST(Rk4, FourthOrderConvergence) {
  const auto sys = damped_pendulum();
  Vector x0(2);
  x0 << 1.2, 0.0;
  const Vector ref = integrate(*sys, x0, 2.0, 1e-4);
  std::vector<double> err;
  for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
    err.push_back((integrate(*sys, x0, 2.0, dt) - ref).norm());
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    EXPECT_GE(order, 3.8) << i;
    EXPECT_LE(order, 4.2) << i;
  }
}

TEST(Run, ZeroHorizonGivesInitialStateOnly) {
  const Scenario sc = open_loop(linear_scalar(-1.0), Vector::Constant(1, 1.0), 0.0, 0.01);
  const Trajectory t = run(sc);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.states[0][0], 1.0);
  EXPECT_EQ(t.inputs.size(), 1u);
  EXPECT_EQ(t.deltas.size(), 1u);
}

TEST(Run, SeriesShareLengthAndTimesAreMultiplesOfDt) {
  const Scenario sc = open_loop(linear_scalar(-1.0), Vector::Constant(1, 1.0), 1.0, 0.01);
  const Trajectory t = run(sc);
  ASSERT_EQ(t.size(), 101u);
  for (std::size_t k = 0; k < t.size(); ++k) {
    EXPECT_EQ(t.times[k], static_cast<double>(k) * 0.01);
  }
  EXPECT_EQ(t.states.size(), t.size());
  EXPECT_EQ(t.inputs.size(), t.size());
  EXPECT_EQ(t.exogenous.size(), t.size());
  EXPECT_EQ(t.monitor_values.size(), t.size());
  EXPECT_EQ(t.qp_status.size(), t.size());
  EXPECT_EQ(t.active_sets.size(), t.size());
  EXPECT_EQ(t.flags.size(), t.size());
}

TEST(Run, DeterministicOnShippedScenario) {
  const Scenario sc = fixture("acc_force_optimal").scenario;
  const Trajectory a = run(sc);
  const Trajectory b = run(sc);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    ASSERT_EQ(a.states[k], b.states[k]);
    ASSERT_EQ(a.inputs[k], b.inputs[k]);
    ASSERT_EQ(a.deltas[k], b.deltas[k]);
  }
}

TEST(Run, MonitorFlagsMatchThresholds) {
  Scenario sc = open_loop(linear_scalar(0.0), Vector::Constant(1, 1.0), 1.0, 0.01);
  sc.system = std::make_shared<const ControlAffineSystem>(
      "ramp", 1, 1, 0,
      [](const Vector&, const Vector&) { return Vector::Constant(1, -1.0); },
      [](const Vector&) { return Matrix::Constant(1, 1, 1.0); });
  // 0.495 sits between samples, so roundoff in x cannot move the crossing.
  sc.monitors.push_back(
      {"above_half", [](const Vector& x, const Vector&, const Vector&) { return x[0]; }, 0.495});
  sc.monitors.push_back({"nan_late",
                         [](const Vector& x, const Vector&, const Vector&) {
                           return x[0] < 0.2 ? std::numeric_limits<double>::quiet_NaN()
                                             : 1.0;
                         },
                         0.0});
  const Trajectory t = run(sc);
  for (std::size_t k = 0; k < t.size(); ++k) {
    const bool below = !(t.monitor_values[k][0] >= 0.495);
    const bool nan = std::isnan(t.monitor_values[k][1]);
    const auto& f = t.flags[k];
    EXPECT_EQ(std::count(f.begin(), f.end(), "above_half"), below ? 1 : 0) << k;
    EXPECT_EQ(std::count(f.begin(), f.end(), "nan_late"), nan ? 1 : 0) << k;
  }
  const auto verdicts = monitor_verdicts(t);
  ASSERT_TRUE(verdicts[0].first_violation.has_value());
  EXPECT_NEAR(*verdicts[0].first_violation, 0.51, 1e-9);
  EXPECT_TRUE(std::isnan(verdicts[1].min_value));
  EXPECT_FALSE(verdicts[1].pass());
  EXPECT_TRUE(t.any_violation());
}

TEST(Run, DomainExitAbortsWithNanInput) {
  // x' = -1 with a reciprocal barrier on x whose row the box cannot meet.
  ControllerSpec spec;
  spec.system = std::make_shared<const ControlAffineSystem>(
      "sink", 1, 1, 0,
      [](const Vector&, const Vector&) { return Vector::Constant(1, -1.0); },
      [](const Vector&) { return Matrix::Constant(1, 1, 1.0); });
  const ScalarField h = ScalarField::closed_form(
      "x", [](const Vector& x) { return x[0]; },
      [](const Vector&) { return Vector::Constant(1, 1.0); });
  spec.nominal_feedback = [](const Vector&, const Vector&) { return Vector::Zero(1); };
  spec.cbf_rows.push_back(make_reciprocal(h, ReciprocalForm::kInverse, 1.0));
  const InputPolytope box =
      InputPolytope::box(Vector::Constant(1, -0.1), Vector::Constant(1, 0.1));
  spec.input_bounds = [box](const Vector&, const Vector&) { return box; };
  spec.cost_H = [](const Vector&, const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
  spec.cost_F = [](const Vector&, const Vector&) { return Vector(Vector::Zero(2)); };
  spec.fallback = [](const Vector&, const Vector&) { return Vector::Constant(1, 0.1); };

  Scenario sc;
  sc.id = "sink";
  sc.system = spec.system;
  sc.controller = control_law(spec);
  sc.x0 = Vector::Constant(1, 0.5);
  sc.horizon = 2.0;
  sc.dt = 0.01;
  const Trajectory t = run(sc);
  ASSERT_TRUE(t.aborted);
  EXPECT_LT(t.times.back(), 2.0);
  EXPECT_TRUE(std::isnan(t.inputs.back()[0]));
  const auto& f = t.flags.back();
  EXPECT_NE(std::find(f.begin(), f.end(), "domain_exit"), f.end());
  EXPECT_FALSE(t.abort_reason.empty());
  // Earlier steps used the saturated fallback.
  EXPECT_TRUE(t.fallback.front());
}

TEST(Scenario, ValidationErrors) {
  Scenario sc = open_loop(linear_scalar(-1.0), Vector::Constant(1, 1.0), 1.0, 0.01);
  sc.dt = 0.0;
  EXPECT_THROW(run(sc), ConfigError);
  sc.dt = 0.05;
  sc.horizon = 0.01;
  EXPECT_THROW(run(sc), ConfigError);

  Scenario acc = fixture("acc_basic").scenario;
  acc.exogenous = ExogenousProfile({{0.0, Vector::Constant(1, 0.0)},
                                    {10.0, Vector::Constant(1, -5.0)}});
  EXPECT_THROW(acc.validate(), ConfigError);

  EXPECT_THROW(ExogenousProfile({{1.0, Vector::Constant(1, 0.0)}}), ConstructionError);
  EXPECT_THROW(ExogenousProfile({{0.0, Vector::Constant(1, 0.0)},
                                 {0.0, Vector::Constant(1, 1.0)}}),
               ConstructionError);
  const ExogenousProfile prof({{0.0, Vector::Constant(1, 1.0)},
                               {2.0, Vector::Constant(1, 3.0)}});
  EXPECT_EQ(prof.at(1.999)[0], 1.0);
  EXPECT_EQ(prof.at(2.0)[0], 3.0);
}

TEST(Refine, FactorOneIsIdentical) {
  const Scenario sc = fixture("acc_basic").scenario;
  const RefineReport r = refine_check(sc, 1);
  EXPECT_EQ(r.max_state_deviation, 0.0);
  EXPECT_TRUE(r.verdicts_unchanged);
}

TEST(Refine, RichardsonRatioOnLinearSystem) {
  const auto sys = linear_scalar(-1.5);
  const Scenario coarse = open_loop(sys, Vector::Constant(1, 1.0), 2.0, 0.05);
  Scenario finer = coarse;
  finer.dt = 0.025;
  const double d1 = refine_check(coarse, 2).max_state_deviation;
  const double d2 = refine_check(finer, 2).max_state_deviation;
  EXPECT_NEAR(d1 / d2, 16.0, 1.0);
}

TEST(Refine, AccVerdictsStable) {
  const RefineReport r = refine_check(fixture("acc_basic").scenario, 2);
  EXPECT_TRUE(r.verdicts_unchanged);
  EXPECT_TRUE(r.changed_monitors.empty());
}

TEST(ClosedLoop, ReciprocalBarrierGrowthBound) {
  // With the row met at every sample, B(x(t)) stays below the comparison
  // solution of y' = gamma / y started at B(x0).
  const acc::AccParams p;
  const Trajectory t = run(fixture("acc_force_optimal").scenario);
  ASSERT_FALSE(t.aborted);
  const auto B = std::get<ReciprocalBarrier>(acc::force_barrier(
      p, acc::MarginVariant::kOptimal, acc::BarrierKind::kLog));
  std::vector<double> times;
  for (std::size_t k = 0; k < t.size(); k += 100) times.push_back(t.times[k]);
  const auto bound = comparison_ode_trajectory(ClassKFunction::linear(p.gamma),
                                               B.value(t.states[0]), times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    EXPECT_LE(B.value(t.states[i * 100]), bound[i] * (1 + 1e-6)) << times[i];
  }
}

TEST(ClosedLoop, ClfDecayUpToRelaxation) {
  // The CLF row gives V' <= -c V + delta at each sample. With delta held over
  // a step the comparison solution obeys
  //   W_{k+1} = e^{-c dt} W_k + delta_k (1 - e^{-c dt}) / c,  W_0 = V(x0).
  // The row only holds at samples, so each step takes the larger of its two
  // endpoint relaxations. The CLF row stays active on this run, so delta
  // never vanishes and the bound carries the relaxation term throughout.
  const acc::AccParams p;
  const Trajectory t = run(fixture("acc_basic").scenario);
  ASSERT_FALSE(t.aborted);
  const ScalarField V = acc::acc_clf(p).V;
  double W = V.value(t.states[0]);
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const double dt = t.times[k + 1] - t.times[k];
    const double decay = std::exp(-p.c * dt);
    const double d = std::max({t.deltas[k], t.deltas[k + 1], 0.0});
    W = decay * W + d * (1.0 - decay) / p.c;
    const double v = V.value(t.states[k + 1]);
    worst = std::max(worst, v / W);
    EXPECT_LE(v, W * (1.0 + 1e-4) + 1e-12) << t.times[k + 1];
  }
  RecordProperty("worst_ratio", std::to_string(worst));
}

TEST(Lipschitz, ProbeOnShippedRun) {
  const Trajectory t = run(fixture("acc_basic").scenario);
  const LipschitzProbe probe = lipschitz_probe(t);
  EXPECT_TRUE(std::isfinite(probe.estimate));
  EXPECT_GT(probe.estimate, 0.0);
}

TEST(TotalVariation, SumsAbsoluteIncrements) {
  std::vector<Vector> u;
  for (double v : {0.0, 2.0, -1.0, -1.0, 3.0}) u.push_back(Vector::Constant(1, v));
  EXPECT_EQ(total_variation(u), 2.0 + 3.0 + 0.0 + 4.0);
  EXPECT_EQ(total_variation({}), 0.0);
}
