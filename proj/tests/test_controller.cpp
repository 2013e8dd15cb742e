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

#include <cmath>
#include <random>

#include "cbfqp/acc.hpp"
#include "cbfqp/controller.hpp"
#include "cbfqp/errors.hpp"
#include "cbfqp/lk.hpp"

using namespace cbfqp;

namespace {

Vector acc_state(double v_f, double v_l, double D) {
  Vector x(3);
  x << v_f, v_l, D;
  return x;
}

ControllerSpec acc_basic() {
  return acc::acc_qp_spec(acc::AccParams{}, acc::AccLevel::kBasic,
                          acc::MarginVariant::kOptimal, acc::BarrierKind::kLog);
}

// x' = drift + gain u on the real line.
std::shared_ptr<const ControlAffineSystem> scalar_system(double drift,
                                                         double gain) {
  return std::make_shared<const ControlAffineSystem>(
      "scalar", 1, 1, 0,
      [drift](const Vector& x, const Vector&) {
        return Vector::Constant(1, drift * x[0]);
      },
      [gain](const Vector&) { return Matrix::Constant(1, 1, gain); });
}

ScalarField square_field() {
  return ScalarField::closed_form(
      "x^2", [](const Vector& x) { return x[0] * x[0]; },
      [](const Vector& x) { return Vector::Constant(1, 2 * x[0]); });
}

ScalarField identity_field() {
  return ScalarField::closed_form(
      "x", [](const Vector& x) { return x[0]; },
      [](const Vector&) { return Vector::Constant(1, 1.0); });
}

}  // namespace

TEST(BuildQp, AccClfRowAndCost) {
  const acc::AccParams p;
  const ControllerSpec spec = acc_basic();
  const Vector x = acc_state(18, 10, 150);
  const QpProblem qp = build_qp(spec, x, Vector::Zero(1));
  ASSERT_EQ(qp.num_rows(), 2);

  const double lfv = -2.0 * (18 - 22) * acc::drag(p, 18) / p.M;
  EXPECT_NEAR(qp.A()(0, 0), 2.0 * (18 - 22) / p.M, 1e-15);
  EXPECT_EQ(qp.A()(0, 1), -1.0);
  EXPECT_NEAR(qp.b()[0], -lfv - 160.0, 1e-10);

  EXPECT_NEAR(qp.H()(0, 0), 2.0 / (1650.0 * 1650.0), 1e-20);
  EXPECT_EQ(qp.H()(1, 1), 200.0);
  EXPECT_EQ(qp.H()(0, 1), 0.0);
  EXPECT_NEAR(qp.F()[0], -2.0 * acc::drag(p, 18) / (p.M * p.M), 1e-18);
  EXPECT_EQ(qp.F()[1], 0.0);
}

TEST(BuildQp, ReciprocalRowRightHandSide) {
  const acc::AccParams p;
  const ControllerSpec spec = acc_basic();
  const Vector x = acc_state(20, 15, 45);
  const Vector w = Vector::Constant(1, -0.4);
  const QpProblem qp = build_qp(spec, x, w);
  const auto& B = std::get<ReciprocalBarrier>(spec.cbf_rows.front());
  const auto lie = lie_derivatives(*spec.system, B.field(), x, w);
  EXPECT_EQ(qp.A()(1, 0), lie.lg[0]);
  EXPECT_EQ(qp.A()(1, 1), 0.0);
  EXPECT_NEAR(qp.b()[1], -lie.lf + p.gamma / B.value(x), 1e-12);
}

TEST(BuildQp, LkNominalRows) {
  const lk::LkParams p;
  const lk::LqrGain gain = lk::solve_lqr_gain(p);
  const ControllerSpec spec = lk::lk_qp_spec(p, gain);
  Vector x(4);
  x << 0.1, -0.2, 0.01, 0.03;
  const double r_d = 0.02;
  const QpProblem qp = build_qp(spec, x, Vector::Constant(1, r_d));
  const double nominal = -gain.K.dot(x - lk::LqrGain::feedforward(r_d));
  ASSERT_EQ(qp.num_rows(), 5);
  EXPECT_EQ(qp.A()(0, 0), 1.0);
  EXPECT_EQ(qp.A()(0, 1), -1.0);
  EXPECT_NEAR(qp.b()[0], nominal, 1e-15);
  EXPECT_EQ(qp.A()(1, 0), -1.0);
  EXPECT_EQ(qp.A()(1, 1), 1.0);
  EXPECT_NEAR(qp.b()[1], -nominal, 1e-15);
  // delta only in the tracking rows
  for (int i = 2; i < qp.num_rows(); ++i) EXPECT_EQ(qp.A()(i, 1), 0.0);
}

TEST(BuildQp, OutsideInteriorThrows) {
  const ControllerSpec spec = acc_basic();
  EXPECT_THROW(build_qp(spec, acc_state(20, 10, 30), Vector::Zero(1)),
               BoundaryViolation);
}

TEST(Evaluate, DeltaVanishesWhenClfIsSatisfiable) {
  const ControllerSpec spec = acc_basic();
  for (double vf : {22.0, 22.0 + 1e-4, 22.0 - 1e-4}) {
    const ControlOutput out = evaluate(spec, acc_state(vf, 25, 200), Vector::Zero(1));
    ASSERT_FALSE(out.fallback_applied);
    EXPECT_LE(std::abs(out.delta), 1e-6) << vf;
  }
}

TEST(Evaluate, DeltaEqualsClfDeficit) {
  const acc::AccParams p;
  const ControllerSpec spec = acc_basic();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<> v(5, 35), extra(0.2, 100);
  for (int i = 0; i < 200; ++i) {
    const double vf = v(rng);
    const Vector x = acc_state(vf, v(rng), 1.8 * vf + extra(rng));
    const Vector w = Vector::Constant(1, 0.5);
    const ControlOutput out = evaluate(spec, x, w);
    ASSERT_FALSE(out.fallback_applied);
    const auto lie = lie_derivatives(*spec.system, spec.clf->V, x, w);
    const double lhs = lie.lf + lie.lg[0] * out.u[0] + p.c * spec.clf->V.value(x);
    const double scale = 1.0 + std::abs(lie.lf) + p.c * spec.clf->V.value(x);
    EXPECT_NEAR(out.delta, std::max(lhs, 0.0), 1e-8 * scale);
    // Hard barrier row holds.
    const QpProblem qp = build_qp(spec, x, w);
    EXPECT_LE(qp.A().row(1).dot(out.qp.z) - qp.b()[1],
              1e-8 * (1 + std::abs(qp.b()[1])));
  }
}

TEST(Evaluate, ClfYieldsToBarrier) {
  // Slower than v_d and close to the headway boundary: the barrier row binds.
  const ControllerSpec spec = acc_basic();
  const Vector x = acc_state(18, 10, 1.8 * 18 + 0.5);
  const ControlOutput out = evaluate(spec, x, Vector::Zero(1));
  ASSERT_FALSE(out.fallback_applied);
  EXPECT_TRUE(out.closed_form);
  EXPECT_GT(out.delta, 0.0);
  const QpProblem qp = build_qp(spec, x, Vector::Zero(1));
  EXPECT_NEAR(qp.A().row(1).dot(out.qp.z), qp.b()[1],
              1e-6 * (1 + std::abs(qp.b()[1])));
  EXPECT_EQ(out.qp.active_set, (std::vector<int>{0, 1}));
}

TEST(Evaluate, ScaledCostGivesSameInput) {
  ControllerSpec spec = acc_basic();
  ControllerSpec scaled = spec;
  const auto H = spec.cost_H;
  const auto F = spec.cost_F;
  scaled.cost_H = [H](const Vector& x, const Vector& w) { return Matrix(7.3 * H(x, w)); };
  scaled.cost_F = [F](const Vector& x, const Vector& w) { return Vector(7.3 * F(x, w)); };
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<> v(5, 35), extra(0.2, 100);
  for (int i = 0; i < 50; ++i) {
    const double vf = v(rng);
    const Vector x = acc_state(vf, v(rng), 1.8 * vf + extra(rng));
    const Vector w = Vector::Zero(1);
    const double u1 = evaluate(spec, x, w).u[0];
    const double u2 = evaluate(scaled, x, w).u[0];
    EXPECT_NEAR(u1, u2, 1e-9 * (1 + std::abs(u1)));
  }
}

TEST(Evaluate, FallbackOnInfeasibleProgram) {
  // x' = -10 + u with h = x: the zeroing row needs u >= 10 - x while the
  // box allows |u| <= 1.
  ControllerSpec spec;
  spec.system = std::make_shared<const ControlAffineSystem>(
      "drifting", 1, 1, 0,
      [](const Vector&, const Vector&) { return Vector::Constant(1, -10.0); },
      [](const Vector&) { return Matrix::Constant(1, 1, 1.0); });
  spec.clf = EsClf{square_field(), 1.0, std::nullopt, std::nullopt};
  spec.cbf_rows.push_back(
      make_zeroing(identity_field(), ClassKFunction::linear(1.0)));
  const InputPolytope box =
      InputPolytope::box(Vector::Constant(1, -1), Vector::Constant(1, 1));
  spec.input_bounds = [box](const Vector&, const Vector&) { return box; };
  spec.cost_H = [](const Vector&, const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
  spec.cost_F = [](const Vector&, const Vector&) { return Vector(Vector::Zero(2)); };

  const ControlOutput zero = evaluate(spec, Vector::Constant(1, 1.0), Vector());
  EXPECT_TRUE(zero.fallback_applied);
  EXPECT_EQ(zero.qp.status, QpStatus::kInfeasible);
  EXPECT_EQ(zero.u[0], 0.0);

  spec.fallback = [](const Vector&, const Vector&) { return Vector::Constant(1, 1.0); };
  const ControlOutput sat = evaluate(spec, Vector::Constant(1, 1.0), Vector());
  EXPECT_TRUE(sat.fallback_applied);
  EXPECT_EQ(sat.u[0], 1.0);
  EXPECT_NE(sat.diagnostics.find("fallback"), std::string::npos);
}

TEST(Evaluate, SpecValidation) {
  ControllerSpec spec = acc_basic();
  spec.nominal_feedback = [](const Vector&, const Vector&) { return Vector::Zero(1); };
  EXPECT_THROW(spec.validate(), ConstructionError);
  ControllerSpec none = acc_basic();
  none.cbf_rows.clear();
  EXPECT_THROW(none.validate(), ConstructionError);
}

TEST(MinNormClf, Examples) {
  // V = x^2 on x' = a x + b u: analytic min-norm element of K_clf.
  const double a = 0.7, b = 2.0, c3 = 1.5;
  const auto sys = scalar_system(a, b);
  const EsClf clf{square_field(), c3, std::nullopt, std::nullopt};
  for (double x0 : {-2.0, -0.3, 0.4, 1.7}) {
    const Vector x = Vector::Constant(1, x0);
    const double lf = 2 * x0 * a * x0, lg = 2 * x0 * b, v = x0 * x0;
    const double expected = lf + c3 * v > 0 ? -(lf + c3 * v) / lg : 0.0;
    EXPECT_NEAR(min_norm_clf(clf, *sys, std::nullopt, x)[0], expected, 1e-12);
  }

  // Row already slack: L_f V = -c3 V exactly.
  const auto stable = scalar_system(-0.75, 1.0);
  EXPECT_EQ(min_norm_clf(clf, *stable, std::nullopt, Vector::Constant(1, 1.0))[0], 0.0);

  // L_f V = 1, L_g V = 2, c3 V = 0 at x = 0 for V = x with x' = 1 + 2u.
  const auto affine = std::make_shared<const ControlAffineSystem>(
      "affine", 1, 1, 0,
      [](const Vector&, const Vector&) { return Vector::Constant(1, 1.0); },
      [](const Vector&) { return Matrix::Constant(1, 1, 2.0); });
  const EsClf lin{identity_field(), 1.0, std::nullopt, std::nullopt};
  const Vector origin = Vector::Zero(1);
  EXPECT_NEAR(min_norm_clf(lin, *affine, std::nullopt, origin)[0], -0.5, 1e-15);

  // Needs u <= -0.5 but the bound says u >= -0.3.
  const InputPolytope U =
      InputPolytope::box(Vector::Constant(1, -0.3), Vector::Constant(1, 5.0));
  EXPECT_THROW(min_norm_clf(lin, *affine, U, origin), InfeasibleError);
}
