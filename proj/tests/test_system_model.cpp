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
#include <limits>
#include <random>

#include "cbfqp/acc.hpp"
#include "cbfqp/errors.hpp"
#include "cbfqp/lk.hpp"
#include "cbfqp/system_model.hpp"

using namespace cbfqp;

namespace {

// x' = (x2, -sin x1) + (0, 1) u, w unused.
ControlAffineSystem pendulum(std::optional<Box> box = std::nullopt) {
  return ControlAffineSystem(
      "pendulum", 2, 1, 0,
      [](const Vector& x, const Vector&) {
        Vector f(2);
        f << x[1], -std::sin(x[0]);
        return f;
      },
      [](const Vector&) {
        Matrix g = Matrix::Zero(2, 1);
        g(1, 0) = 1.0;
        return g;
      },
      std::move(box));
}

ScalarField energy() {
  return ScalarField::closed_form(
      "energy",
      [](const Vector& x) { return 0.5 * x[1] * x[1] + 1.0 - std::cos(x[0]); },
      [](const Vector& x) {
        Vector g(2);
        g << std::sin(x[0]), x[1];
        return g;
      });
}

}  // namespace

TEST(LieDerivatives, HeadwayOnAcc) {
  const acc::AccParams p;
  const auto sys = acc::acc_dynamics(p);
  const ScalarField h = acc::headway_field(p);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<> d(0, 40);
  for (int i = 0; i < 20; ++i) {
    Vector x(3);
    x << d(rng), d(rng), 5 * d(rng);
    const auto lie = lie_derivatives(*sys, h, x, Vector::Constant(1, 0.3));
    EXPECT_NEAR(lie.lg[0], -1.8 / 1650.0, 1e-15);
    EXPECT_NEAR(lie.lg[0], -1.0909e-3, 1e-7);
  }
}

TEST(LieDerivatives, ConstantFieldIsZero) {
  const auto sys = pendulum();
  const ScalarField c = ScalarField::closed_form(
      "c", [](const Vector&) { return 4.0; },
      [](const Vector&) { return Vector::Zero(2); });
  const auto lie = lie_derivatives(sys, c, Vector::Constant(2, 0.4), Vector());
  EXPECT_EQ(lie.lf, 0.0);
  EXPECT_EQ(lie.lg[0], 0.0);
}

TEST(LieDerivatives, LateralOffsetOnLk) {
  const lk::LkParams p;
  const auto sys = lk::lk_dynamics(p);
  const ScalarField y_closed = ScalarField::closed_form(
      "y", [](const Vector& x) { return x[0]; },
      [](const Vector&) {
        Vector g = Vector::Zero(4);
        g[0] = 1.0;
        return g;
      });
  const ScalarField y_fd =
      ScalarField::finite_difference("y", [](const Vector& x) { return x[0]; });
  Vector x(4);
  x << 0.2, -0.3, 0.01, 0.05;
  const Vector w = Vector::Constant(1, 0.02);
  for (const auto* field : {&y_closed, &y_fd}) {
    const auto lie = lie_derivatives(*sys, *field, x, w);
    EXPECT_NEAR(lie.lf, -0.3 + 27.7 * 0.01, 1e-8);
    EXPECT_NEAR(lie.lg[0], 0.0, 1e-10);
  }
}

TEST(LieDerivatives, LinearInTheField) {
  const auto sys = pendulum();
  const ScalarField h1 = energy();
  const ScalarField h2 = ScalarField::finite_difference(
      "x1x2", [](const Vector& x) { return x[0] * x[1]; });
  const ScalarField combo = ScalarField::linear_combination(2.5, h1, -0.7, h2);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<> d(-2, 2);
  for (int i = 0; i < 50; ++i) {
    const Vector x = Vector::NullaryExpr(2, [&] { return d(rng); });
    const auto a = lie_derivatives(sys, h1, x, Vector());
    const auto b = lie_derivatives(sys, h2, x, Vector());
    const auto c = lie_derivatives(sys, combo, x, Vector());
    EXPECT_NEAR(c.lf, 2.5 * a.lf - 0.7 * b.lf, 1e-8);
    EXPECT_NEAR(c.lg[0], 2.5 * a.lg[0] - 0.7 * b.lg[0], 1e-8);
  }
}

TEST(LieDerivatives, NonFiniteGradientNamesTheField) {
  const auto sys = pendulum();
  const ScalarField bad = ScalarField::closed_form(
      "broken", [](const Vector&) { return 0.0; },
      [](const Vector&) {
        return Vector::Constant(2, std::numeric_limits<double>::quiet_NaN());
      });
  try {
    lie_derivatives(sys, bad, Vector::Zero(2), Vector());
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(ScalarFieldTest, FiniteDifferenceMatchesClosedForm) {
  const ScalarField h = energy();
  const ScalarField fd = ScalarField::finite_difference(
      "energy_fd", [&h](const Vector& x) { return h.value(x); });
  EXPECT_EQ(fd.mode(), GradientMode::kFiniteDifference);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<> d(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const Vector x = Vector::NullaryExpr(2, [&] { return d(rng); });
    const Vector g = h.gradient(x);
    EXPECT_LE((fd.gradient(x) - g).norm(), 1e-5 * (1 + g.norm()));
  }
}

TEST(SystemModel, DimensionAndBoxChecks) {
  Box box{Vector::Constant(2, -1), Vector::Constant(2, 1)};
  const auto sys = pendulum(box);
  EXPECT_NO_THROW(sys.drift(Vector::Constant(2, 0.5), Vector()));
  EXPECT_THROW(sys.drift(Vector::Constant(2, 1.5), Vector()), DomainError);
  EXPECT_THROW(sys.drift(Vector::Zero(3), Vector()), DomainError);
  EXPECT_THROW(sys.rate(Vector::Zero(2), Vector::Zero(2), Vector()),
               DomainError);
}

TEST(InputPolytopeTest, ContainsAndEmptySet) {
  const InputPolytope box =
      InputPolytope::box(Vector::Constant(1, -2), Vector::Constant(1, 3));
  EXPECT_TRUE(box.contains(Vector::Constant(1, 3)));
  EXPECT_FALSE(box.contains(Vector::Constant(1, 3.1)));
  EXPECT_EQ(box.rows(), 2);

  Matrix A(2, 1);
  A << 1, -1;
  Vector b(2);
  b << -1, -1;  // u <= -1 and u >= 1
  EXPECT_THROW(InputPolytope(A, b), ConstructionError);
}
