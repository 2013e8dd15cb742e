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

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cbfqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Axis-aligned box used to declare where a model may be evaluated.
struct Box {
  Vector lower;
  Vector upper;

  bool contains(const Vector& x) const;
};

// Control-affine dynamics x' = f(x, w) + g(x) u with measured exogenous
// signals w (lead-car acceleration, road yaw rate, ...).
class ControlAffineSystem {
 public:
  using Drift = std::function<Vector(const Vector& x, const Vector& w)>;
  using InputMap = std::function<Matrix(const Vector& x)>;

  ControlAffineSystem(std::string name, int state_dim, int input_dim,
                      int exogenous_dim, Drift drift, InputMap input_map,
                      std::optional<Box> operating_box = std::nullopt);

  const std::string& name() const { return name_; }
  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  int exogenous_dim() const { return exogenous_dim_; }
  const std::optional<Box>& operating_box() const { return box_; }

  // All evaluations check dimensions, the operating box and finiteness and
  // throw DomainError / EvaluationError on failure.
  Vector drift(const Vector& x, const Vector& w) const;
  Matrix input_map(const Vector& x) const;
  Vector rate(const Vector& x, const Vector& u, const Vector& w) const;

  Vector zero_exogenous() const { return Vector::Zero(exogenous_dim_); }

 private:
  void check_state(const Vector& x) const;

  std::string name_;
  int state_dim_;
  int input_dim_;
  int exogenous_dim_;
  Drift drift_;
  InputMap input_map_;
  std::optional<Box> box_;
};

enum class GradientMode { kClosedForm, kFiniteDifference };

// Central differences with per-coordinate step rel_step * (1 + |x_i|).
Vector central_difference(const std::function<double(const Vector&)>& f,
                          const Vector& x, double rel_step = 1e-6);

// Scalar function of the state with its gradient.
class ScalarField {
 public:
  using Value = std::function<double(const Vector&)>;
  using Gradient = std::function<Vector(const Vector&)>;

  static ScalarField closed_form(std::string name, Value value,
                                 Gradient gradient);
  static ScalarField finite_difference(std::string name, Value value,
                                       double rel_step = 1e-6);

  const std::string& name() const { return name_; }
  GradientMode mode() const { return mode_; }
  double fd_step() const { return fd_step_; }

  double value(const Vector& x) const { return value_(x); }
  Vector gradient(const Vector& x) const;

  // a * lhs + b * rhs, gradient mode closed-form iff both are.
  static ScalarField linear_combination(double a, const ScalarField& lhs,
                                        double b, const ScalarField& rhs);

 private:
  ScalarField(std::string name, Value value, Gradient gradient,
              GradientMode mode, double fd_step);

  std::string name_;
  Value value_;
  Gradient gradient_;
  GradientMode mode_;
  double fd_step_;
};

struct LieDerivatives {
  double lf = 0.0;
  Vector lg;  // one entry per input
};

// (L_f h, L_g h) at (x, w). Throws EvaluationError naming the field when the
// gradient or the result is not finite.
LieDerivatives lie_derivatives(const ControlAffineSystem& sys,
                               const ScalarField& field, const Vector& x,
                               const Vector& w);

// {u : A u <= b}; construction runs a feasibility solve and throws
// ConstructionError when the set is empty.
class InputPolytope {
 public:
  InputPolytope(Matrix A, Vector b);

  // lower <= u <= upper, componentwise.
  static InputPolytope box(const Vector& lower, const Vector& upper);

  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  int input_dim() const { return static_cast<int>(A_.cols()); }
  int rows() const { return static_cast<int>(A_.rows()); }

  bool contains(const Vector& u, double tol = 0.0) const;

 private:
  Matrix A_;
  Vector b_;
};

}  // namespace cbfqp
