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

#include "cbfqp/system_model.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "cbfqp/errors.hpp"
#include "cbfqp/qp.hpp"

namespace cbfqp {
namespace {

std::string format_vector(const Vector& v) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) os << ", ";
    os << v[i];
  }
  os << ")";
  return os.str();
}

}  // namespace

bool Box::contains(const Vector& x) const {
  if (x.size() != lower.size() || x.size() != upper.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

ControlAffineSystem::ControlAffineSystem(std::string name, int state_dim,
                                         int input_dim, int exogenous_dim,
                                         Drift drift, InputMap input_map,
                                         std::optional<Box> operating_box)
    : name_(std::move(name)),
      state_dim_(state_dim),
      input_dim_(input_dim),
      exogenous_dim_(exogenous_dim),
      drift_(std::move(drift)),
      input_map_(std::move(input_map)),
      box_(std::move(operating_box)) {
  if (state_dim_ <= 0 || input_dim_ <= 0 || exogenous_dim_ < 0) {
    throw ConstructionError("system '" + name_ + "': invalid dimensions");
  }
  if (!drift_ || !input_map_) {
    throw ConstructionError("system '" + name_ + "': missing drift or input map");
  }
  if (box_ && (box_->lower.size() != state_dim_ ||
               box_->upper.size() != state_dim_)) {
    throw ConstructionError("system '" + name_ + "': operating box dimension");
  }
}

void ControlAffineSystem::check_state(const Vector& x) const {
  if (x.size() != state_dim_) {
    throw DomainError("system '" + name_ + "': state has dimension " +
                      std::to_string(x.size()) + ", expected " +
                      std::to_string(state_dim_));
  }
  if (!x.allFinite()) {
    throw EvaluationError("system '" + name_ + "': non-finite state " +
                          format_vector(x));
  }
  if (box_ && !box_->contains(x)) {
    throw DomainError("system '" + name_ + "': state " + format_vector(x) +
                      " is outside the operating box");
  }
}

Vector ControlAffineSystem::drift(const Vector& x, const Vector& w) const {
  check_state(x);
  if (w.size() != exogenous_dim_) {
    throw DomainError("system '" + name_ + "': exogenous input has dimension " +
                      std::to_string(w.size()) + ", expected " +
                      std::to_string(exogenous_dim_));
  }
  Vector f = drift_(x, w);
  if (f.size() != state_dim_ || !f.allFinite()) {
    throw EvaluationError("system '" + name_ + "': drift invalid at " +
                          format_vector(x));
  }
  return f;
}

Matrix ControlAffineSystem::input_map(const Vector& x) const {
  check_state(x);
  Matrix g = input_map_(x);
  if (g.rows() != state_dim_ || g.cols() != input_dim_) {
    throw EvaluationError("system '" + name_ + "': input map has shape " +
                          std::to_string(g.rows()) + "x" +
                          std::to_string(g.cols()));
  }
  if (!g.allFinite()) {
    throw EvaluationError("system '" + name_ + "': input map not finite at " +
                          format_vector(x));
  }
  return g;
}

Vector ControlAffineSystem::rate(const Vector& x, const Vector& u,
                                 const Vector& w) const {
  if (u.size() != input_dim_) {
    throw DomainError("system '" + name_ + "': input has dimension " +
                      std::to_string(u.size()));
  }
  return drift(x, w) + input_map(x) * u;
}

Vector central_difference(const std::function<double(const Vector&)>& f,
                          const Vector& x, double rel_step) {
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = rel_step * (1.0 + std::abs(x[i]));
    probe[i] = x[i] + step;
    const double up = f(probe);
    probe[i] = x[i] - step;
    const double down = f(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

ScalarField::ScalarField(std::string name, Value value, Gradient gradient,
                         GradientMode mode, double fd_step)
    : name_(std::move(name)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      mode_(mode),
      fd_step_(fd_step) {}

ScalarField ScalarField::closed_form(std::string name, Value value,
                                     Gradient gradient) {
  if (!value || !gradient) {
    throw ConstructionError("field '" + name + "': missing value or gradient");
  }
  return ScalarField(std::move(name), std::move(value), std::move(gradient),
                     GradientMode::kClosedForm, 0.0);
}

ScalarField ScalarField::finite_difference(std::string name, Value value,
                                           double rel_step) {
  if (!value) throw ConstructionError("field '" + name + "': missing value");
  if (!(rel_step > 0.0)) {
    throw ConstructionError("field '" + name + "': step must be positive");
  }
  Gradient fd = [value, rel_step](const Vector& x) {
    return central_difference(value, x, rel_step);
  };
  return ScalarField(std::move(name), std::move(value), std::move(fd),
                     GradientMode::kFiniteDifference, rel_step);
}

Vector ScalarField::gradient(const Vector& x) const { return gradient_(x); }

ScalarField ScalarField::linear_combination(double a, const ScalarField& lhs,
                                            double b, const ScalarField& rhs) {
  std::ostringstream name;
  name << a << "*" << lhs.name() << "+" << b << "*" << rhs.name();
  Value value = [a, b, lhs, rhs](const Vector& x) {
    return a * lhs.value(x) + b * rhs.value(x);
  };
  if (lhs.mode() == GradientMode::kClosedForm &&
      rhs.mode() == GradientMode::kClosedForm) {
    Gradient grad = [a, b, lhs, rhs](const Vector& x) -> Vector {
      return a * lhs.gradient(x) + b * rhs.gradient(x);
    };
    return closed_form(name.str(), std::move(value), std::move(grad));
  }
  return finite_difference(name.str(), std::move(value),
                           std::max(lhs.fd_step(), rhs.fd_step()));
}

LieDerivatives lie_derivatives(const ControlAffineSystem& sys,
                               const ScalarField& field, const Vector& x,
                               const Vector& w) {
  const Vector grad = field.gradient(x);
  if (grad.size() != sys.state_dim() || !grad.allFinite()) {
    throw EvaluationError("field '" + field.name() +
                          "': non-finite gradient at state " + format_vector(x));
  }
  LieDerivatives out;
  out.lf = grad.dot(sys.drift(x, w));
  out.lg = sys.input_map(x).transpose() * grad;
  if (!std::isfinite(out.lf) || !out.lg.allFinite()) {
    throw EvaluationError("field '" + field.name() +
                          "': non-finite Lie derivative at state " +
                          format_vector(x));
  }
  return out;
}

InputPolytope::InputPolytope(Matrix A, Vector b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() != b_.size() || A_.cols() == 0) {
    throw ConstructionError("input polytope: inconsistent dimensions");
  }
  if (!A_.allFinite() || !b_.allFinite()) {
    throw ConstructionError("input polytope: non-finite rows");
  }
  const Eigen::Index m = A_.cols();
  QpProblem probe(Matrix::Identity(m, m), Vector::Zero(m));
  for (Eigen::Index i = 0; i < A_.rows(); ++i) {
    probe.add_row(A_.row(i).transpose(), b_[i]);
  }
  const QpSolution sol = solve_active_set(probe);
  if (sol.status != QpStatus::kOptimal) {
    throw ConstructionError("input polytope is empty (" +
                            std::string(to_string(sol.status)) + ")");
  }
}

InputPolytope InputPolytope::box(const Vector& lower, const Vector& upper) {
  if (lower.size() != upper.size()) {
    throw ConstructionError("input box: bound dimensions differ");
  }
  const Eigen::Index m = lower.size();
  Matrix A(2 * m, m);
  Vector b(2 * m);
  A.setZero();
  for (Eigen::Index i = 0; i < m; ++i) {
    A(2 * i, i) = 1.0;
    b[2 * i] = upper[i];
    A(2 * i + 1, i) = -1.0;
    b[2 * i + 1] = -lower[i];
  }
  return InputPolytope(std::move(A), std::move(b));
}

bool InputPolytope::contains(const Vector& u, double tol) const {
  if (u.size() != A_.cols()) return false;
  return ((A_ * u - b_).array() <= tol).all();
}

}  // namespace cbfqp
