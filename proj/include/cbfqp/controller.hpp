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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cbfqp/barrier.hpp"
#include "cbfqp/qp.hpp"
#include "cbfqp/system_model.hpp"

namespace cbfqp {

// Exponentially stabilizing control Lyapunov function.
struct EsClf {
  ScalarField V;
  double c3 = 1.0;
  // Optional sandwich constants c1 |x1|^2 <= V <= c2 |x1|^2.
  std::optional<double> c1;
  std::optional<double> c2;
};

using StateMatrixFn = std::function<Matrix(const Vector& x, const Vector& w)>;
using StateVectorFn = std::function<Vector(const Vector& x, const Vector& w)>;
using InputBoundsFn = std::function<InputPolytope(const Vector& x, const Vector& w)>;

// Pointwise program over z = (u, delta):
//   rows = [CLF row | two nominal-tracking rows; CBF rows; input-bound rows].
struct ControllerSpec {
  std::shared_ptr<const ControlAffineSystem> system;
  std::optional<EsClf> clf;
  // u = nominal(x, w) + delta, single-input systems only.
  StateVectorFn nominal_feedback;
  std::vector<CbfRow> cbf_rows;
  InputBoundsFn input_bounds;  // empty: U = R^m
  StateMatrixFn cost_H;        // (m+1) x (m+1)
  StateVectorFn cost_F;        // m+1
  // Applied when the program is infeasible or degenerate.
  StateVectorFn fallback;

  // Throws ConstructionError on structural problems (exactly one of clf /
  // nominal, at least one CBF row, cost present).
  void validate() const;
  int num_leading_rows() const { return clf ? 1 : 2; }
};

// Throws DomainError (BoundaryViolation for reciprocal rows) when x is
// outside the domain of any barrier row.
QpProblem build_qp(const ControllerSpec& spec, const Vector& x, const Vector& w);

struct ControlOutput {
  Vector u;
  double delta = 0.0;
  QpSolution qp;
  bool closed_form_attempted = false;
  bool closed_form = false;  // the closed form produced the solution
  bool fallback_applied = false;
  std::string diagnostics;
};

// Solves the pointwise program. Two rows and no input bounds go through the
// closed form (active set when it reports a degenerate pair); everything else
// through the active-set solver. Infeasible or degenerate programs apply the
// spec's fallback (zero input when none is set) and mark the output.
ControlOutput evaluate(const ControllerSpec& spec, const Vector& x,
                       const Vector& w);

// argmin 1/2 |u|^2 s.t. L_f V + L_g V u <= -c3 V and the optional polytope.
// Throws InfeasibleError when the rows cannot be met.
Vector min_norm_clf(const EsClf& clf, const ControlAffineSystem& sys,
                    const std::optional<InputPolytope>& bounds, const Vector& x,
                    const Vector& w = Vector());

}  // namespace cbfqp
