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

#include "cbfqp/controller.hpp"

#include <type_traits>
#include <variant>

#include "cbfqp/errors.hpp"

namespace cbfqp {

void ControllerSpec::validate() const {
  if (!system) throw ConstructionError("controller: missing system");
  if (clf.has_value() == static_cast<bool>(nominal_feedback)) {
    throw ConstructionError(
        "controller: exactly one of CLF or nominal feedback is required");
  }
  if (nominal_feedback && system->input_dim() != 1) {
    throw ConstructionError(
        "controller: nominal-feedback tracking needs a single input");
  }
  if (cbf_rows.empty()) throw ConstructionError("controller: no barrier rows");
  if (!cost_H || !cost_F) throw ConstructionError("controller: missing cost");
}

QpProblem build_qp(const ControllerSpec& spec, const Vector& x,
                   const Vector& w) {
  spec.validate();
  const ControlAffineSystem& sys = *spec.system;
  const int m = sys.input_dim();
  const int n = m + 1;

  QpProblem qp(spec.cost_H(x, w), spec.cost_F(x, w));
  if (qp.dim() != n) {
    throw ConstructionError("controller: cost dimension must be inputs + 1");
  }

  Vector a = Vector::Zero(n);
  if (spec.clf) {
    const LieDerivatives lv = lie_derivatives(sys, spec.clf->V, x, w);
    a.head(m) = lv.lg;
    a[m] = -1.0;
    qp.add_row(a, -lv.lf - spec.clf->c3 * spec.clf->V.value(x));
  } else {
    const Vector nominal = spec.nominal_feedback(x, w);
    a.setZero();
    a[0] = 1.0;
    a[m] = -1.0;
    qp.add_row(a, nominal[0]);
    qp.add_row(-a, -nominal[0]);
  }

  for (const CbfRow& row : spec.cbf_rows) {
    a.setZero();
    std::visit(
        [&](const auto& barrier) {
          using T = std::decay_t<decltype(barrier)>;
          if constexpr (std::is_same_v<T, ReciprocalBarrier>) {
            // L_f B + L_g B u <= gamma / B
            const double allowance = barrier.decay_allowance(x);
            const LieDerivatives lb =
                lie_derivatives(sys, barrier.field(), x, w);
            a.head(m) = lb.lg;
            qp.add_row(a, -lb.lf + allowance);
          } else {
            // -L_f h - L_g h u <= alpha(h)
            const double hv = barrier.h.value(x);
            if (barrier.domain && !barrier.domain(x)) {
              throw DomainError("zeroing barrier '" + barrier.h.name() +
                                "' evaluated outside its domain");
            }
            const LieDerivatives lh = lie_derivatives(sys, barrier.h, x, w);
            a.head(m) = -lh.lg;
            qp.add_row(a, lh.lf + barrier.alpha(hv));
          }
        },
        row);
  }

  if (spec.input_bounds) {
    const InputPolytope bounds = spec.input_bounds(x, w);
    if (bounds.input_dim() != m) {
      throw ConstructionError("controller: input bounds dimension mismatch");
    }
    for (int i = 0; i < bounds.rows(); ++i) {
      a.setZero();
      a.head(m) = bounds.A().row(i).transpose();
      qp.add_row(a, bounds.b()[i]);
    }
  }
  return qp;
}

ControlOutput evaluate(const ControllerSpec& spec, const Vector& x,
                       const Vector& w) {
  const QpProblem qp = build_qp(spec, x, w);
  const int m = spec.system->input_dim();
  ControlOutput out;
  if (qp.num_rows() == 2 && !spec.input_bounds) {
    out.closed_form_attempted = true;
    out.qp = solve_two_constraint_closed_form(qp);
    out.closed_form = out.qp.status == QpStatus::kOptimal;
    if (!out.closed_form) {
      out.diagnostics = "closed form degenerate, using active set";
    }
  }
  if (!out.closed_form) out.qp = solve_active_set(qp);

  if (out.qp.status != QpStatus::kOptimal) {
    out.fallback_applied = true;
    out.u = spec.fallback ? spec.fallback(x, w) : Vector::Zero(m);
    out.delta = 0.0;
    if (!out.diagnostics.empty()) out.diagnostics += "; ";
    out.diagnostics += std::string("QP ") + to_string(out.qp.status) +
                       ", fallback applied";
    if (!out.qp.diagnostics.empty()) out.diagnostics += ": " + out.qp.diagnostics;
    return out;
  }
  out.u = out.qp.z.head(m);
  out.delta = out.qp.z[m];
  return out;
}

Vector min_norm_clf(const EsClf& clf, const ControlAffineSystem& sys,
                    const std::optional<InputPolytope>& bounds, const Vector& x,
                    const Vector& w_in) {
  const Vector w = w_in.size() == 0 ? sys.zero_exogenous() : w_in;
  const int m = sys.input_dim();
  QpProblem qp(Matrix::Identity(m, m), Vector::Zero(m));
  const LieDerivatives lv = lie_derivatives(sys, clf.V, x, w);
  qp.add_row(lv.lg, -lv.lf - clf.c3 * clf.V.value(x));
  if (bounds) {
    if (bounds->input_dim() != m) {
      throw ConstructionError("min_norm_clf: bounds dimension mismatch");
    }
    for (int i = 0; i < bounds->rows(); ++i) {
      qp.add_row(bounds->A().row(i).transpose(), bounds->b()[i]);
    }
  }
  const QpSolution sol = solve_active_set(qp);
  if (sol.status != QpStatus::kOptimal) {
    throw InfeasibleError(std::string("min-norm CLF program is ") +
                          to_string(sol.status) + ": " + sol.diagnostics);
  }
  return sol.z;
}

}  // namespace cbfqp
