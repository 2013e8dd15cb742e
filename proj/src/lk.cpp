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

#include "cbfqp/lk.hpp"

#include <cmath>

#include "cbfqp/errors.hpp"

namespace cbfqp::lk {
namespace {

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

}  // namespace

void LkParams::validate() const {
  const double fields[] = {M,     I_z,   a,     b,     C_f,   C_r,   v0,
                           y_max, a_max, gamma, p_sc,  lqr_R, K_p,   K_d};
  for (double v : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConstructionError("LK parameters must be positive and finite");
    }
  }
}

LkMatrices lk_matrices(const LkParams& p) {
  const double Mv = p.M * p.v0;
  const double Iv = p.I_z * p.v0;
  LkMatrices m;
  m.A << 0, 1, p.v0, 0,
      0, -(p.C_f + p.C_r) / Mv, 0, (p.b * p.C_r - p.a * p.C_f) / Mv - p.v0,
      0, 0, 0, 1,
      0, (p.b * p.C_r - p.a * p.C_f) / Iv, 0,
      -(p.a * p.a * p.C_f + p.b * p.b * p.C_r) / Iv;
  m.B << 0, p.C_f / p.M, 0, p.a * p.C_f / p.I_z;
  m.E << 0, 0, -1, 0;
  return m;
}

std::shared_ptr<const ControlAffineSystem> lk_dynamics(const LkParams& p) {
  p.validate();
  const LkMatrices m = lk_matrices(p);
  auto f = [m](const Vector& x, const Vector& w) -> Vector {
    return m.A * x + m.E * w[0];
  };
  auto g = [m](const Vector&) -> Matrix { return m.B; };
  return std::make_shared<const ControlAffineSystem>("lk", 4, 1, 1, f, g);
}

double lateral_rate(const LkParams& p, const Vector& x) {
  return x[kNu] + p.v0 * x[kPsi];
}

double lateral_acceleration(const LkParams& p, const Vector& x, double u,
                            double r_d) {
  return (p.C_f * (u - (x[kNu] + p.a * x[kR]) / p.v0) -
          p.C_r * (x[kNu] - p.b * x[kR]) / p.v0) /
             p.M -
         p.v0 * r_d;
}

SteeringInterval lk_input_bounds(const LkParams& p, const Vector& x,
                                 double r_d) {
  const double F0 = p.C_f * (x[kNu] + p.a * x[kR]) / p.v0 +
                    p.C_r * (x[kNu] - p.b * x[kR]) / p.v0 + p.M * p.v0 * r_d;
  return {(-p.M * p.a_max + F0) / p.C_f, (p.M * p.a_max + F0) / p.C_f};
}

ScalarField lk_barrier_field(const LkParams& p) {
  return ScalarField::closed_form(
      "lk_hF",
      [p](const Vector& x) {
        const double yd = lateral_rate(p, x);
        return p.y_max - sgn(yd) * x[kY] - 0.5 * yd * yd / p.a_max;
      },
      [p](const Vector& x) {
        const double yd = lateral_rate(p, x);
        Vector g(4);
        g << -sgn(yd), -yd / p.a_max, -p.v0 * yd / p.a_max, 0.0;
        return g;
      });
}

ReciprocalBarrier lk_barrier(const LkParams& p) {
  return make_reciprocal(lk_barrier_field(p), ReciprocalForm::kLog, p.gamma);
}

CbfRow lk_barrier_row(const LkParams& p, LkBarrierKind kind) {
  if (kind == LkBarrierKind::kLog) return lk_barrier(p);
  return make_zeroing(lk_barrier_field(p), ClassKFunction::linear(p.gamma));
}

bool lk_membership(const LkParams& p, const Vector& x) {
  return lk_barrier_field(p).value(x) > 0.0 && std::abs(x[kY]) <= p.y_max;
}

Matrix lqr_state_weight(const LkParams& p) {
  const LkMatrices m = lk_matrices(p);
  const Eigen::RowVector4d C = p.C_out.transpose();
  const Eigen::RowVector4d CA = C * m.A;
  return p.K_p * C.transpose() * C + p.K_d * CA.transpose() * CA;
}

Eigen::Vector4d LqrGain::feedforward(double r_d) {
  return Eigen::Vector4d(0.0, 0.0, 0.0, r_d);
}

LqrGain solve_lqr_gain(const LkParams& p) {
  p.validate();
  const LkMatrices m = lk_matrices(p);
  LqrGain out;
  out.care = solve_care(m.A, m.B, lqr_state_weight(p),
                        Matrix::Constant(1, 1, p.lqr_R));
  out.K = out.care.K.row(0);
  out.closed_loop_abscissa =
      spectral_abscissa(m.A - m.B * out.K);
  if (!(out.closed_loop_abscissa < 0.0)) {
    throw EvaluationError("LQR gain does not stabilize the lane-keeping model");
  }
  return out;
}

ControllerSpec lk_qp_spec(const LkParams& p, const LqrGain& gain,
                          LkBarrierKind kind) {
  ControllerSpec spec;
  spec.system = lk_dynamics(p);
  const Eigen::RowVector4d K = gain.K;
  spec.nominal_feedback = [K](const Vector& x, const Vector& w) {
    const Eigen::Vector4d e = x - LqrGain::feedforward(w[0]);
    return Vector::Constant(1, -K.dot(e));
  };
  spec.cbf_rows.push_back(lk_barrier_row(p, kind));
  spec.input_bounds = [p](const Vector& x, const Vector& w) {
    const SteeringInterval s = lk_input_bounds(p, x, w[0]);
    return InputPolytope::box(Vector::Constant(1, s.lower),
                              Vector::Constant(1, s.upper));
  };
  spec.cost_H = [p](const Vector&, const Vector&) {
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = 2.0;
    H(1, 1) = 2.0 * p.p_sc;
    return H;
  };
  spec.cost_F = [](const Vector&, const Vector&) { return Vector::Zero(2); };
  spec.fallback = [p](const Vector& x, const Vector& w) {
    const SteeringInterval s = lk_input_bounds(p, x, w[0]);
    const double yd = lateral_rate(p, x);
    double u = 0.5 * (s.lower + s.upper);
    if (yd > 0.0) u = s.lower;
    if (yd < 0.0) u = s.upper;
    return Vector::Constant(1, u);
  };
  return spec;
}

ControllerSpec lk_qp_spec(const LkParams& p, LkBarrierKind kind) {
  return lk_qp_spec(p, solve_lqr_gain(p), kind);
}

}  // namespace cbfqp::lk
