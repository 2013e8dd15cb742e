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

#include <memory>

#include "cbfqp/barrier.hpp"
#include "cbfqp/controller.hpp"
#include "cbfqp/lqr.hpp"
#include "cbfqp/system_model.hpp"

namespace cbfqp::lk {

// State x = (y, nu, psi, r); exogenous w = (r_d).
enum StateIndex { kY = 0, kNu = 1, kPsi = 2, kR = 3 };

struct LkParams {
  double M = 1650.0;
  double I_z = 2315.3;
  double a = 1.11;
  double b = 1.59;
  double C_f = 133000.0;
  double C_r = 98800.0;
  double v0 = 27.7;
  double y_max = 0.9;
  double a_max = 0.3 * 9.81;
  double gamma = 1.0;
  double p_sc = 100.0;
  // LQR weights: Q = K_p C^T C + K_d (C A)^T (C A), scalar control weight R.
  double lqr_R = 600.0;
  double K_p = 5.0;
  double K_d = 0.4;
  Eigen::Vector4d C_out{1.0, 0.0, 20.0, 0.0};

  void validate() const;
};

struct LkMatrices {
  Eigen::Matrix4d A;
  Eigen::Vector4d B;
  Eigen::Vector4d E;  // disturbance column for r_d
};

LkMatrices lk_matrices(const LkParams& p);

std::shared_ptr<const ControlAffineSystem> lk_dynamics(const LkParams& p);

// y' = nu + v0 psi
double lateral_rate(const LkParams& p, const Vector& x);
// M y'' = C_f (u - (nu + a r) / v0) - C_r (nu - b r) / v0 - M v0 r_d
double lateral_acceleration(const LkParams& p, const Vector& x, double u,
                            double r_d);

struct SteeringInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// Steering angles with |y''| <= a_max.
SteeringInterval lk_input_bounds(const LkParams& p, const Vector& x,
                                 double r_d);

// h_F = y_max - sgn(y') y - y'^2 / (2 a_max), with sgn(0) = 0.
ScalarField lk_barrier_field(const LkParams& p);
ReciprocalBarrier lk_barrier(const LkParams& p);

enum class LkBarrierKind { kLog, kZeroing };
CbfRow lk_barrier_row(const LkParams& p, LkBarrierKind kind);

// h_F > 0 and |y| <= y_max.
bool lk_membership(const LkParams& p, const Vector& x);

Matrix lqr_state_weight(const LkParams& p);

struct LqrGain {
  Eigen::RowVector4d K;
  CareSolution care;
  double closed_loop_abscissa = 0.0;

  // x_ff = (0, 0, 0, r_d)
  static Eigen::Vector4d feedforward(double r_d);
};

LqrGain solve_lqr_gain(const LkParams& p);

// Nominal u = -K (x - x_ff) + delta as two opposite rows, a barrier row on
// h_F and the steering interval. Falls back to the interval endpoint that
// opposes the current lateral rate.
ControllerSpec lk_qp_spec(const LkParams& p, const LqrGain& gain,
                          LkBarrierKind kind = LkBarrierKind::kLog);
ControllerSpec lk_qp_spec(const LkParams& p,
                          LkBarrierKind kind = LkBarrierKind::kLog);

}  // namespace cbfqp::lk
