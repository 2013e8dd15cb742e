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
#include "cbfqp/system_model.hpp"

namespace cbfqp::acc {

// State x = (v_f, v_l, D); exogenous w = (a_L).
enum StateIndex { kVf = 0, kVl = 1, kGap = 2 };

struct AccParams {
  double M = 1650.0;
  double f0 = 0.1;
  double f1 = 5.0;
  double f2 = 0.25;
  double v_d = 22.0;
  double tau_d = 1.8;
  double a_f = 0.25;        // follower braking, fraction of g
  double a_f_prime = 0.25;  // follower acceleration, fraction of g
  double a_l = 0.25;        // lead braking, fraction of g
  double a_l_prime = 0.25;  // lead acceleration, fraction of g
  double g = 9.81;
  double c = 10.0;
  double gamma = 1.0;
  double p_sc = 100.0;

  // Throws ConstructionError unless every field is positive.
  void validate() const;
};

double drag(const AccParams& p, double v_f);

std::shared_ptr<const ControlAffineSystem> acc_dynamics(const AccParams& p);

EsClf acc_clf(const AccParams& p);

enum class BarrierKind { kLog, kInverse, kZeroing };
enum class MarginVariant { kOptimal, kConservative };
enum class AccLevel { kBasic, kForce };

const char* to_string(BarrierKind kind);
const char* to_string(MarginVariant variant);

// h = D - tau_d v_f
ScalarField headway_field(const AccParams& p);
CbfRow headway_barrier(const AccParams& p, BarrierKind kind);

// Required braking margin and its partial derivatives. Branch numbering
// follows the case tables: conservative 1..4 in the order
// (v_l >= v_f, T_l >= T_f), (v_l >= v_f, T_l < T_f), (v_l < v_f, T_l >= T_f),
// (v_l < v_f, T_l < T_f); optimal 1..3 by closed form.
struct Margin {
  double value = 0.0;
  double d_vf = 0.0;
  double d_vl = 0.0;
  int branch = 0;
};

// Both throw DomainError for negative speeds.
Margin delta_conservative(const AccParams& p, double v_f, double v_l);
Margin delta_optimal(const AccParams& p, double v_f, double v_l);
Margin delta(const AccParams& p, MarginVariant variant, double v_f, double v_l);

// h_F = D - Delta(v_f, v_l)
ScalarField force_field(const AccParams& p, MarginVariant variant);
CbfRow force_barrier(const AccParams& p, MarginVariant variant,
                     BarrierKind kind);

// [-a_f M g, a_f' M g]
InputPolytope acc_input_bounds(const AccParams& p);

// basic: CLF + headway row, no bounds (closed form path).
// force: CLF + force barrier + input box (active-set path).
// The fallback is full braking -a_f M g.
ControllerSpec acc_qp_spec(const AccParams& p, AccLevel level,
                           MarginVariant variant = MarginVariant::kOptimal,
                           BarrierKind kind = BarrierKind::kLog);

}  // namespace cbfqp::acc
