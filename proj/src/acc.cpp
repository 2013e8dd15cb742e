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

#include "cbfqp/acc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cbfqp/errors.hpp"

namespace cbfqp::acc {

void AccParams::validate() const {
  const double fields[] = {M,     f0,  f1,        f2,  v_d, tau_d, a_f,
                           a_f_prime, a_l, a_l_prime, g, c, gamma, p_sc};
  for (double v : fields) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConstructionError("ACC parameters must be positive and finite");
    }
  }
}

double drag(const AccParams& p, double v_f) {
  return p.f0 + p.f1 * v_f + p.f2 * v_f * v_f;
}

std::shared_ptr<const ControlAffineSystem> acc_dynamics(const AccParams& p) {
  p.validate();
  auto f = [p](const Vector& x, const Vector& w) {
    Vector dx(3);
    dx << -drag(p, x[kVf]) / p.M, w[0], x[kVl] - x[kVf];
    return dx;
  };
  auto g = [p](const Vector&) {
    Matrix G = Matrix::Zero(3, 1);
    G(kVf, 0) = 1.0 / p.M;
    return G;
  };
  return std::make_shared<const ControlAffineSystem>("acc", 3, 1, 1, f, g);
}

EsClf acc_clf(const AccParams& p) {
  const double v_d = p.v_d;
  EsClf clf{ScalarField::closed_form(
                "V", [v_d](const Vector& x) { return std::pow(x[kVf] - v_d, 2); },
                [v_d](const Vector& x) {
                  Vector g = Vector::Zero(3);
                  g[kVf] = 2.0 * (x[kVf] - v_d);
                  return g;
                }),
            p.c, std::nullopt, std::nullopt};
  return clf;
}

const char* to_string(BarrierKind kind) {
  switch (kind) {
    case BarrierKind::kLog: return "log";
    case BarrierKind::kInverse: return "inverse";
    case BarrierKind::kZeroing: return "zeroing";
  }
  return "?";
}

const char* to_string(MarginVariant variant) {
  return variant == MarginVariant::kOptimal ? "optimal" : "conservative";
}

namespace {

CbfRow wrap(const ScalarField& h, BarrierKind kind, double gamma,
            std::function<bool(const Vector&)> domain = {}) {
  switch (kind) {
    case BarrierKind::kLog:
      return make_reciprocal(h, ReciprocalForm::kLog, gamma);
    case BarrierKind::kInverse:
      return make_reciprocal(h, ReciprocalForm::kInverse, gamma);
    case BarrierKind::kZeroing:
      break;
  }
  return make_zeroing(h, ClassKFunction::linear(gamma), std::move(domain));
}

void check_speeds(double v_f, double v_l) {
  if (v_f < 0.0 || v_l < 0.0 || !std::isfinite(v_f) || !std::isfinite(v_l)) {
    std::ostringstream os;
    os << "braking margin needs finite non-negative speeds, got v_f = " << v_f
       << ", v_l = " << v_l;
    throw DomainError(os.str());
  }
}

}  // namespace

ScalarField headway_field(const AccParams& p) {
  const double tau = p.tau_d;
  return ScalarField::closed_form(
      "headway",
      [tau](const Vector& x) { return x[kGap] - tau * x[kVf]; },
      [tau](const Vector&) {
        Vector g(3);
        g << -tau, 0.0, 1.0;
        return g;
      });
}

CbfRow headway_barrier(const AccParams& p, BarrierKind kind) {
  return wrap(headway_field(p), kind, p.gamma);
}

Margin delta_conservative(const AccParams& p, double v_f, double v_l) {
  check_speeds(v_f, v_l);
  const double g = p.g;
  const double af = p.a_f;
  const double al = p.a_l;
  const double tau = p.tau_d;
  // T_l >= T_f  <=>  a_f v_l >= a_l v_f
  const bool lead_stops_later = af * v_l >= al * v_f;
  Margin m{tau * v_f, tau, 0.0, 0};
  if (lead_stops_later) {
    if (v_l >= v_f) {
      m.branch = 1;
    } else {
      // Gap closes until the relative speed vanishes while both still move.
      m.branch = 3;
      const double k = (af - al) * g;
      const double s = v_f - v_l;
      m.value += s * s / (2.0 * k);
      m.d_vf += s / k;
      m.d_vl = -s / k;
    }
    return m;
  }
  // The lead stops first; the worst gap loss is reached when the follower
  // stops (or at t = 0 if the lead initially pulls away far enough).
  m.branch = v_l >= v_f ? 2 : 4;
  const double excess = (al * v_f * v_f - af * v_l * v_l) / (2.0 * af * al * g);
  if (excess > 0.0) {
    m.value += excess;
    m.d_vf += v_f / (af * g);
    m.d_vl = -v_l / (al * g);
  }
  return m;
}

Margin delta_optimal(const AccParams& p, double v_f, double v_l) {
  check_speeds(v_f, v_l);
  const double g = p.g;
  const double af = p.a_f;
  const double al = p.a_l;
  const double tau = p.tau_d;
  const double lag = tau * af * g;

  const Margin first{tau * v_f, tau, 0.0, 1};
  auto second = [&] {
    const double r = v_f - lag;
    return Margin{r * r / (2.0 * af * g) + tau * v_f - v_l * v_l / (2.0 * al * g),
                  v_f / (af * g), -v_l / (al * g), 2};
  };
  auto third = [&] {
    const double k = (af - al) * g;
    const double s = v_f - v_l - lag;
    return Margin{s * s / (2.0 * k) + tau * v_f, tau + s / k, -s / k, 3};
  };

  if (af < al) {
    return v_f < std::sqrt(af / al) * v_l + lag ? first : second();
  }
  if (v_f < v_l + lag) return first;
  if (af == al) return second();
  return v_f >= (af / al) * v_l + lag ? second() : third();
}

Margin delta(const AccParams& p, MarginVariant variant, double v_f,
             double v_l) {
  return variant == MarginVariant::kOptimal ? delta_optimal(p, v_f, v_l)
                                            : delta_conservative(p, v_f, v_l);
}

ScalarField force_field(const AccParams& p, MarginVariant variant) {
  return ScalarField::closed_form(
      std::string("force_") + to_string(variant),
      [p, variant](const Vector& x) {
        return x[kGap] - delta(p, variant, x[kVf], x[kVl]).value;
      },
      [p, variant](const Vector& x) {
        const Margin m = delta(p, variant, x[kVf], x[kVl]);
        Vector g(3);
        g << -m.d_vf, -m.d_vl, 1.0;
        return g;
      });
}

CbfRow force_barrier(const AccParams& p, MarginVariant variant,
                     BarrierKind kind) {
  auto speeds_valid = [](const Vector& x) {
    return x[kVf] >= 0.0 && x[kVl] >= 0.0;
  };
  return wrap(force_field(p, variant), kind, p.gamma, speeds_valid);
}

InputPolytope acc_input_bounds(const AccParams& p) {
  Vector lo(1), hi(1);
  lo << -p.a_f * p.M * p.g;
  hi << p.a_f_prime * p.M * p.g;
  return InputPolytope::box(lo, hi);
}

ControllerSpec acc_qp_spec(const AccParams& p, AccLevel level,
                           MarginVariant variant, BarrierKind kind) {
  p.validate();
  ControllerSpec spec;
  spec.system = acc_dynamics(p);
  spec.clf = acc_clf(p);
  if (level == AccLevel::kBasic) {
    spec.cbf_rows.push_back(headway_barrier(p, kind));
  } else {
    spec.cbf_rows.push_back(force_barrier(p, variant, kind));
    const InputPolytope box = acc_input_bounds(p);
    spec.input_bounds = [box](const Vector&, const Vector&) { return box; };
  }
  spec.cost_H = [p](const Vector&, const Vector&) {
    Matrix H = Matrix::Zero(2, 2);
    H(0, 0) = 2.0 / (p.M * p.M);
    H(1, 1) = 2.0 * p.p_sc;
    return H;
  };
  spec.cost_F = [p](const Vector& x, const Vector&) {
    Vector F = Vector::Zero(2);
    F[0] = -2.0 * drag(p, x[kVf]) / (p.M * p.M);
    return F;
  };
  spec.fallback = [p](const Vector&, const Vector&) {
    return Vector::Constant(1, -p.a_f * p.M * p.g);
  };
  return spec;
}

}  // namespace cbfqp::acc
