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

#include "cbfqp/barrier.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "cbfqp/errors.hpp"

namespace cbfqp {
namespace {

std::string describe(const Vector& x) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

ClassKFunction::ClassKFunction(std::string name,
                               std::function<double(double)> fn, bool extended)
    : name_(std::move(name)), fn_(std::move(fn)), extended_(extended) {}

ClassKFunction ClassKFunction::linear(double gamma) {
  if (!(gamma > 0.0)) throw ConstructionError("linear class-K: gamma <= 0");
  std::ostringstream name;
  name << "linear(" << gamma << ")";
  return ClassKFunction(name.str(), [gamma](double s) { return gamma * s; },
                        true);
}

ClassKFunction ClassKFunction::power(double gamma, double k) {
  if (!(gamma > 0.0) || !(k > 0.0)) {
    throw ConstructionError("power class-K: gamma and k must be positive");
  }
  std::ostringstream name;
  name << "power(" << gamma << ", " << k << ")";
  return ClassKFunction(
      name.str(),
      [gamma, k](double s) {
        return gamma * std::copysign(std::pow(std::abs(s), k), s);
      },
      true);
}

ClassKFunction ClassKFunction::custom(std::string name,
                                      std::function<double(double)> fn,
                                      bool extended, double probe_range) {
  if (!fn) throw ConstructionError("custom class-K '" + name + "': empty map");
  ClassKFunction out(std::move(name), std::move(fn), extended);
  out.probe(probe_range);
  return out;
}

void ClassKFunction::probe(double range) const {
  if (std::abs(fn_(0.0)) > 1e-12) {
    throw ConstructionError("class-K '" + name_ + "': value at 0 is not 0");
  }
  const int probes = 50;
  const double lo = extended_ ? -range : 0.0;
  double prev = fn_(lo);
  for (int i = 1; i <= probes; ++i) {
    const double s = lo + (range - lo) * i / probes;
    const double v = fn_(s);
    if (!(v > prev)) {
      std::ostringstream os;
      os << "class-K '" << name_ << "' is not strictly increasing near " << s;
      throw ConstructionError(os.str());
    }
    prev = v;
  }
}

double ClassKFunction::operator()(double s) const {
  if (!extended_ && s < 0.0) {
    throw DomainError("class-K '" + name_ + "' evaluated at negative argument");
  }
  return fn_(s);
}

const char* to_string(ReciprocalForm form) {
  switch (form) {
    case ReciprocalForm::kLog:
      return "log";
    case ReciprocalForm::kInverse:
      return "inverse";
    case ReciprocalForm::kLifted:
      return "lifted";
  }
  return "unknown";
}

ReciprocalBarrier::ReciprocalBarrier(ScalarField h, ScalarField B,
                                     ReciprocalForm form, double gamma)
    : h_(std::move(h)), B_(std::move(B)), form_(form), gamma_(gamma) {
  if (!(gamma_ > 0.0)) throw ConstructionError("reciprocal barrier: gamma <= 0");
}

void ReciprocalBarrier::require_interior(const Vector& x) const {
  const double hv = h_.value(x);
  if (!(hv > kInteriorFloor)) {
    std::ostringstream os;
    os << "reciprocal barrier on '" << h_.name() << "' evaluated at h = " << hv
       << " (state " << describe(x) << ")";
    throw BoundaryViolation(os.str(), hv);
  }
}

double ReciprocalBarrier::value(const Vector& x) const {
  require_interior(x);
  return B_.value(x);
}

Vector ReciprocalBarrier::gradient(const Vector& x) const {
  require_interior(x);
  return B_.gradient(x);
}

double ReciprocalBarrier::decay_allowance(const Vector& x) const {
  return gamma_ / value(x);
}

const ScalarField& level_function(const CbfRow& row) {
  return std::visit(
      [](const auto& b) -> const ScalarField& {
        if constexpr (std::is_same_v<std::decay_t<decltype(b)>,
                                     ReciprocalBarrier>) {
          return b.h();
        } else {
          return b.h;
        }
      },
      row);
}

SafeSetDescriptor::SafeSetDescriptor(ScalarField h, StateSampler sampler)
    : h_(std::move(h)), sampler_(std::move(sampler)) {
  if (!sampler_) throw ConstructionError("safe set: missing sampler");
}

std::vector<Vector> SafeSetDescriptor::sample_interior(std::mt19937_64& rng,
                                                       int count,
                                                       int max_draws) const {
  std::vector<Vector> out;
  for (int i = 0; i < max_draws && static_cast<int>(out.size()) < count; ++i) {
    Vector x = sampler_(rng);
    if (h_.value(x) > kInteriorFloor) out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vector> SafeSetDescriptor::sample_exterior(std::mt19937_64& rng,
                                                       int count,
                                                       int max_draws) const {
  std::vector<Vector> out;
  for (int i = 0; i < max_draws && static_cast<int>(out.size()) < count; ++i) {
    Vector x = sampler_(rng);
    if (h_.value(x) < 0.0) out.push_back(std::move(x));
  }
  return out;
}

std::vector<Vector> SafeSetDescriptor::sample_shell(std::mt19937_64& rng,
                                                    int count) const {
  const auto inside = sample_interior(rng, count);
  const auto outside = sample_exterior(rng, count);
  std::vector<Vector> out;
  const std::size_t pairs = std::min(inside.size(), outside.size());
  for (std::size_t i = 0; i < pairs; ++i) {
    Vector lo = outside[i];  // h < 0
    Vector hi = inside[i];   // h > 0
    for (int it = 0; it < 200; ++it) {
      const Vector mid = 0.5 * (lo + hi);
      const double hm = h_.value(mid);
      if (std::abs(hm) <= kShellTolerance) {
        out.push_back(mid);
        break;
      }
      (hm > 0.0 ? hi : lo) = mid;
    }
  }
  return out;
}

ReciprocalBarrier make_reciprocal(const ScalarField& h, ReciprocalForm form,
                                  double gamma) {
  if (!(gamma > 0.0)) throw ConstructionError("make_reciprocal: gamma <= 0");
  switch (form) {
    case ReciprocalForm::kLog: {
      auto B = ScalarField::closed_form(
          "log_rbf(" + h.name() + ")",
          [h](const Vector& x) {
            const double v = h.value(x);
            return -std::log(v / (1.0 + v));
          },
          [h](const Vector& x) -> Vector {
            const double v = h.value(x);
            return -h.gradient(x) / (v * (1.0 + v));
          });
      return ReciprocalBarrier(h, std::move(B), form, gamma);
    }
    case ReciprocalForm::kInverse: {
      auto B = ScalarField::closed_form(
          "inverse_rbf(" + h.name() + ")",
          [h](const Vector& x) { return 1.0 / h.value(x); },
          [h](const Vector& x) -> Vector {
            const double v = h.value(x);
            return -h.gradient(x) / (v * v);
          });
      return ReciprocalBarrier(h, std::move(B), form, gamma);
    }
    case ReciprocalForm::kLifted:
      break;
  }
  throw ConstructionError("make_reciprocal: use lift_relative_degree for lifted barriers");
}

ZeroingBarrier make_zeroing(const ScalarField& h, ClassKFunction alpha,
                            std::function<bool(const Vector&)> domain) {
  if (!alpha.extended()) {
    throw ConstructionError("zeroing barrier needs an extended class-K rate");
  }
  return ZeroingBarrier{h, std::move(alpha), std::move(domain)};
}

bool rcbf_condition(const LieDerivatives& lie_b, const Vector& u,
                    double decay_allowance) {
  return lie_b.lf + lie_b.lg.dot(u) <= decay_allowance;
}

bool zcbf_condition(const LieDerivatives& lie_h, const Vector& u,
                    double alpha_of_h) {
  return lie_h.lf + lie_h.lg.dot(u) + alpha_of_h >= 0.0;
}

bool rcbf_admissible(const ControlAffineSystem& sys, const ReciprocalBarrier& B,
                     const Vector& x, const Vector& w, const Vector& u) {
  const double allowance = B.decay_allowance(x);  // checks Int(C)
  return rcbf_condition(lie_derivatives(sys, B.field(), x, w), u, allowance);
}

bool zcbf_admissible(const ControlAffineSystem& sys, const ZeroingBarrier& Z,
                     const Vector& x, const Vector& w, const Vector& u) {
  const double hv = Z.h.value(x);
  const bool in_domain = Z.domain ? Z.domain(x) : hv >= 0.0;
  if (!in_domain) {
    throw DomainError("zeroing barrier '" + Z.h.name() +
                      "' evaluated outside its domain at " + describe(x));
  }
  return zcbf_condition(lie_derivatives(sys, Z.h, x, w), u, Z.alpha(hv));
}

BoundedMonotoneMap BoundedMonotoneMap::shifted_atan() {
  return BoundedMonotoneMap{
      "atan+pi/2",
      [](double s) { return std::atan(s) + std::numbers::pi / 2.0; },
      [](double s) { return 1.0 / (1.0 + s * s); }, std::numbers::pi};
}

ScalarField iterated_lie_derivative(const ControlAffineSystem& sys,
                                    const ScalarField& h, int k,
                                    const Vector& w) {
  if (k < 0) throw ConstructionError("iterated Lie derivative: k < 0");
  ScalarField current = h;
  for (int i = 1; i <= k; ++i) {
    const ScalarField prev = current;
    const std::string name = "L_f^" + std::to_string(i) + "(" + h.name() + ")";
    current = ScalarField::finite_difference(
        name, [sys, prev, w](const Vector& x) {
          return prev.gradient(x).dot(sys.drift(x, w));
        });
  }
  return current;
}

ReciprocalBarrier lift_relative_degree(
    const ControlAffineSystem& sys, const SafeSetDescriptor& set, int r,
    const BoundedMonotoneMap& map, double gamma,
    const std::optional<InputPolytope>& input_bounds, const Vector& w_in,
    const LiftOptions& options) {
  if (r < 2) throw ConstructionError("lift_relative_degree: r must be >= 2");
  if (input_bounds) {
    throw ConstructionError(
        "lift_relative_degree: input-bounded systems are not supported");
  }
  if (!map.value || !map.derivative || !(map.upper_bound > 0.0)) {
    throw ConstructionError("lift_relative_degree: incomplete bounded map");
  }
  const Vector w = w_in.size() == 0 ? sys.zero_exogenous() : w_in;
  const ScalarField& h = set.h();

  std::mt19937_64 rng(options.seed);
  const auto samples = set.sample_interior(rng, options.samples);
  if (samples.empty()) {
    throw ConstructionError("lift_relative_degree: no interior samples");
  }

  std::vector<ScalarField> derivs;
  for (int k = 0; k < r; ++k) derivs.push_back(iterated_lie_derivative(sys, h, k, w));

  std::ostringstream offending;
  int failures = 0;
  for (const Vector& x : samples) {
    const Matrix g = sys.input_map(x);
    for (int k = 0; k + 1 < r; ++k) {
      const Vector lg = g.transpose() * derivs[k].gradient(x);
      const double scale = 1.0 + derivs[k].gradient(x).norm() * g.norm();
      if (lg.cwiseAbs().maxCoeff() > options.relative_degree_tolerance * scale) {
        if (failures++ < 5) {
          offending << " L_g L_f^" << k << " h != 0 at " << describe(x) << ";";
        }
      }
    }
    const Vector top = g.transpose() * derivs[r - 1].gradient(x);
    if (top.cwiseAbs().maxCoeff() <= options.relative_degree_tolerance) {
      if (failures++ < 5) {
        offending << " L_g L_f^" << (r - 1) << " h = 0 at " << describe(x) << ";";
      }
    }
  }
  if (failures > 0) {
    throw ConstructionError("lift_relative_degree: relative degree " +
                            std::to_string(r) + " check failed at " +
                            std::to_string(failures) + " sample(s):" +
                            offending.str());
  }

  const ScalarField top = derivs[r - 1];
  auto B = ScalarField::closed_form(
      "lifted_rbf(" + h.name() + ")",
      [h, top, map](const Vector& x) {
        return 1.0 / h.value(x) + map.value(top.value(x));
      },
      [h, top, map](const Vector& x) -> Vector {
        const double hv = h.value(x);
        return -h.gradient(x) / (hv * hv) +
               map.derivative(top.value(x)) * top.gradient(x);
      });
  return ReciprocalBarrier(h, std::move(B), ReciprocalForm::kLifted, gamma);
}

ScalarField induced_lyapunov(const ZeroingBarrier& Z) {
  if (!Z.domain) {
    throw ConstructionError(
        "induced_lyapunov: the barrier's domain must strictly contain C");
  }
  const ScalarField h = Z.h;
  const auto domain = Z.domain;
  auto check = [h, domain](const Vector& x) {
    if (!domain(x)) {
      throw DomainError("induced Lyapunov function of '" + h.name() +
                        "' evaluated outside its domain at " + describe(x));
    }
  };
  return ScalarField::closed_form(
      "V_C(" + h.name() + ")",
      [h, check](const Vector& x) {
        check(x);
        return std::max(0.0, -h.value(x));
      },
      [h, check](const Vector& x) -> Vector {
        check(x);
        if (h.value(x) >= 0.0) return Vector::Zero(x.size());
        return -h.gradient(x);
      });
}

}  // namespace cbfqp
