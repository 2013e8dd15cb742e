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

#include "cbfqp/verification.hpp"

#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbfqp/errors.hpp"

namespace cbfqp {

std::vector<AlphaEstimate> estimate_zbf_alpha(const ControlAffineSystem& sys,
                                              const SafeSetDescriptor& set,
                                              const std::vector<double>& r_grid,
                                              const Vector& w_in,
                                              const SamplingOptions& options) {
  const Vector w = w_in.size() == 0 ? sys.zero_exogenous() : w_in;
  std::mt19937_64 rng(options.seed);

  struct Sample {
    double h;
    double lf;
  };
  std::vector<Sample> pool;
  pool.reserve(options.samples + options.shell_samples);
  auto add = [&](const Vector& x) {
    pool.push_back({set.h().value(x), lie_derivatives(sys, set.h(), x, w).lf});
  };
  for (int i = 0; i < options.samples; ++i) add(set.draw(rng));
  for (const Vector& x : set.sample_shell(rng, options.shell_samples)) add(x);

  std::vector<AlphaEstimate> out;
  double running = -std::numeric_limits<double>::infinity();
  for (double r : r_grid) {
    if (r < 0.0) throw ConstructionError("estimate_zbf_alpha: negative r");
    double inf_lf = std::numeric_limits<double>::infinity();
    int count = 0;
    for (const Sample& s : pool) {
      if (s.h >= -kShellTolerance && s.h <= r + kShellTolerance) {
        inf_lf = std::min(inf_lf, s.lf);
        ++count;
      }
    }
    if (count == 0) {
      std::ostringstream os;
      os << "estimate_zbf_alpha: slice {0 <= h <= " << r << "} of '"
         << set.h().name() << "' contains no samples";
      throw EvaluationError(os.str());
    }
    running = std::max(running, -inf_lf);
    out.push_back({r, running, inf_lf, count});
  }
  return out;
}

GammaEstimate estimate_contractivity_gamma(const ControlAffineSystem& sys,
                                           const ScalarField& h, int k,
                                           const StateSampler& sampler,
                                           const Vector& w_in,
                                           const SamplingOptions& options) {
  if (k < 1) throw ConstructionError("estimate_contractivity_gamma: k < 1");
  if (!sampler) throw ConstructionError("estimate_contractivity_gamma: no sampler");
  const Vector w = w_in.size() == 0 ? sys.zero_exogenous() : w_in;
  std::mt19937_64 rng(options.seed);
  GammaEstimate out;
  for (int i = 0; i < options.samples; ++i) {
    const Vector x = sampler(rng);
    const double hv = h.value(x);
    if (!(hv > 0.0)) {
      std::ostringstream os;
      os << "estimate_contractivity_gamma: sample with h = " << hv
         << " inside the claimed interior of '" << h.name() << "'";
      throw DomainError(os.str());
    }
    const double ratio = -lie_derivatives(sys, h, x, w).lf / std::pow(hv, k);
    if (ratio > out.gamma) {
      out.gamma = ratio;
      out.worst_state = x;
    }
    ++out.samples;
  }
  return out;
}

std::vector<double> comparison_ode_trajectory(const ClassKFunction& alpha,
                                              double y0,
                                              const std::vector<double>& times) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 1>;
  if (!(y0 > 0.0)) throw ConstructionError("comparison ODE: y0 must be positive");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw ConstructionError("comparison ODE: times must be ascending and >= 0");
    }
  }

  auto rhs = [&alpha](const State& z, State& dz, double) {
    dz[0] = -alpha(z[0]) * z[0] * z[0];
  };
  auto stepper = odeint::make_controlled(1e-13, 1e-13,
                                         odeint::runge_kutta_dopri5<State>());

  State z{1.0 / y0};
  double t = 0.0;
  std::vector<double> out;
  out.reserve(times.size());
  for (double target : times) {
    if (target > t) {
      try {
        odeint::integrate_adaptive(
            stepper, rhs, z, t, target, std::min(1e-3, target - t),
            [&t](const State&, double tt) { t = tt; });
      } catch (const std::exception& e) {
        std::ostringstream os;
        os << "comparison ODE integration failed after t = " << t << ": "
           << e.what();
        throw EvaluationError(os.str());
      }
      t = target;
    }
    if (!(z[0] > 0.0) || !std::isfinite(z[0])) {
      std::ostringstream os;
      os << "comparison ODE left (0, inf) near t = " << t;
      throw EvaluationError(os.str());
    }
    out.push_back(1.0 / z[0]);
  }
  return out;
}

double comparison_ode_solution(const ClassKFunction& alpha, double y0,
                               double t) {
  return comparison_ode_trajectory(alpha, y0, {t}).front();
}

}  // namespace cbfqp
