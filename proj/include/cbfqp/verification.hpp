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

#include <cstdint>
#include <vector>

#include "cbfqp/barrier.hpp"

namespace cbfqp {

// Sampling-based certificates. These are evidence at sample resolution, not
// proofs.

struct AlphaEstimate {
  double r = 0.0;
  double alpha = 0.0;         // running max of -inf L_f h over the slice
  double lower_envelope = 0.0;  // raw inf L_f h over {0 <= h <= r}
  int slice_samples = 0;
};

struct SamplingOptions {
  int samples = 10000;
  int shell_samples = 200;
  std::uint64_t seed = 1;
};

// alpha_hat(r) = -inf { L_f h(x) : 0 <= h(x) <= r } over sampled states,
// made non-decreasing by a running max. The r = 0 slice is the boundary shell.
// Throws EvaluationError naming the slice when it contains no sample.
std::vector<AlphaEstimate> estimate_zbf_alpha(
    const ControlAffineSystem& sys, const SafeSetDescriptor& set,
    const std::vector<double>& r_grid, const Vector& w = Vector(),
    const SamplingOptions& options = {});

struct GammaEstimate {
  double gamma = 0.0;  // max(0, max -L_f h / h^k)
  int samples = 0;
  Vector worst_state;
};

// Smallest gamma with L_f h >= -gamma h^k on the sampled states. Every draw
// must lie in Int(C); a draw with h <= 0 throws DomainError.
GammaEstimate estimate_contractivity_gamma(const ControlAffineSystem& sys,
                                           const ScalarField& h, int k,
                                           const StateSampler& sampler,
                                           const Vector& w = Vector(),
                                           const SamplingOptions& options = {});

// Integrates z' = -alpha(z) z^2 from z(0) = 1 / y0 and returns 1 / z(t).
// Throws EvaluationError with the last valid time if the integrator fails.
double comparison_ode_solution(const ClassKFunction& alpha, double y0, double t);

// Same integration sampled at each requested time (ascending).
std::vector<double> comparison_ode_trajectory(const ClassKFunction& alpha,
                                              double y0,
                                              const std::vector<double>& times);

}  // namespace cbfqp
