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
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "cbfqp/system_model.hpp"

namespace cbfqp {

// Interior of C means h > kInteriorFloor; the boundary shell is |h| <= kShellTolerance.
inline constexpr double kInteriorFloor = 1e-9;
inline constexpr double kShellTolerance = 1e-6;

// Strictly increasing map with value 0 at 0. Extended functions are defined
// on the whole real line, standard ones on [0, inf).
class ClassKFunction {
 public:
  static ClassKFunction linear(double gamma);
  // gamma * sign(s) * |s|^k
  static ClassKFunction power(double gamma, double k);
  // Validated by 50 monotonicity probes on [-probe_range, probe_range]
  // (or [0, probe_range] when not extended).
  static ClassKFunction custom(std::string name,
                               std::function<double(double)> fn, bool extended,
                               double probe_range = 10.0);

  double operator()(double s) const;
  bool extended() const { return extended_; }
  const std::string& name() const { return name_; }

 private:
  ClassKFunction(std::string name, std::function<double(double)> fn,
                 bool extended);
  void probe(double range) const;

  std::string name_;
  std::function<double(double)> fn_;
  bool extended_;
};

enum class ReciprocalForm { kLog, kInverse, kLifted };

const char* to_string(ReciprocalForm form);

// B(x) built from h on Int(C). The decay allowance is alpha_3 = gamma / B.
class ReciprocalBarrier {
 public:
  ReciprocalBarrier(ScalarField h, ScalarField B, ReciprocalForm form,
                    double gamma);

  const ScalarField& h() const { return h_; }
  const ScalarField& field() const { return B_; }
  ReciprocalForm form() const { return form_; }
  double gamma() const { return gamma_; }

  // Throw BoundaryViolation when h(x) <= kInteriorFloor.
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  // gamma / B(x)
  double decay_allowance(const Vector& x) const;

 private:
  void require_interior(const Vector& x) const;

  ScalarField h_;
  ScalarField B_;
  ReciprocalForm form_;
  double gamma_;
};

// h with an extended class-K rate and a domain D containing C.
struct ZeroingBarrier {
  ScalarField h;
  ClassKFunction alpha;
  // Membership in D. Empty means D = C (no margin outside the safe set).
  std::function<bool(const Vector&)> domain;
};

using CbfRow = std::variant<ReciprocalBarrier, ZeroingBarrier>;

const ScalarField& level_function(const CbfRow& row);

using StateSampler = std::function<Vector(std::mt19937_64&)>;

// Level function plus a sampler over a region meeting C, its boundary and D\C.
class SafeSetDescriptor {
 public:
  SafeSetDescriptor(ScalarField h, StateSampler sampler);

  const ScalarField& h() const { return h_; }
  Vector draw(std::mt19937_64& rng) const { return sampler_(rng); }

  std::vector<Vector> sample_interior(std::mt19937_64& rng, int count,
                                      int max_draws = 1000000) const;
  std::vector<Vector> sample_exterior(std::mt19937_64& rng, int count,
                                      int max_draws = 1000000) const;
  // States with |h| <= kShellTolerance, found by bisection on segments
  // joining an interior and an exterior draw.
  std::vector<Vector> sample_shell(std::mt19937_64& rng, int count) const;

 private:
  ScalarField h_;
  StateSampler sampler_;
};

// Log form B = -log(h / (1 + h)); inverse form B = 1 / h.
ReciprocalBarrier make_reciprocal(const ScalarField& h, ReciprocalForm form,
                                  double gamma);

ZeroingBarrier make_zeroing(const ScalarField& h, ClassKFunction alpha,
                            std::function<bool(const Vector&)> domain = {});

// Pointwise row checks on precomputed Lie derivatives.
bool rcbf_condition(const LieDerivatives& lie_b, const Vector& u,
                    double decay_allowance);
bool zcbf_condition(const LieDerivatives& lie_h, const Vector& u,
                    double alpha_of_h);

// L_f B + L_g B u <= gamma / B. Throws DomainError outside Int(C).
bool rcbf_admissible(const ControlAffineSystem& sys, const ReciprocalBarrier& B,
                     const Vector& x, const Vector& w, const Vector& u);

// L_f h + L_g h u + alpha(h) >= 0. Throws DomainError outside D.
bool zcbf_admissible(const ControlAffineSystem& sys, const ZeroingBarrier& Z,
                     const Vector& x, const Vector& w, const Vector& u);

// Bounded, strictly increasing map used to lift relative degree.
struct BoundedMonotoneMap {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double upper_bound = 0.0;  // H_max

  // atan(s) + pi/2, with values in (0, pi).
  static BoundedMonotoneMap shifted_atan();
};

// Iterated Lie derivative L_f^k h with exogenous input held at w. Gradients
// of the k >= 1 terms use central differences.
ScalarField iterated_lie_derivative(const ControlAffineSystem& sys,
                                    const ScalarField& h, int k,
                                    const Vector& w);

struct LiftOptions {
  int samples = 200;
  double relative_degree_tolerance = 1e-8;
  std::uint64_t seed = 7;
};

// B_r = 1/h + H(L_f^{r-1} h). Checks L_g L_f^k h = 0 for k <= r-2 and
// L_g L_f^{r-1} h != 0 on interior samples; refuses input-bounded systems.
ReciprocalBarrier lift_relative_degree(
    const ControlAffineSystem& sys, const SafeSetDescriptor& set, int r,
    const BoundedMonotoneMap& map, double gamma,
    const std::optional<InputPolytope>& input_bounds = std::nullopt,
    const Vector& w = Vector(), const LiftOptions& options = {});

// V_C = 0 on C and -h on D \ C.
ScalarField induced_lyapunov(const ZeroingBarrier& Z);

}  // namespace cbfqp
