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

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cbfqp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// minimize 1/2 z'Hz + F'z  subject to  A z <= b  (one row per constraint).
class QpProblem {
 public:
  // Throws ConstructionError unless H is square, symmetric within 1e-12
  // (relative to its largest entry) and positive definite.
  QpProblem(Matrix H, Vector F);

  void add_row(const Vector& a, double b);

  int dim() const { return static_cast<int>(H_.rows()); }
  int num_rows() const { return static_cast<int>(b_.size()); }
  const Matrix& H() const { return H_; }
  const Vector& F() const { return F_; }
  const Matrix& A() const { return A_; }
  const Vector& b() const { return b_; }
  Vector row(int i) const { return A_.row(i).transpose(); }

  // Spectral condition number of H.
  double condition_number() const;

 private:
  Matrix H_;
  Vector F_;
  Matrix A_;
  Vector b_;
};

enum class QpStatus { kOptimal, kInfeasible, kDegenerate };

const char* to_string(QpStatus status);

struct QpSolution {
  QpStatus status = QpStatus::kDegenerate;
  Vector z;
  // Per-row multipliers, <= 0 (stationarity reads Hz + F = sum_i lambda_i a_i).
  Vector multipliers;
  std::vector<int> active_set;
  int iterations = 0;
  // Nonnegative row weights y with y'A = 0 and y'b < 0 when infeasible.
  Vector infeasibility_certificate;
  std::string diagnostics;
};

// Constraint data transformed into the H-weighted inner product <v,w> = v'Hw.
struct GramData {
  Vector u_bar;   // unconstrained minimizer -H^{-1}F
  Vector y_bar1;  // H^{-1} a_1
  Vector y_bar2;  // H^{-1} a_2
  double p_bar1 = 0.0;  // b_1 - a_1'u_bar
  double p_bar2 = 0.0;
  Eigen::Matrix2d G;  // G_ij = <y_bar_i, y_bar_j>
};

// Requires exactly two rows. Throws ConstructionError otherwise.
GramData assemble_h_inner_product(const QpProblem& problem);

// The three regions of the two-row closed form.
enum class ClosedFormBranch {
  kFirstInactive,   // lambda_1 = 0
  kSecondInactive,  // lambda_2 = 0
  kBothActive,
};

ClosedFormBranch select_branch(const GramData& gram);

// Multipliers given by the formula of one branch, regardless of its gate.
Eigen::Vector2d branch_multipliers(const GramData& gram,
                                   ClosedFormBranch branch);

// Exact solution of a two-row problem. Returns kDegenerate when the rows are
// dependent under the H inner product.
QpSolution solve_two_constraint_closed_form(const QpProblem& problem);

struct ActiveSetOptions {
  int max_iterations = 100;
};

// Dual active-set method (Goldfarb-Idnani) for small dense problems.
// Ties between equally violated rows add the lowest index; ties between
// blocking multipliers drop the lowest index.
QpSolution solve_active_set(const QpProblem& problem,
                            const ActiveSetOptions& options = {});

// Scale-free KKT measures. Rows are normalized to unit length first, so
// primal violation is a distance in z-space.
struct KktResiduals {
  double stationarity = 0.0;    // relative to the magnitude of its terms
  double primal = 0.0;          // max normalized row violation / (1 + |z|)
  double dual = 0.0;            // largest positive multiplier, relative
  double complementarity = 0.0; // max |lambda_i * slack_i|, relative
};

KktResiduals kkt_residuals(const QpProblem& problem, const QpSolution& sol);

}  // namespace cbfqp
