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

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library code they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

struct BrakingResult {
  double conservative = 0.0;  // tau v_f(0) + max_t (x_f(t) - x_l(t))
  double optimal = 0.0;       // max_t (x_f(t) - x_l(t) + tau v_f(t))
};

// Both vehicles brake at their limits from (v_f, v_l); positions are
// advanced exactly for piecewise-linear speed over each step of length dt,
// and the maxima are taken over the sampled grid on [0, T_f].
inline BrakingResult braking_margins(double v_f, double v_l, double a_f,
                                     double a_l, double g, double tau,
                                     double dt = 1e-4) {
  const double df = a_f * g;
  const double dl = a_l * g;
  double vf = v_f, vl = v_l, gap_loss = 0.0;
  BrakingResult r{tau * v_f, tau * v_f};
  auto advance = [dt](double& v, double decel) {
    const double t_stop = v / decel;
    double dist;
    if (t_stop <= dt) {
      dist = 0.5 * v * t_stop;
      v = 0.0;
    } else {
      dist = v * dt - 0.5 * decel * dt * dt;
      v -= decel * dt;
    }
    return dist;
  };
  while (vf > 0.0) {
    gap_loss += advance(vf, df) - advance(vl, dl);
    r.conservative = std::max(r.conservative, tau * v_f + gap_loss);
    r.optimal = std::max(r.optimal, gap_loss + tau * vf);
  }
  return r;
}

// Minimizer of 1/2 h z^2 + f z subject to a z <= b for scalar z.
inline double scalar_qp(double h, double f, double a, double b) {
  double z = -f / h;
  if (a * z > b) z = b / a;
  return z;
}

// Minimizer of 1/2 z'Hz + F'z s.t. A z <= b by enumerating every candidate
// active subset and keeping the cheapest primal-feasible stationary point.
// Exponential in the row count; meant for a handful of rows.
inline std::optional<Eigen::VectorXd> enumerate_qp(const Eigen::MatrixXd& H,
                                                  const Eigen::VectorXd& F,
                                                  const Eigen::MatrixXd& A,
                                                  const Eigen::VectorXd& b,
                                                  double tol = 1e-9) {
  const int n = static_cast<int>(H.rows());
  const int m = static_cast<int>(A.rows());
  std::optional<Eigen::VectorXd> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> rows;
    for (int i = 0; i < m; ++i) {
      if (mask & (1u << i)) rows.push_back(i);
    }
    const int k = static_cast<int>(rows.size());
    if (k > n) continue;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    K.topLeftCorner(n, n) = H;
    rhs.head(n) = -F;
    for (int j = 0; j < k; ++j) {
      K.block(0, n + j, n, 1) = A.row(rows[j]).transpose();
      K.block(n + j, 0, 1, n) = A.row(rows[j]);
      rhs[n + j] = b[rows[j]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd z = sol.head(n);
    if (((A * z - b).array() > tol * (1.0 + b.cwiseAbs().maxCoeff())).any()) {
      continue;
    }
    const double cost = 0.5 * z.dot(H * z) + F.dot(z);
    if (cost < best_cost) {
      best_cost = cost;
      best = z;
    }
  }
  return best;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
  return out;
}

}  // namespace oracle
